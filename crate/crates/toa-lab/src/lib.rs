//! Named, config-driven experiments on arrival-time measurement models.
//!
//! Each run writes `series-*.csv`, `summary.json` and `manifest.json` into
//! `<out>/<experiment>/`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use experiments::{find, Experiment, REGISTRY};
pub use output::{Check, ExperimentOutput, Series};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "TOA_LAB_OUT";
pub const DEFAULT_SEED: u64 = 0;

/// Finished run: the output and where it was written.
#[derive(Debug)]
pub struct RunReport {
    pub output: ExperimentOutput,
    pub dir: PathBuf,
    pub seed: u64,
}

impl RunReport {
    /// 0 if every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.output.passed() {
            0
        } else {
            1
        }
    }
}

/// The experiment for `name`, after checking it against the config's own `experiment` key.
pub fn resolve(name: &str, cfg: &ExperimentConfig) -> Result<&'static Experiment> {
    let exp = find(name).ok_or_else(|| LabError::UnknownExperiment(name.into()))?;
    match &cfg.experiment {
        Some(n) if n != name => Err(LabError::Config(format!("config is for experiment '{n}', not '{name}'"))),
        _ => Ok(exp),
    }
}

/// Output root: explicit argument, then the config, then [`OUT_ENV`], then `./runs`.
pub fn output_root(explicit: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Resolved parameters for a run, without executing it.
pub fn validate(name: &str, cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    (resolve(name, cfg)?.validate)(cfg)
}

/// Executes `name` in memory.
pub fn execute(name: &str, cfg: &ExperimentConfig, seed: Option<u64>) -> Result<(ExperimentOutput, u64)> {
    let exp = resolve(name, cfg)?;
    (exp.validate)(cfg)?;
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    Ok(((exp.run)(cfg, seed)?, seed))
}

/// Executes `name` and writes its outputs under `out_root/name`.
pub fn run_experiment(name: &str, cfg: &ExperimentConfig, out_root: &Path, seed: Option<u64>) -> Result<RunReport> {
    let start = Instant::now();
    let (output, seed) = execute(name, cfg, seed)?;
    let dir = out_root.join(name);
    let record = output::RunRecord { name, config: cfg, seed, wall_seconds: start.elapsed().as_secs_f64() };
    output::write_run(&dir, &record, &output)?;
    Ok(RunReport { output, dir, seed })
}
