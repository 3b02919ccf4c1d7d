use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toa_lab::{output_root, run_experiment, validate, ExperimentConfig, LabError, REGISTRY};

#[derive(Parser)]
#[command(name = "toa-lab", version, about = "Run arrival-time measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        name: String,
        #[arg(long)]
        config: PathBuf,
        /// Output root; the run goes into `<out>/<name>/`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List registered experiments.
    List,
    /// Check a config and print the resolved parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Experiment to validate against; defaults to the config's `experiment` key.
        name: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, LabError> {
    match cmd {
        Command::List => {
            for e in &REGISTRY {
                let criteria: Vec<String> = e.criteria.iter().map(|c| c.to_string()).collect();
                println!("{:<20} {} [{}; criteria {}]", e.name, e.description, e.topic, criteria.join(","));
            }
            Ok(0)
        }
        Command::Validate { config, name } => {
            let cfg = ExperimentConfig::load(&config)?;
            let name = name.or_else(|| cfg.experiment.clone()).ok_or_else(|| LabError::Config("no experiment named on the command line or in the config".into()))?;
            let params = validate(&name, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&params).map_err(|e| LabError::Output(e.to_string()))?);
            Ok(0)
        }
        Command::Run { name, config, out, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&name, &cfg, &output_root(out.as_deref(), &cfg), seed)?;
            for c in &report.output.checks {
                println!("{} {} measured={:e} tolerance={:e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.tolerance);
            }
            println!("outputs: {}", report.dir.display());
            Ok(report.exit_code() as u8)
        }
    }
}
