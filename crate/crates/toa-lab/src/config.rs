//! JSON experiment configuration. Every section is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toa_core::{GaussianSpec, Grid1D};

use crate::error::{LabError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must match the experiment being run when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub packet: PacketConfig,
    /// Superposition used by the two-packet experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<Vec<WeightedPacket>>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    /// Target spacing, for experiments that size their grid per run.
    pub dx: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub m: Option<f64>,
    pub k0: Option<f64>,
    pub sigma: Option<f64>,
    pub x0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedPacket {
    pub weight: f64,
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoosterConfig {
    pub w: f64,
    pub v1: f64,
    pub v2: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Detector coupling; omitted means the experiment's default.
    pub alpha: Option<f64>,
    pub n_triggers: Option<Vec<u32>>,
    pub trials: Option<usize>,
    /// Clock accuracy, or accuracies for experiments that compare several.
    pub clock_dt: Option<Vec<f64>>,
    /// Clock accuracy in units of `1/E_k`.
    pub accuracy_scan: Option<Vec<f64>>,
    pub n_slices: Option<Vec<usize>>,
    pub span_factor: Option<Vec<f64>>,
    pub x_a: Option<f64>,
    /// Measurement intervals for the repeated-projection protocol.
    pub deltas: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub epsilon: Option<f64>,
    pub booster: Option<BoosterConfig>,
    pub cascade_x_a: Option<f64>,
    pub kicks: Option<Vec<f64>>,
    /// Arrival-time spreads of coherent states.
    pub widths: Option<Vec<f64>>,
    /// Envelope width of the standing-wave fixture.
    pub envelope: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_total: Option<f64>,
    /// Fraction of the largest stable step.
    pub safety: Option<f64>,
}

/// Canonical single-packet defaults.
pub const DEFAULT_M: f64 = 1.0;
pub const DEFAULT_K0: f64 = 5.0;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_X0: f64 = -15.0;
pub const DEFAULT_SAFETY: f64 = 0.9;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn mass(&self) -> Result<f64> {
        positive("packet.m", self.packet.m.unwrap_or(DEFAULT_M))
    }

    /// The configured packet with per-experiment fallbacks.
    pub fn gaussian(&self, x0: f64, k0: f64, sigma: f64) -> Result<GaussianSpec> {
        let spec = GaussianSpec {
            x0: self.packet.x0.unwrap_or(x0),
            k0: self.packet.k0.unwrap_or(k0),
            sigma: positive("packet.sigma", self.packet.sigma.unwrap_or(sigma))?,
            m: self.mass()?,
        };
        finite("packet.x0", spec.x0)?;
        finite("packet.k0", spec.k0)?;
        Ok(spec)
    }

    pub fn grid_or(&self, half_width: f64, n: usize) -> Result<Grid1D> {
        Ok(Grid1D::centered(self.grid.half_width.unwrap_or(half_width), self.grid.n.unwrap_or(n))?)
    }

    pub fn safety(&self) -> Result<f64> {
        let s = self.evolution.safety.unwrap_or(DEFAULT_SAFETY);
        if !(s > 0.0 && s < 1.0) {
            return Err(LabError::Config(format!("evolution.safety = {s} must lie in (0, 1)")));
        }
        Ok(s)
    }
}

pub fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::Config(format!("{name} = {v} must be positive")))
    }
}

pub fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::Config(format!("{name} = {v} must be finite")))
    }
}

/// Scalar taken from a one-element list, or the default.
pub fn single<T: Copy>(name: &str, v: &Option<Vec<T>>, default: T) -> Result<T> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(LabError::Config(format!("{name} takes a single value here"))),
    }
}

pub fn non_empty<T: Clone>(name: &str, v: &Option<Vec<T>>, default: &[T]) -> Result<Vec<T>> {
    let out = v.clone().unwrap_or_else(|| default.to_vec());
    if out.is_empty() {
        return Err(LabError::Config(format!("{name} must not be empty")));
    }
    Ok(out)
}
