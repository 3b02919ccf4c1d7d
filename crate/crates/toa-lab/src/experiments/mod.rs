//! The experiment registry.

mod booster;
mod clocked;
mod measurement;
mod operator;
mod trigger;

use serde::Serialize;
use toa_core::{GaussianSpec, Grid1D};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::ExperimentOutput;

pub use trigger::strong_coupling;

pub type RunFn = fn(&ExperimentConfig, u64) -> Result<ExperimentOutput>;
pub type ValidateFn = fn(&ExperimentConfig) -> Result<serde_json::Value>;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    /// Topic of the underlying argument.
    pub topic: &'static str,
    /// Acceptance criteria the experiment exercises.
    pub criteria: &'static [u8],
    pub validate: ValidateFn,
    pub run: RunFn,
}

pub static REGISTRY: [Experiment; 15] = [
    Experiment {
        name: "trigger-flip",
        description: "wavepacket through a strongly coupled spin trigger; flip probability",
        topic: "spin trigger detector",
        criteria: &[1],
        validate: trigger::validate_flip,
        run: trigger::run_flip,
    },
    Experiment {
        name: "multi-trigger",
        description: "probability that at least one of N triggers flips",
        topic: "spin trigger detector",
        criteria: &[2],
        validate: trigger::validate_multi,
        run: trigger::run_multi,
    },
    Experiment {
        name: "clock-accuracy-scan",
        description: "detection probability against clock accuracy, with the strong-coupling limit law",
        topic: "clock-coupled detector: accuracy limit",
        criteria: &[4, 5],
        validate: clocked::validate_scan,
        run: clocked::run_scan,
    },
    Experiment {
        name: "two-gaussian",
        description: "two-speed packet read by a coarse and a fine clock; slow-peak suppression",
        topic: "clock-coupled detector: arrival distribution",
        criteria: &[6],
        validate: clocked::validate_two,
        run: clocked::run_two,
    },
    Experiment {
        name: "zero-current",
        description: "standing wave centered on the trigger; flip probability and current",
        topic: "flux and detection",
        criteria: &[7],
        validate: trigger::validate_null,
        run: trigger::run_null,
    },
    Experiment {
        name: "zeno-scan",
        description: "repeated half-line projections at shrinking intervals",
        topic: "repeated measurement and the Zeno limit",
        criteria: &[8],
        validate: measurement::validate_zeno,
        run: measurement::run_zeno,
    },
    Experiment {
        name: "current-vs-arrival",
        description: "probability current against the rate of change of the weight beyond the detector",
        topic: "current as an arrival density",
        criteria: &[9],
        validate: measurement::validate_current,
        run: measurement::run_current,
    },
    Experiment {
        name: "presence-vs-arrival",
        description: "presence density at the detector against the flux density; projector commutators",
        topic: "current as an arrival density",
        criteria: &[9],
        validate: measurement::validate_presence,
        run: measurement::run_presence,
    },
    Experiment {
        name: "cascade",
        description: "clock driven directly by the particle position; coarse against fine clock",
        topic: "clock-coupled detector: cascade model",
        criteria: &[5],
        validate: clocked::validate_cascade,
        run: clocked::run_cascade,
    },
    Experiment {
        name: "booster",
        description: "two-channel step with a spin-flip coupling; wavepacket against stationary amplitudes",
        topic: "detector with amplification",
        criteria: &[14],
        validate: booster::validate,
        run: booster::run,
    },
    Experiment {
        name: "toa-spectrum",
        description: "arrival-time representation, completeness, Hermiticity and the commutator",
        topic: "arrival-time operator",
        criteria: &[10],
        validate: operator::validate_spectrum,
        run: operator::run_spectrum,
    },
    Experiment {
        name: "toa-drift",
        description: "time dependence of the regularized arrival-time expectation",
        topic: "arrival-time operator: regularization",
        criteria: &[10],
        validate: operator::validate_drift,
        run: operator::run_drift,
    },
    Experiment {
        name: "toa-kernel",
        description: "overlap kernel of arrival-time eigenstates, smeared by test functions",
        topic: "arrival-time operator: non-orthogonality",
        criteria: &[11],
        validate: operator::validate_kernel,
        run: operator::run_kernel,
    },
    Experiment {
        name: "coherent-energy",
        description: "mean energy of coherent arrival-time states and the impulsive energy kick",
        topic: "arrival-time operator: measurement",
        criteria: &[12, 13],
        validate: operator::validate_coherent,
        run: operator::run_coherent,
    },
    Experiment {
        name: "eigenstate-trigger",
        description: "coherent arrival-time states meeting a clock of matching accuracy",
        topic: "arrival-time operator and clocks",
        criteria: &[12],
        validate: clocked::validate_eigenstate,
        run: clocked::run_eigenstate,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub(crate) struct GridParams {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl From<Grid1D> for GridParams {
    fn from(g: Grid1D) -> Self {
        Self { x_min: g.x_min(), x_max: g.x_max(), n: g.n() }
    }
}

impl GridParams {
    fn build(&self) -> Result<Grid1D> {
        Ok(Grid1D::new(self.x_min, self.x_max, self.n)?)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub(crate) struct PacketParams {
    x0: f64,
    k0: f64,
    sigma: f64,
    m: f64,
}

impl From<GaussianSpec> for PacketParams {
    fn from(g: GaussianSpec) -> Self {
        Self { x0: g.x0, k0: g.k0, sigma: g.sigma, m: g.m }
    }
}

impl PacketParams {
    fn spec(&self) -> GaussianSpec {
        GaussianSpec { x0: self.x0, k0: self.k0, sigma: self.sigma, m: self.m }
    }
}
