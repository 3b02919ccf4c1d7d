//! Numerical models of quantum arrival-time measurements.
//!
//! Units: ħ = 1, the mass is always an explicit parameter.

pub mod clock;
pub mod error;
pub mod grid;
pub mod measurement;
pub mod propagator;
pub mod scattering;
pub mod toa;

pub use error::{Error, Result};
pub use grid::{expectation, make_gaussian, transform, GaussianSpec, Grid1D, Observable, Repr, SpinorWave, WaveFunction};
