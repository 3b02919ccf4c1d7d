//! Repeated projective arrival measurements, probability current and presence density.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{forward_in_place, inverse_in_place, Grid1D, WaveFunction};
use crate::propagator::{free_evolve, guard_probability, WRAP_TOLERANCE};

/// Largest inside weight tolerated in the initial state.
pub const SUPPORT_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementSchedule {
    pub x_a: f64,
    pub delta: f64,
    pub t_max: f64,
    pub dt: f64,
    pub m: f64,
}

impl MeasurementSchedule {
    /// Schedule whose propagation step equals the measurement interval.
    pub fn new(x_a: f64, delta: f64, t_max: f64, m: f64) -> Self {
        Self { x_a, delta, t_max, dt: delta, m }
    }

    pub fn n_measurements(&self) -> usize {
        (self.t_max / self.delta + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.dt > 0.0 && self.t_max > 0.0 && self.m > 0.0) {
            return Err(Error::InvalidParameter("delta, dt, t_max and m must be positive".into()));
        }
        let ratio = self.delta / self.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("delta = {} is not a multiple of dt = {}", self.delta, self.dt)));
        }
        if self.t_max / self.delta > 1e6 {
            return Err(Error::InvalidParameter(format!("{:.0} measurements exceed 1e6", self.t_max / self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalSeries {
    pub times: Vec<f64>,
    /// Joint probabilities: detection in bin `i` and not before.
    pub probabilities: Vec<f64>,
    /// Probability of no detection.
    pub residual: f64,
    pub schedule: Option<MeasurementSchedule>,
}

impl ArrivalSeries {
    pub fn detected(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `Σ P + residual − 1`.
    pub fn closure_error(&self) -> f64 {
        self.detected() + self.residual - 1.0
    }

    /// Distribution conditioned on detection.
    pub fn conditional(&self) -> Result<Vec<f64>> {
        let d = self.detected();
        if !(d > 0.0) {
            return Err(Error::EmptyReadout);
        }
        Ok(self.probabilities.iter().map(|p| p / d).collect())
    }

    pub fn peak_time(&self) -> Option<f64> {
        self.probabilities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.times[i])
    }

    pub fn mean_time(&self) -> Result<f64> {
        let c = self.conditional()?;
        Ok(c.iter().zip(&self.times).map(|(p, t)| p * t).sum())
    }
}

/// Index of the first grid point inside `[x_a, ∞)`.
pub fn detector_index(grid: &Grid1D, x_a: f64) -> usize {
    grid.nearest_index(x_a)
}

/// Sharp split at the grid point nearest `x_a`: `(inside, outside)`.
pub fn project_plus(psi: &WaveFunction, x_a: f64) -> (WaveFunction, WaveFunction) {
    let pos = psi.to_position();
    let i_a = detector_index(pos.grid(), x_a);
    let mut inside = pos.clone();
    let mut outside = pos;
    inside.values_mut()[..i_a].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    outside.values_mut()[i_a..].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    (inside, outside)
}

struct FreePropagator {
    grid: Grid1D,
    phase: Vec<Complex64>,
}

impl FreePropagator {
    fn new(grid: Grid1D, m: f64, t: f64) -> Self {
        let phase = (0..grid.n()).map(|j| Complex64::from_polar(1.0, -grid.k(j).powi(2) / (2.0 * m) * t)).collect();
        Self { grid, phase }
    }

    fn apply(&self, values: &mut [Complex64]) {
        forward_in_place(&self.grid, values);
        values.iter_mut().zip(&self.phase).for_each(|(v, p)| *v *= p);
        inverse_in_place(&self.grid, values);
    }
}

/// Sequential-collapse realization of the repeated half-line measurement.
pub fn repeated_measurement_arrival(psi0: &WaveFunction, schedule: &MeasurementSchedule) -> Result<ArrivalSeries> {
    schedule.validate()?;
    let pos = psi0.to_position();
    let grid = *pos.grid();
    let i_a = detector_index(&grid, schedule.x_a);
    let dx = grid.dx();
    let inside0: f64 = pos.values()[i_a..].iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
    if inside0 > SUPPORT_TOLERANCE {
        return Err(Error::SupportViolation(inside0));
    }
    let prop = FreePropagator::new(grid, schedule.m, schedule.delta);
    let mut survivor = pos.into_values();
    let k_max = schedule.n_measurements();
    let mut times = Vec::with_capacity(k_max);
    let mut probs = Vec::with_capacity(k_max);
    for step in 1..=k_max {
        prop.apply(&mut survivor);
        let g = guard_probability(&grid, std::slice::from_ref(&survivor));
        if g > WRAP_TOLERANCE {
            return Err(Error::WrapAround(g));
        }
        let p: f64 = survivor[i_a..].iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
        survivor[i_a..].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        times.push(step as f64 * schedule.delta);
        probs.push(p);
    }
    let residual = survivor.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
    Ok(ArrivalSeries { times, probabilities: probs, residual, schedule: Some(*schedule) })
}

/// Total detection probability for each interval, in the given order.
pub fn zeno_scan(psi0: &WaveFunction, x_a: f64, deltas: &[f64], t_max: f64, m: f64) -> Result<Vec<(f64, f64)>> {
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("delta values must be strictly descending".into()));
    }
    deltas
        .iter()
        .map(|&d| {
            let s = repeated_measurement_arrival(psi0, &MeasurementSchedule::new(x_a, d, t_max, m))?;
            Ok((d, s.detected()))
        })
        .collect()
}

/// Value and first derivative of the band-limited interpolant at arbitrary `x`.
pub fn interpolate(psi: &WaveFunction, x: f64) -> (Complex64, Complex64) {
    let mom = psi.to_momentum();
    let g = *mom.grid();
    let c = g.dk() / (2.0 * PI).sqrt();
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for (j, a) in mom.values().iter().enumerate() {
        if j == g.n() / 2 {
            continue;
        }
        let k = g.k(j);
        let e = a * Complex64::from_polar(c, k * x);
        v += e;
        d += e * Complex64::new(0.0, k);
    }
    (v, d)
}

/// Probability current `(1/m) Im(ψ* ∂ψ)` at `x`.
pub fn current_at(psi: &WaveFunction, x: f64, m: f64) -> f64 {
    let (v, d) = interpolate(psi, x);
    (v.conj() * d).im / m
}

/// Current at `x_a` under free evolution, sampled at `times`.
pub fn current_series(psi0: &WaveFunction, x_a: f64, times: &[f64], m: f64) -> Vec<f64> {
    let mom = psi0.to_momentum();
    times.iter().map(|&t| current_at(&free_evolve(&mom, m, t), x_a, m)).collect()
}

/// Exact `∫_a^b |ψ|² dx` for the band-limited interpolant, `x_min ≤ a < b ≤ x_max`.
pub fn interval_weight(psi: &WaveFunction, a: f64, b: f64) -> f64 {
    let mom = psi.to_momentum();
    let g = *mom.grid();
    let n = g.n();
    // ψ on a twice-finer grid via zero padding; |ψ|² is then exactly resolved
    let fine = Grid1D::new(g.x_min(), g.x_max(), 2 * n).expect("valid refinement");
    let mut padded = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 0..n {
        if j == n / 2 {
            continue;
        }
        let jj = if j < n / 2 { j } else { j + n };
        padded[jj] = mom.values()[j];
    }
    inverse_in_place(&fine, &mut padded);
    let mut f: Vec<Complex64> = padded.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    forward_in_place(&fine, &mut f);
    let c = fine.dk() / (2.0 * PI).sqrt();
    let mut total = 0.0;
    for (j, fk) in f.iter().enumerate() {
        let k = fine.k(j);
        let integral = if k == 0.0 {
            Complex64::new(b - a, 0.0)
        } else {
            (Complex64::from_polar(1.0, k * b) - Complex64::from_polar(1.0, k * a)) / Complex64::new(0.0, k)
        };
        total += (fk * c * integral).re;
    }
    total
}

/// Weight beyond `x_a` under free evolution at time `t`.
pub fn weight_beyond(psi0: &WaveFunction, x_a: f64, t: f64, m: f64) -> f64 {
    let w = free_evolve(&psi0.to_momentum(), m, t);
    interval_weight(&w, x_a, w.grid().x_max())
}

/// Largest `|dW/dt − j(x_a)|` over `times`, with `dW/dt` from a five-point stencil of step `h`.
pub fn continuity_residual(psi0: &WaveFunction, x_a: f64, times: &[f64], m: f64, h: f64) -> f64 {
    let j = current_series(psi0, x_a, times, m);
    times
        .iter()
        .zip(j)
        .map(|(&t, jt)| {
            let w = |s: f64| weight_beyond(psi0, x_a, t + s, m);
            let dw = (w(-2.0 * h) - 8.0 * w(-h) + 8.0 * w(h) - w(2.0 * h)) / (12.0 * h);
            (dw - jt).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PresenceDistribution {
    pub times: Vec<f64>,
    pub density: Vec<f64>,
}

impl PresenceDistribution {
    /// Trapezoid integral of the density.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.times, &self.density)
    }
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1])).sum()
}

/// `|ψ(x_a,t)|²` normalized over a finite time window.
pub fn presence_distribution(psi0: &WaveFunction, x_a: f64, t_start: f64, t_end: f64, n_t: usize, m: f64) -> Result<PresenceDistribution> {
    if !(t_end > t_start) || n_t < 3 {
        return Err(Error::InvalidParameter("need t_end > t_start and at least 3 samples".into()));
    }
    let mom = psi0.to_momentum();
    let times: Vec<f64> = (0..n_t).map(|i| t_start + (t_end - t_start) * i as f64 / (n_t - 1) as f64).collect();
    let raw: Vec<f64> = times.iter().map(|&t| interpolate(&free_evolve(&mom, m, t), x_a).0.norm_sqr()).collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let edge = raw[0].max(raw[n_t - 1]) / peak;
    if edge > 1e-8 {
        return Err(Error::WindowTooSmall(edge));
    }
    let norm = trapezoid(&times, &raw);
    Ok(PresenceDistribution { density: raw.iter().map(|r| r / norm).collect(), times })
}

/// `‖[Π₊(t1), Π₊(t2)] ψ‖` with Heisenberg-picture projectors under free evolution.
pub fn projector_commutator_norm(psi: &WaveFunction, x_a: f64, t1: f64, t2: f64, m: f64) -> f64 {
    let heis = |w: &WaveFunction, t: f64| -> WaveFunction {
        let forward = free_evolve(w, m, t);
        let (inside, _) = project_plus(&forward, x_a);
        free_evolve(&inside, m, -t)
    };
    let a = heis(&heis(psi, t2), t1);
    let b = heis(&heis(psi, t1), t2);
    let d = a.add(&b.scaled(Complex64::new(-1.0, 0.0))).expect("same grid");
    d.norm_sqr().sqrt()
}
