//! Clock-coupled detectors, resolved over clock-momentum slices.
//!
//! The clock momentum `p` commutes with every Hamiltonian here, so each slice is an
//! independent one-particle problem. A slice stores the outgoing amplitude of the
//! detected component with the free phase removed; the clock reading is recovered by
//! a Fourier sum over slices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fft_pair, Grid1D, SpinorWave, WaveFunction};
use crate::measurement::{current_at, ArrivalSeries};
use crate::propagator::{evolve_scalar, evolve_spinor, EvolutionParams, PotentialSpec};
use crate::scattering::{clock_scatter, diag, TriggerClockParams};

/// Smallest clock-momentum span, in units of `1/δt`.
pub const MIN_SPAN_FACTOR: f64 = 6.0;
/// Down-channel flux at the detector above which a readout is refused.
pub const PREMATURE_FLUX: f64 = 1e-4;

/// Gaussian clock of accuracy `δt`: `|χ(y)|²` has standard deviation `δt` and the
/// clock momentum has standard deviation `1/δt`, which requires a linear chirp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockSpec {
    pub delta_t: f64,
    pub y0: f64,
    pub n_slices: usize,
    /// Slice grid spans `span_factor / δt` in `p`.
    pub span_factor: f64,
}

impl ClockSpec {
    pub fn new(delta_t: f64, n_slices: usize) -> Self {
        Self { delta_t, y0: 0.0, n_slices, span_factor: 12.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(Error::InvalidParameter(format!("clock accuracy {} must be positive", self.delta_t)));
        }
        if self.n_slices == 0 {
            return Err(Error::InvalidParameter("need at least one clock slice".into()));
        }
        if !(self.span_factor >= MIN_SPAN_FACTOR) {
            return Err(Error::SliceCoverage { span: self.span_factor / self.delta_t, needed: MIN_SPAN_FACTOR / self.delta_t });
        }
        Ok(())
    }

    pub fn momentum_spread(&self) -> f64 {
        1.0 / self.delta_t
    }

    /// Slice spacing; zero for a single slice.
    pub fn dp(&self) -> f64 {
        if self.n_slices == 1 {
            0.0
        } else {
            self.span_factor / self.delta_t / self.n_slices as f64
        }
    }

    /// Slice centers, symmetric about zero.
    pub fn momenta(&self) -> Vec<f64> {
        let dp = self.dp();
        let n = self.n_slices as f64;
        (0..self.n_slices).map(|j| (j as f64 - (n - 1.0) / 2.0) * dp).collect()
    }

    /// Period of the reconstructed clock reading.
    pub fn reading_period(&self) -> f64 {
        2.0 * PI / self.dp()
    }

    /// `χ(y) ∝ exp(−(1 − i√3)(y − y0)² / 4δt²)`, normalized.
    pub fn position_amplitude(&self, y: f64) -> Complex64 {
        let d = y - self.y0;
        let norm = (2.0 * PI * self.delta_t * self.delta_t).powf(-0.25);
        let a = Complex64::new(1.0, -3f64.sqrt()) / (4.0 * self.delta_t * self.delta_t);
        norm * (-a * d * d).exp()
    }

    /// Fourier transform of [`Self::position_amplitude`].
    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        let dt2 = self.delta_t * self.delta_t;
        let norm = (2.0 * dt2 / PI).powf(0.25) / 2f64.sqrt();
        let chirp = Complex64::new(1.0, 3f64.sqrt()) * (-p * p * dt2 / 4.0);
        // e^{iπ/6} is the phase of 1/√(2a) for the complex Gaussian exponent a
        norm * chirp.exp() * Complex64::from_polar(1.0, PI / 6.0 - p * self.y0)
    }

    /// `(p, w)` pairs with `Σ|w|² = 1`; `w ∝ χ̃(p) √dp`.
    pub fn slice_weights(&self) -> Vec<(f64, Complex64)> {
        let ps = self.momenta();
        let raw: Vec<Complex64> = ps.iter().map(|&p| self.momentum_amplitude(p)).collect();
        let total: f64 = raw.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        ps.into_iter().zip(raw).map(|(p, w)| (p, w / total)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClockSlice {
    pub p: f64,
    pub weight: Complex64,
    /// Detected component in the readout basis, free phase removed.
    pub amplitude: Vec<Complex64>,
    pub detected: f64,
    pub undetected: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClockedState {
    pub clock: ClockSpec,
    /// Quadrature weight of the readout basis (`dk` or `dx`).
    pub measure: f64,
    pub slices: Vec<ClockSlice>,
    /// Arrival time = `offset + (y − y0)`.
    pub offset: f64,
    /// Weighted detected-channel flux left at the detector.
    pub residual_flux: f64,
}

impl ClockedState {
    pub fn detection_probability(&self) -> f64 {
        self.slices.iter().map(|s| s.weight.norm_sqr() * s.detected).sum()
    }

    pub fn non_detection_probability(&self) -> f64 {
        self.slices.iter().map(|s| s.weight.norm_sqr() * s.undetected).sum()
    }
}

fn detector_position(v: &PotentialSpec) -> f64 {
    v.deltas.first().map(|d| d.x).unwrap_or(0.0)
}

/// Time-domain backend: one spinor evolution per clock slice.
pub fn evolve_with_clock(psi: &SpinorWave, clock: &ClockSpec, v: &PotentialSpec, params: &EvolutionParams) -> Result<ClockedState> {
    clock.validate()?;
    let grid = *psi.grid();
    params.validate(&grid)?;
    let x_d = detector_position(v);
    let probe = v.deltas.first().map(|d| PotentialSpec::delta_cells(d, &grid)).map(|(lo, hi, _)| (hi - lo + 4) as f64 * grid.dx() / 2.0).unwrap_or(2.0 * grid.dx());
    let t = params.t_total();
    let m = params.m;
    let slices = clock
        .slice_weights()
        .into_par_iter()
        .map(|(p, weight)| {
            let out = evolve_spinor(psi, &v.with_offset(diag(p, 0.0)), params)?;
            let flux = current_at(&out.down, x_d - probe, m).abs() + current_at(&out.down, x_d + probe, m).abs();
            let mut down = out.down.to_momentum();
            let detected = down.norm_sqr();
            for (j, a) in down.values_mut().iter_mut().enumerate() {
                *a *= Complex64::from_polar(1.0, grid.k(j).powi(2) / (2.0 * m) * t);
            }
            Ok((ClockSlice { p, weight, amplitude: down.into_values(), detected, undetected: out.up.norm_sqr() }, flux))
        })
        .collect::<Result<Vec<_>>>()?;
    let residual_flux = slices.iter().map(|(s, f)| s.weight.norm_sqr() * f).sum();
    Ok(ClockedState {
        clock: *clock,
        measure: grid.dk(),
        slices: slices.into_iter().map(|(s, _)| s).collect(),
        offset: 0.0,
        residual_flux,
    })
}

/// Incident momentum amplitude built from Gaussian packets.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketSpec {
    pub components: Vec<(Complex64, crate::grid::GaussianSpec)>,
}

impl PacketSpec {
    pub fn single(spec: crate::grid::GaussianSpec) -> Self {
        Self { components: vec![(Complex64::new(1.0, 0.0), spec)] }
    }

    /// Unnormalized `ψ̃(k)` of the superposition.
    pub fn amplitude(&self, k: f64) -> Complex64 {
        self.components.iter().map(|(c, s)| c * gaussian_amplitude(s, k)).sum()
    }

    /// `‖ψ̃‖²` by dense quadrature.
    pub fn norm_sqr(&self) -> f64 {
        let (lo, hi) = self.k_range(10.0);
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        (0..=n).map(|i| self.amplitude(lo + i as f64 * h).norm_sqr()).sum::<f64>() * h
    }

    fn k_range(&self, width: f64) -> (f64, f64) {
        let lo = self.components.iter().map(|(_, s)| s.k0 - width / (2.0 * s.sigma)).fold(f64::INFINITY, f64::min);
        let hi = self.components.iter().map(|(_, s)| s.k0 + width / (2.0 * s.sigma)).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Momentum amplitude of a normalized Gaussian packet (continuous convention).
pub fn gaussian_amplitude(s: &crate::grid::GaussianSpec, k: f64) -> Complex64 {
    let d = k - s.k0;
    (2.0 * s.sigma * s.sigma / PI).powf(0.25) * (-d * d * s.sigma * s.sigma).exp() * Complex64::from_polar(1.0, -d * s.x0)
}

/// Outgoing down-channel amplitude at wavenumber `q` for clock momentum `p`, from the
/// exact delta-coupled S-matrix; `incident(k)` is the momentum amplitude of a
/// right-moving packet placed left of the detector at `x = 0`.
fn stationary_amplitude<F: Fn(f64) -> Complex64>(incident: &F, m: f64, alpha: f64, p: f64, q: f64) -> Result<Complex64> {
    let k2 = q * q - 2.0 * m * p;
    if q == 0.0 || k2 <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let k = k2.sqrt();
    let a = incident(k);
    if a == Complex64::new(0.0, 0.0) {
        return Ok(a);
    }
    let amps = clock_scatter(&TriggerClockParams { m, alpha, e_k: k2 / (2.0 * m), p })?;
    let phi = if q > 0.0 { amps.phi_r_down } else { amps.phi_l_down };
    Ok(phi * a * (q.abs() / k))
}

/// Stationary backend: the arrival reading reconstructed directly from S-matrix
/// amplitudes on the wavenumber grid of `grid`, one column at a time.
///
/// `incident` must be normalized; weight it carries at `k ≤ 0` never reaches the
/// detector and is counted as undetected.
pub fn stationary_readout<F>(incident: F, m: f64, alpha: f64, clock: &ClockSpec, grid: &Grid1D, t_center: f64, oversample: usize) -> Result<ArrivalSeries>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    clock.validate()?;
    if !(m > 0.0 && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("m = {m}, alpha = {alpha}")));
    }
    let weights = clock.slice_weights();
    let qs: Vec<f64> = (0..grid.n()).filter(|&j| j != grid.n() / 2).map(|j| grid.k(j)).collect();
    let mut err = None;
    let series = reading_distribution(clock, &weights, grid.dk(), qs.len(), 0.0, t_center, oversample, |b, col| {
        for (c, (p, _)) in col.iter_mut().zip(&weights) {
            match stationary_amplitude(&incident, m, alpha, *p, qs[b]) {
                Ok(a) => *c = a,
                Err(e) => {
                    err.get_or_insert(e);
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let detected = series.detected();
    if !(detected > 0.0) {
        return Err(Error::EmptyReadout);
    }
    Ok(ArrivalSeries { residual: 1.0 - detected, ..series })
}

/// Total detection `Σ_p |w_p|² ∫ |ψ̃(k)|² P(k, p) dk` without reconstructing the reading.
pub fn stationary_detection<F>(incident: F, m: f64, alpha: f64, clock: &ClockSpec, k_lo: f64, k_hi: f64, n_k: usize) -> Result<f64>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    clock.validate()?;
    let k_lo = k_lo.max(0.0);
    let h = (k_hi - k_lo) / n_k as f64;
    let weights: Vec<f64> = (0..n_k).map(|i| incident(k_lo + (i as f64 + 0.5) * h).norm_sqr() * h).collect();
    let total: Result<Vec<f64>> = clock
        .slice_weights()
        .into_par_iter()
        .map(|(p, w)| {
            let mut acc = 0.0;
            for (i, wk) in weights.iter().enumerate() {
                let k = k_lo + (i as f64 + 0.5) * h;
                acc += wk * crate::scattering::detection_closed_form(m, Some(alpha), k * k / (2.0 * m), p);
            }
            Ok(w.norm_sqr() * acc)
        })
        .collect();
    Ok(total?.iter().sum())
}

/// Marginal distribution of the arrival reading on the detected component.
///
/// The reading is sampled at `oversample · n_slices` points over one period centered
/// on arrival time `t_center`.
pub fn clock_readout(state: &ClockedState, t_center: f64, oversample: usize) -> Result<ArrivalSeries> {
    if state.residual_flux > PREMATURE_FLUX {
        return Err(Error::PrematureReadout(state.residual_flux));
    }
    if !(state.detection_probability() > 0.0) {
        return Err(Error::EmptyReadout);
    }
    let weights: Vec<(f64, Complex64)> = state.slices.iter().map(|s| (s.p, s.weight)).collect();
    let n_basis = state.slices[0].amplitude.len();
    let series = reading_distribution(&state.clock, &weights, state.measure, n_basis, state.offset, t_center, oversample, |b, col| {
        for (c, s) in col.iter_mut().zip(&state.slices) {
            *c = s.amplitude[b];
        }
    })?;
    Ok(ArrivalSeries { residual: state.non_detection_probability(), ..series })
}

/// `ρ(y) = Σ_b measure · |Σ_p w_p √(dp/2π) e^{ipy} A_p(b)|²` over one reading period,
/// with `column(b, out)` filling `A_p(b)` for every slice.
#[allow(clippy::too_many_arguments)]
fn reading_distribution(
    clock: &ClockSpec,
    weights: &[(f64, Complex64)],
    measure: f64,
    n_basis: usize,
    offset: f64,
    t_center: f64,
    oversample: usize,
    mut column: impl FnMut(usize, &mut [Complex64]),
) -> Result<ArrivalSeries> {
    let n_p = weights.len();
    if n_p < 2 {
        return Err(Error::Resolution("the reading needs at least two clock slices".into()));
    }
    let big_m = (n_p * oversample.max(1)).next_power_of_two();
    let dp = clock.dp();
    let dy = 2.0 * PI / (big_m as f64 * dp);
    let y_start = clock.y0 + (t_center - offset) - big_m as f64 * dy / 2.0;
    let scale = (dp / (2.0 * PI)).sqrt();
    let coeff: Vec<Complex64> = weights.iter().map(|(p, w)| w * scale * Complex64::from_polar(1.0, p * y_start)).collect();
    let (_, inverse) = fft_pair(big_m);
    let mut rho = vec![0.0; big_m];
    let mut col = vec![Complex64::new(0.0, 0.0); n_p];
    let mut buf = vec![Complex64::new(0.0, 0.0); big_m];
    for b in 0..n_basis {
        column(b, &mut col);
        if col.iter().all(|a| *a == Complex64::new(0.0, 0.0)) {
            continue;
        }
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (j, a) in col.iter().enumerate() {
            buf[j] = coeff[j] * a;
        }
        inverse.process(&mut buf);
        for (r, z) in rho.iter_mut().zip(&buf) {
            *r += z.norm_sqr() * measure;
        }
    }
    let times = (0..big_m).map(|l| offset + y_start + l as f64 * dy - clock.y0).collect();
    Ok(ArrivalSeries { times, probabilities: rho.iter().map(|r| r * dy).collect(), residual: 0.0, schedule: None })
}

/// Cascade coupling `V(x)`: `−1` beyond the detector, decaying as `−x_a²/x²` before it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CascadeProfile {
    Slope { x_a: f64 },
    /// `V ≡ −1`: the clock runs from the start.
    Uniform,
}

impl CascadeProfile {
    /// The slope is capped at `−1`, which removes the pole at `x = 0` for `x < 0`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            CascadeProfile::Uniform => -1.0,
            CascadeProfile::Slope { x_a } => {
                if x >= x_a {
                    -1.0
                } else {
                    -(x_a * x_a / (x * x)).min(1.0)
                }
            }
        }
    }

    fn detector(&self) -> Option<f64> {
        match *self {
            CascadeProfile::Uniform => None,
            CascadeProfile::Slope { x_a } => Some(x_a),
        }
    }
}

/// Spinless particle coupled to the clock through `V(x) P_y`.
///
/// The clock runs backwards at unit rate once the particle has arrived, so the
/// reading gives arrival = `t + (y − y0)`. The readout is restricted to `x ≥ x_a`.
pub fn cascade_evolve(psi: &WaveFunction, clock: &ClockSpec, profile: CascadeProfile, params: &EvolutionParams) -> Result<ClockedState> {
    clock.validate()?;
    let grid = *psi.grid();
    params.validate(&grid)?;
    let v: Vec<f64> = grid.xs().iter().map(|&x| profile.value(x)).collect();
    let first_inside = profile.detector().map(|x_a| grid.nearest_index(x_a)).unwrap_or(0);
    let t = params.t_total();
    let dx = grid.dx();
    let slices = clock
        .slice_weights()
        .into_par_iter()
        .map(|(p, weight)| {
            let vp: Vec<f64> = v.iter().map(|vi| p * vi).collect();
            let out = evolve_scalar(psi, &vp, params)?;
            let flux = profile.detector().map(|x_a| current_at(&out, x_a, params.m).abs()).unwrap_or(0.0);
            let mut amplitude = out.to_position().into_values();
            let undetected = amplitude[..first_inside].iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
            amplitude[..first_inside].iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            let detected = amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
            Ok((ClockSlice { p, weight, amplitude, detected, undetected }, flux))
        })
        .collect::<Result<Vec<_>>>()?;
    let residual_flux = slices.iter().map(|(s, f)| s.weight.norm_sqr() * f).sum();
    Ok(ClockedState {
        clock: *clock,
        measure: dx,
        slices: slices.into_iter().map(|(s, _)| s).collect(),
        offset: t,
        residual_flux,
    })
}

/// Flux-weighted detection for a single incident wavenumber, averaged over the clock.
pub fn clock_averaged_detection(m: f64, alpha: f64, e_k: f64, clock: &ClockSpec) -> Result<f64> {
    clock.validate()?;
    Ok(clock
        .slice_weights()
        .iter()
        .map(|(p, w)| w.norm_sqr() * crate::scattering::detection_closed_form(m, Some(alpha), e_k, *p))
        .sum())
}
