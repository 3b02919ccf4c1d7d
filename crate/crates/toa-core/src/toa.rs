//! Free-particle arrival-time operator for a detector at `x = 0`.
//!
//! Momentum-space states live on the FFT-ordered grid of a [`Grid1D`]. The position
//! operator is applied as multiplication in the conjugate (position) representation,
//! which is the spectral form of `i d/dk`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::clock::{evolve_with_clock, ClockSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, Repr, SpinorWave, WaveFunction};
use crate::propagator::{free_evolve, EvolutionParams, PotentialSpec};

/// Smooth cutoff `O(k)` that vanishes at `k = 0` and equals one for `|k| ≥ ε`.
///
/// Inside the cutoff `O = S(|k|/ε)` with `S` the C∞ step built from `e^{−1/u}`, which
/// vanishes faster than any power of `|k|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    pub epsilon: f64,
}

impl CutoffProfile {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff epsilon = {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    /// Default cutoff for a packet centered at `k0`.
    pub fn for_packet(k0: f64) -> Result<Self> {
        Self::new(k0.abs() / 50.0)
    }

    pub fn value(&self, k: f64) -> f64 {
        smooth_step(k.abs() / self.epsilon)
    }

    pub fn on_grid(&self, grid: &Grid1D) -> Vec<f64> {
        grid.ks().iter().map(|&k| self.value(k)).collect()
    }
}

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    f(u) / (f(u) + f(1.0 - u))
}

/// `⟨k|T⟩` with the phase of negative momenta carried by the factor `i`.
pub fn toa_eigenfunction(t: f64, k: f64, m: f64) -> Complex64 {
    let sector = if k > 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
    sector * (k.abs() / (2.0 * PI * m)).sqrt() * Complex64::from_polar(1.0, t * k * k / (2.0 * m))
}

/// [`toa_eigenfunction`] sampled on the momentum grid.
pub fn toa_eigenfunction_on_grid(t: f64, grid: &Grid1D, m: f64) -> WaveFunction {
    let values = grid.ks().iter().map(|&k| toa_eigenfunction(t, k, m)).collect();
    WaveFunction::new(*grid, values, Repr::Momentum).expect("finite values")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToaState {
    pub times: Vec<f64>,
    pub g: Vec<Complex64>,
}

impl ToaState {
    pub fn density(&self) -> Vec<f64> {
        self.g.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Trapezoid `∫|g|² dT`.
    pub fn total(&self) -> f64 {
        let d = self.density();
        self.times.windows(2).zip(d.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
    }

    pub fn peak_time(&self) -> f64 {
        let d = self.density();
        let i = d.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        self.times[i]
    }
}

/// Uniform arrival-time grid.
pub fn time_grid(t_start: f64, t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_start + (t_end - t_start) * i as f64 / (n - 1) as f64).collect()
}

/// `g(T) = ∫ dk conj(⟨k|T⟩) ψ̃(k)`.
///
/// The time step must resolve the largest populated energy, `dT ≤ 1/(4 E_max)`, and
/// `|g|²` must be negligible at both ends of the window.
pub fn toa_transform(psi: &WaveFunction, times: &[f64], m: f64) -> Result<ToaState> {
    if times.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 arrival times".into()));
    }
    let mom = psi.to_momentum();
    let grid = *mom.grid();
    let dk = grid.dk();
    let total: f64 = mom.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * dk;
    let support: Vec<(f64, Complex64)> = grid
        .ks()
        .into_iter()
        .zip(mom.values().iter().copied())
        .filter(|(_, v)| v.norm_sqr() * dk > 1e-16 * total)
        .collect();
    let e_max = support.iter().map(|(k, _)| k * k / (2.0 * m)).fold(0.0, f64::max);
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if dt > 1.0 / (4.0 * e_max) {
        return Err(Error::Aliasing(format!("time step {dt:.3e} exceeds 1/(4 E_max) = {:.3e}", 1.0 / (4.0 * e_max))));
    }
    let g: Vec<Complex64> = times
        .iter()
        .map(|&t| support.iter().map(|&(k, v)| toa_eigenfunction(t, k, m).conj() * v).sum::<Complex64>() * dk)
        .collect();
    let peak = g.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let edge = g[0].norm_sqr().max(g[g.len() - 1].norm_sqr());
    if edge > 1e-8 * peak {
        return Err(Error::Aliasing(format!("arrival-time window truncates |g|²: edge/peak = {:.2e}", edge / peak)));
    }
    Ok(ToaState { times: times.to_vec(), g })
}

/// Smeared overlap computed from the eigenfunctions against the closed-form kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelCheck {
    pub numeric: Complex64,
    pub closed_form: Complex64,
}

impl KernelCheck {
    pub fn residual(&self) -> f64 {
        (self.numeric - self.closed_form).norm()
    }
}

/// `∫∫ conj(f1(T)) f2(T′) ⟨T|T′⟩ dT dT′`, numerically through the momentum integral and
/// in closed form as the delta part plus the principal-value part.
///
/// Both functions are sampled on `times`, which must be uniform, and should vanish at
/// its ends.
pub fn overlap_kernel_check(f1: &[Complex64], f2: &[Complex64], times: &[f64]) -> Result<KernelCheck> {
    let n = times.len();
    if f1.len() != n || f2.len() != n || n < 3 {
        return Err(Error::Mismatch("test functions must match the time grid".into()));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    // In E = k²/2m both sectors together give (1/π) ∫₀^∞ dE conj(F1(E)) F2(E), with
    // F(E) = ∫ dT f(T) e^{iTE}; Simpson in E up to the sampling limit π/dT.
    let span = times[n - 1] - times[0];
    let n_e = 2 * ((16.0 * span / dt) / 2.0).ceil() as usize;
    let de = PI / dt / n_e as f64;
    let transform = |f: &[Complex64], e: f64| -> Complex64 {
        times.iter().zip(f).map(|(&t, &v)| v * Complex64::from_polar(1.0, t * e)).sum::<Complex64>() * dt
    };
    let mut numeric = Complex64::new(0.0, 0.0);
    for i in 0..=n_e {
        let e = i as f64 * de;
        let w = if i == 0 || i == n_e { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        numeric += w * transform(f1, e).conj() * transform(f2, e);
    }
    numeric *= de / (3.0 * PI);
    let delta: Complex64 = f1.iter().zip(f2).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dt;
    // principal value with the singular part subtracted and integrated exactly
    let (a, b) = (times[0], times[n - 1]);
    let mut pv = Complex64::new(0.0, 0.0);
    for i in 1..n - 1 {
        let t = times[i];
        let slope = (f2[i + 1] - f2[i - 1]) / (2.0 * dt);
        let mut inner = -slope;
        for (j, &tp) in times.iter().enumerate() {
            if i != j {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                inner += w * (f2[j] - f2[i]) / (t - tp);
            }
        }
        inner = inner * dt + f2[i] * ((t - a) / (b - t)).ln();
        pv += f1[i].conj() * inner;
    }
    pv *= dt;
    let closed_form = delta - Complex64::new(0.0, 1.0 / PI) * pv;
    Ok(KernelCheck { numeric, closed_form })
}

/// Diagonal factors `a = √O/√|k|` and `b = sgn(k) a` on the grid; both vanish at `k = 0`
/// and at the Nyquist bin.
fn toa_factors(grid: &Grid1D, o: &CutoffProfile) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for j in 0..n {
        let k = grid.k(j);
        if k == 0.0 || j == n / 2 {
            continue;
        }
        a[j] = (o.value(k) / k.abs()).sqrt();
        b[j] = a[j] * k.signum();
    }
    (a, b)
}

fn apply_x(grid: &Grid1D, values: Vec<Complex64>) -> Vec<Complex64> {
    let mut pos = WaveFunction::new(*grid, values, Repr::Momentum).expect("finite").to_position();
    for (i, v) in pos.values_mut().iter_mut().enumerate() {
        *v *= grid.x(i);
    }
    pos.to_momentum().into_values()
}

/// Regularized arrival-time operator
/// `T′ = −(m/2) [a x b + b x a]`, `a = √O |p|^{−1/2}`, `b = sgn(p) a`.
///
/// For `k > 0` this is `−m √O p^{−1/2} x p^{−1/2} √O`, whose unregularized form has the
/// eigenfunctions [`toa_eigenfunction`] and satisfies `[T, H] = −i`. With the profile
/// split symmetrically, `[T′, H] = −i O` on both momentum sectors.
pub fn apply_regularized_toa(psi: &WaveFunction, o: &CutoffProfile, m: f64) -> WaveFunction {
    let mom = psi.to_momentum();
    let grid = *mom.grid();
    let (a, b) = toa_factors(&grid, o);
    let scaled = |f: &[f64]| mom.values().iter().zip(f).map(|(v, s)| v * s).collect::<Vec<_>>();
    let xa = apply_x(&grid, scaled(&a));
    let xb = apply_x(&grid, scaled(&b));
    let out = xb.iter().zip(&xa).enumerate().map(|(j, (u, v))| -0.5 * m * (a[j] * u + b[j] * v)).collect();
    WaveFunction::new(grid, out, Repr::Momentum).expect("finite")
}

/// `⟨ψ|T′ψ⟩` (real part; the operator is Hermitian).
pub fn toa_expectation(psi: &WaveFunction, o: &CutoffProfile, m: f64) -> f64 {
    let mom = psi.to_momentum();
    mom.inner(&apply_regularized_toa(&mom, o, m)).expect("same grid").re
}

/// `⟨[T′, H]⟩`, evaluated spectrally.
pub fn toa_commutator(psi: &WaveFunction, o: &CutoffProfile, m: f64) -> Complex64 {
    let mom = psi.to_momentum();
    let grid = *mom.grid();
    let mut h_psi = mom.clone();
    for (j, v) in h_psi.values_mut().iter_mut().enumerate() {
        *v *= grid.k(j).powi(2) / (2.0 * m);
    }
    let t_psi = apply_regularized_toa(&mom, o, m);
    let a = mom.inner(&apply_regularized_toa(&h_psi, o, m)).expect("same grid");
    let b = h_psi.inner(&t_psi).expect("same grid");
    a - b
}

/// `⟨O⟩` and `∫(1 − O)|ψ̃|²`.
pub fn cutoff_weights(psi: &WaveFunction, o: &CutoffProfile) -> (f64, f64) {
    let mom = psi.to_momentum();
    let g = *mom.grid();
    let mut inside = 0.0;
    let mut outside = 0.0;
    for (j, v) in mom.values().iter().enumerate() {
        let w = o.value(g.k(j));
        inside += w * v.norm_sqr();
        outside += (1.0 - w) * v.norm_sqr();
    }
    (inside * g.dk(), outside * g.dk())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftReport {
    pub t: f64,
    pub initial: f64,
    /// `⟨T′(0)⟩ − t ∫(1 − O)|ψ̃|²`.
    pub closed_form: f64,
    /// `⟨T′⟩` in the freely evolved state, plus `t`.
    pub evolved: f64,
    /// `∫(1 − O)|ψ̃|²`.
    pub low_momentum_weight: f64,
}

impl DriftReport {
    pub fn discrepancy(&self) -> f64 {
        (self.closed_form - self.evolved).abs()
    }
}

pub fn toa_drift(psi: &WaveFunction, o: &CutoffProfile, t: f64, m: f64) -> DriftReport {
    let mom = psi.to_momentum();
    let initial = toa_expectation(&mom, o, m);
    let (_, low) = cutoff_weights(&mom, o);
    let evolved = toa_expectation(&free_evolve(&mom, m, t), o, m) + t;
    DriftReport { t, initial, closed_form: initial - t * low, evolved, low_momentum_weight: low }
}

/// Largest weight tolerated inside the cutoff region before a kick.
pub const KICK_SUPPORT_TOLERANCE: f64 = 1e-6;

/// Operator-norm bound of `T′` on the grid.
fn toa_norm_bound(grid: &Grid1D, o: &CutoffProfile, m: f64) -> f64 {
    let (a, _) = toa_factors(grid, o);
    let amax = a.iter().cloned().fold(0.0, f64::max);
    let xmax = grid.x_min().abs().max(grid.x_max().abs());
    m * xmax * amax * amax
}

/// `exp(−i q T′) ψ̃` by scaling and squaring a truncated Taylor series.
pub fn energy_shift_kick(psi: &WaveFunction, o: &CutoffProfile, q: f64, m: f64) -> Result<WaveFunction> {
    let mom = psi.to_momentum();
    let grid = *mom.grid();
    let norm = mom.norm_sqr();
    let (_, low) = cutoff_weights(&mom, o);
    if low > KICK_SUPPORT_TOLERANCE * norm {
        return Err(Error::SupportViolation(low));
    }
    let e_min = mom
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() * grid.dk() > 1e-12 * norm)
        .map(|(j, _)| grid.k(j).powi(2) / (2.0 * m))
        .fold(f64::INFINITY, f64::min);
    if !(q > -e_min) {
        return Err(Error::InvalidParameter(format!("kick q = {q} must exceed -E_min = {}", -e_min)));
    }
    if q == 0.0 {
        return Ok(mom);
    }
    let bound = toa_norm_bound(&grid, o, m) * q.abs();
    let steps = (bound / 0.5).ceil().max(1.0) as usize;
    let h = Complex64::new(0.0, -q / steps as f64);
    let mut state = mom;
    for _ in 0..steps {
        let mut term = state.clone();
        let mut acc = state.clone();
        for order in 1..=18 {
            term = apply_regularized_toa(&term, o, m).scaled(h / order as f64);
            acc = acc.add(&term)?;
            if term.norm_sqr() < 1e-34 * norm {
                break;
            }
        }
        state = acc;
    }
    Ok(state)
}

/// Mean kinetic energy of a momentum-space state.
pub fn mean_energy(psi: &WaveFunction, m: f64) -> f64 {
    let mom = psi.to_momentum();
    let g = *mom.grid();
    let e: f64 = mom.values().iter().enumerate().map(|(j, v)| v.norm_sqr() * g.k(j).powi(2) / (2.0 * m)).sum();
    e * g.dk() / (mom.norm_sqr())
}

/// Gaussian superposition of right-moving eigenstates centered at arrival time `t0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentToaSpec {
    pub t0: f64,
    pub delta: f64,
    pub m: f64,
}

/// `ψ̃(k) ∝ √k e^{i T0 E} e^{−Δ² E² / 2}` for `k > 0`, normalized on `grid`.
pub fn coherent_toa_state(spec: &CoherentToaSpec, grid: &Grid1D) -> Result<WaveFunction> {
    if !(spec.delta > 0.0 && spec.m > 0.0) {
        return Err(Error::InvalidParameter(format!("Delta = {}, m = {}", spec.delta, spec.m)));
    }
    let m = spec.m;
    let values: Vec<Complex64> = grid
        .ks()
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if k <= 0.0 || j == grid.n() / 2 {
                return Complex64::new(0.0, 0.0);
            }
            let e = k * k / (2.0 * m);
            k.sqrt() * (-spec.delta * spec.delta * e * e / 2.0).exp() * Complex64::from_polar(1.0, spec.t0 * e)
        })
        .collect();
    // the grid must resolve energies of order 1/Δ
    let e_top = grid.k_max().powi(2) / (2.0 * m);
    if spec.delta * e_top < 6.0 {
        return Err(Error::Resolution(format!("k_max = {:.3} cannot resolve energies ~ 1/Delta = {:.3}", grid.k_max(), 1.0 / spec.delta)));
    }
    WaveFunction::new(*grid, values, Repr::Momentum)?.normalized()
}

/// [`coherent_toa_state`] multiplied by a cutoff at a fifth of its mean wavenumber.
///
/// The `√k` edge at `k = 0` otherwise gives the state slowly decaying spatial tails that
/// no finite window holds.
pub fn localized_coherent_state(spec: &CoherentToaSpec, grid: &Grid1D) -> Result<WaveFunction> {
    let mut psi = coherent_toa_state(spec, grid)?;
    let k_mean = (2.0 * spec.m * mean_energy(&psi, spec.m)).sqrt();
    let o = CutoffProfile::new(k_mean / 5.0)?;
    for (j, v) in psi.values_mut().iter_mut().enumerate() {
        *v *= o.value(grid.k(j));
    }
    psi.normalized()
}

/// Total detection when [`localized_coherent_state`] meets a clocked trigger of
/// coupling `alpha` at `x = 0`.
pub fn eigenstate_trigger_experiment(spec: &CoherentToaSpec, clock: &ClockSpec, alpha: f64, grid: &Grid1D, params: &EvolutionParams) -> Result<f64> {
    let psi = localized_coherent_state(spec, grid)?.to_position();
    let v = PotentialSpec::trigger(alpha, 0.0);
    let state = evolve_with_clock(&SpinorWave::up_only(psi), clock, &v, params)?;
    Ok(state.detection_probability())
}
