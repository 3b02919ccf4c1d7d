//! The arrival-time operator: spectrum, regularized drift, kernel, coherent states, kicks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use toa_core::toa::{
    apply_regularized_toa, coherent_toa_state, cutoff_weights, energy_shift_kick, mean_energy, overlap_kernel_check, time_grid, toa_commutator, toa_drift,
    toa_transform, CoherentToaSpec, CutoffProfile,
};
use toa_core::{make_gaussian, GaussianSpec, Grid1D, Repr, WaveFunction};

use super::{GridParams, PacketParams};
use crate::config::{non_empty, positive, ExperimentConfig, DEFAULT_K0, DEFAULT_SIGMA};
use crate::error::{LabError, Result};
use crate::output::{Check, ExperimentOutput, Series};

/// Grid whose momentum spacing resolves a cutoff of width 0.3.
fn commutator_grid() -> Grid1D {
    Grid1D::centered(160.0, 8192).expect("valid grid")
}

#[derive(Serialize)]
struct SpectrumParams {
    grid: GridParams,
    packet: PacketParams,
    t_start: f64,
    t_end: f64,
    n_t: usize,
    commutator_grid: GridParams,
    epsilon: f64,
    random_states: usize,
}

fn spectrum_params(cfg: &ExperimentConfig) -> Result<SpectrumParams> {
    let g = cfg.gaussian(-10.0, DEFAULT_K0, DEFAULT_SIGMA)?;
    let grid = cfg.grid_or(40.0, 2048)?;
    make_gaussian(&grid, &g)?;
    if !(g.x0 < 0.0 && g.k0 > 0.0) {
        return Err(LabError::Config("the packet must start left of the origin moving right".into()));
    }
    let t_cl = -g.x0 * g.m / g.k0;
    let states = cfg.model.trials.unwrap_or(100);
    if states < 2 {
        return Err(LabError::Config("model.trials must be at least 2".into()));
    }
    Ok(SpectrumParams {
        grid: grid.into(),
        packet: g.into(),
        t_start: t_cl - 6.0,
        t_end: t_cl + 6.0,
        n_t: 6000,
        commutator_grid: commutator_grid().into(),
        epsilon: positive("model.epsilon", cfg.model.epsilon.unwrap_or(0.3))?,
        random_states: states,
    })
}

pub fn validate_spectrum(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(spectrum_params(cfg)?)?)
}

/// Three-component Gaussian mixture with weight near `k = 0` and on both momentum signs.
fn random_state(grid: &Grid1D, m: f64, rng: &mut ChaCha8Rng) -> Result<WaveFunction> {
    let mut psi = WaveFunction::zeros(*grid, Repr::Position);
    for _ in 0..3 {
        let spec = GaussianSpec { x0: rng.gen_range(-10.0..10.0), k0: rng.gen_range(-3.0..3.0), sigma: rng.gen_range(0.8..2.0), m };
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        psi = psi.add(&make_gaussian(grid, &spec)?.scaled(c))?;
    }
    Ok(psi.normalized()?)
}

pub fn run_spectrum(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    let p = spectrum_params(cfg)?;
    let grid = p.grid.build()?;
    let spec = p.packet.spec();
    let m = spec.m;
    let psi = make_gaussian(&grid, &spec)?;
    let st = toa_transform(&psi, &time_grid(p.t_start, p.t_end, p.n_t), m)?;
    let mom = psi.to_momentum();
    let right: f64 = mom.values().iter().enumerate().filter(|(j, _)| grid.k(*j) > 0.0).map(|(_, v)| v.norm_sqr()).sum::<f64>() * grid.dk();
    let mut density = Series::new("arrival_density", &[("t", "time"), ("density", "1/time")]);
    st.times.iter().zip(st.density()).for_each(|(t, d)| density.push(vec![*t, d]));

    let cgrid = p.commutator_grid.build()?;
    let o = CutoffProfile::new(p.epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<WaveFunction> = (0..p.random_states).map(|_| random_state(&cgrid, m, &mut rng)).collect::<Result<_>>()?;
    let mut comm = Series::new("commutator", &[("state", ""), ("cutoff_weight", "probability"), ("residual", ""), ("hermiticity", "time")]);
    let mut worst_comm = 0.0f64;
    let mut worst_herm = 0.0f64;
    for (i, s) in states.iter().enumerate() {
        let (on, _) = cutoff_weights(s, &o);
        let r = (toa_commutator(s, &o, m) + Complex64::new(0.0, on)).norm();
        let other = &states[(i + 1) % states.len()];
        let a = other.to_momentum().inner(&apply_regularized_toa(s, &o, m))?;
        let b = s.to_momentum().inner(&apply_regularized_toa(other, &o, m))?;
        let h = (a - b.conj()).norm();
        worst_comm = worst_comm.max(r);
        worst_herm = worst_herm.max(h);
        comm.push(vec![i as f64, on, r, h]);
    }
    let t_cl = -spec.x0 * m / spec.k0;
    let mut out = ExperimentOutput::new(&p)?;
    out.value("completeness", st.total());
    out.value("right_mover_weight", right);
    out.value("peak_time", st.peak_time());
    out.value("classical_time", t_cl);
    out.value("max_commutator_residual", worst_comm);
    out.value("max_hermiticity_residual", worst_herm);
    out.check(Check::within("completeness", st.total(), right, 1e-6));
    out.check(Check::within("peak_time", st.peak_time(), t_cl, 0.1));
    out.check(Check::below("commutator_residual", worst_comm, 1e-6));
    out.check(Check::below("hermiticity_residual", worst_herm, 1e-9));
    out.series.push(density);
    out.series.push(comm);
    Ok(out)
}

#[derive(Serialize)]
struct DriftParams {
    grid: GridParams,
    packet: PacketParams,
    /// Slow component added to put weight inside the cutoff.
    slow: PacketParams,
    slow_fraction: f64,
    epsilon: f64,
    times: Vec<f64>,
}

fn drift_params(cfg: &ExperimentConfig) -> Result<DriftParams> {
    let g = cfg.gaussian(-10.0, DEFAULT_K0, DEFAULT_SIGMA)?;
    let slow = GaussianSpec { x0: 0.0, k0: 0.0, sigma: 10.0, m: g.m };
    let grid = Grid1D::centered(cfg.grid.half_width.unwrap_or(160.0), cfg.grid.n.unwrap_or(8192))?;
    make_gaussian(&grid, &g)?;
    make_gaussian(&grid, &slow)?;
    let times = non_empty("evolution.t_total", &cfg.evolution.t_total.map(|t| vec![t]), &[0.25, 0.5, 1.0])?;
    for &t in &times {
        positive("evolution.t_total", t)?;
    }
    Ok(DriftParams {
        grid: grid.into(),
        packet: g.into(),
        slow: slow.into(),
        slow_fraction: 0.1,
        epsilon: positive("model.epsilon", cfg.model.epsilon.unwrap_or(0.3))?,
        times,
    })
}

pub fn validate_drift(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(drift_params(cfg)?)?)
}

/// `⟨T′⟩ + t` from free evolution against `⟨T′⟩(0) − t ∫(1 − O)|ψ̃|²`.
pub fn run_drift(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = drift_params(cfg)?;
    let grid = p.grid.build()?;
    let fast = make_gaussian(&grid, &p.packet.spec())?.scaled(Complex64::new((1.0 - p.slow_fraction).sqrt(), 0.0));
    let slow = make_gaussian(&grid, &p.slow.spec())?.scaled(Complex64::new(p.slow_fraction.sqrt(), 0.0));
    let psi = fast.add(&slow)?.normalized()?;
    let o = CutoffProfile::new(p.epsilon)?;
    let m = p.packet.spec().m;
    let mut series = Series::new("drift", &[("t", "time"), ("initial", "time"), ("closed_form", "time"), ("evolved", "time"), ("slope", "")]);
    let mut worst = 0.0f64;
    let mut worst_slope = 0.0f64;
    let mut low = 0.0;
    for &t in &p.times {
        let d = toa_drift(&psi, &o, t, m);
        let slope = (d.evolved - d.initial) / t;
        worst = worst.max(d.discrepancy());
        worst_slope = worst_slope.max((slope + d.low_momentum_weight).abs());
        low = d.low_momentum_weight;
        series.push(vec![t, d.initial, d.closed_form, d.evolved, slope]);
    }
    let mut out = ExperimentOutput::new(&p)?;
    out.value("low_momentum_weight", low);
    out.value("max_discrepancy", worst);
    out.value("max_slope_deviation", worst_slope);
    out.check(Check::below("drift_discrepancy", worst, 1e-6));
    out.check(Check::below("slope_deviation", worst_slope, 1e-3));
    out.series.push(series);
    Ok(out)
}

#[derive(Serialize)]
struct KernelParams {
    t_start: f64,
    t_end: f64,
    n_t: usize,
    /// `(center, width)` pairs of the two test functions in each configuration.
    configurations: Vec<[[f64; 2]; 2]>,
}

fn kernel_params(_cfg: &ExperimentConfig) -> Result<KernelParams> {
    Ok(KernelParams {
        t_start: -10.0,
        t_end: 16.0,
        n_t: 1301,
        configurations: vec![[[0.0, 0.5], [0.0, 0.5]], [[0.0, 0.5], [6.0, 0.5]], [[0.0, 0.7], [1.0, 0.6]]],
    })
}

pub fn validate_kernel(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(kernel_params(cfg)?)?)
}

pub fn run_kernel(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = kernel_params(cfg)?;
    let ts = time_grid(p.t_start, p.t_end, p.n_t);
    let gauss = |[c, w]: [f64; 2]| ts.iter().map(|t| Complex64::new((-(t - c) * (t - c) / (2.0 * w * w)).exp(), 0.0)).collect::<Vec<_>>();
    let mut series = Series::new("kernel", &[("configuration", ""), ("numeric_re", ""), ("numeric_im", ""), ("closed_re", ""), ("closed_im", ""), ("residual", "")]);
    let mut worst = 0.0f64;
    for (i, [a, b]) in p.configurations.iter().enumerate() {
        let r = overlap_kernel_check(&gauss(*a), &gauss(*b), &ts)?;
        worst = worst.max(r.residual());
        series.push(vec![i as f64, r.numeric.re, r.numeric.im, r.closed_form.re, r.closed_form.im, r.residual()]);
    }
    let mut out = ExperimentOutput::new(&p)?;
    out.value("max_residual", worst);
    out.check(Check::below("kernel_residual", worst, 1e-4));
    out.series.push(series);
    Ok(out)
}

#[derive(Serialize)]
struct CoherentParams {
    grid: GridParams,
    widths: Vec<f64>,
    t0: f64,
    m: f64,
    kick_grid: GridParams,
    kick_packet: PacketParams,
    epsilon: f64,
    kicks: Vec<f64>,
}

fn coherent_params(cfg: &ExperimentConfig) -> Result<CoherentParams> {
    let mut widths = non_empty("model.widths", &cfg.model.widths, &[0.04, 0.08, 0.16, 0.32, 0.64])?;
    for &w in &widths {
        positive("model.widths", w)?;
    }
    widths.sort_by(f64::total_cmp);
    if !widths.iter().any(|d| widths.iter().any(|d2| (d2 / d - 2.0).abs() < 1e-9)) {
        return Err(LabError::Config("model.widths must contain at least one pair Δ, 2Δ".into()));
    }
    let m = cfg.mass()?;
    let kg = cfg.gaussian(0.0, DEFAULT_K0, 2.0)?;
    let kick_grid = Grid1D::centered(20.0, 1024)?;
    make_gaussian(&kick_grid, &kg)?;
    let kicks = non_empty("model.kicks", &cfg.model.kicks, &[0.5, 2.0, 10.0])?;
    Ok(CoherentParams {
        grid: cfg.grid_or(60.0, 8192)?.into(),
        widths,
        t0: 4.0,
        m,
        kick_grid: kick_grid.into(),
        kick_packet: kg.into(),
        epsilon: positive("model.epsilon", cfg.model.epsilon.unwrap_or(kg.k0.abs() / 50.0))?,
        kicks,
    })
}

pub fn validate_coherent(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(coherent_params(cfg)?)?)
}

/// `⟨E⟩ ∝ 1/Δ` for coherent states and `⟨H⟩ → ⟨H⟩ + q` under the impulsive kick.
pub fn run_coherent(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = coherent_params(cfg)?;
    let grid = p.grid.build()?;
    let mut energy = Series::new("energy", &[("delta", "time"), ("mean_energy", "energy"), ("e_delta_sqrt_pi", "")]);
    let mut es = Vec::with_capacity(p.widths.len());
    for &d in &p.widths {
        let e = mean_energy(&coherent_toa_state(&CoherentToaSpec { t0: p.t0, delta: d, m: p.m }, &grid)?, p.m);
        energy.push(vec![d, e, e * d * std::f64::consts::PI.sqrt()]);
        es.push((d, e));
    }
    // ratio E(Δ)/E(2Δ) wherever both widths are present
    let ratios: Vec<f64> = es
        .iter()
        .filter_map(|&(d, e)| es.iter().find(|(d2, _)| (d2 / d - 2.0).abs() < 1e-9).map(|(_, e2)| e / e2))
        .collect();
    let kgrid = p.kick_grid.build()?;
    let spec = p.kick_packet.spec();
    let psi = make_gaussian(&kgrid, &spec)?;
    let o = CutoffProfile::new(p.epsilon)?;
    let e0 = mean_energy(&psi, spec.m);
    let mut kicks = Series::new("kicks", &[("q", "energy"), ("energy_shift", "energy"), ("norm", "probability")]);
    let mut worst_kick = 0.0f64;
    let mut worst_norm = 0.0f64;
    for &q in &p.kicks {
        let k = energy_shift_kick(&psi, &o, q, spec.m)?;
        let shift = mean_energy(&k, spec.m) - e0;
        worst_kick = worst_kick.max(((shift - q) / q).abs());
        worst_norm = worst_norm.max((k.norm_sqr() - 1.0).abs());
        kicks.push(vec![q, shift, k.norm_sqr()]);
    }
    let mut out = ExperimentOutput::new(&p)?;
    let worst_ratio = ratios.iter().map(|r| (r - 2.0).abs()).fold(0.0, f64::max);
    out.value("max_ratio_deviation", worst_ratio);
    out.value("max_relative_kick_error", worst_kick);
    out.check(Check::below("energy_ratio", worst_ratio, 0.2));
    out.check(Check::below("kick_relative_error", worst_kick, 0.01));
    out.check(Check::below("kick_norm", worst_norm, 1e-9));
    out.series.push(energy);
    out.series.push(kicks);
    Ok(out)
}
