//! Spin triggers: single and multiple flips, and the standing-wave null fixture.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use toa_core::measurement::current_at;
use toa_core::propagator::{evolve_spinor_observed, windowed_standing_wave, EvolutionParams, PotentialSpec};
use toa_core::scattering::{clock_scatter_limit, detection_closed_form, detection_probability, trigger_flip_probability};
use toa_core::{make_gaussian, Grid1D, SpinorWave, WaveFunction};

use super::{GridParams, PacketParams};
use crate::config::{non_empty, positive, ExperimentConfig, DEFAULT_K0, DEFAULT_SIGMA, DEFAULT_X0};
use crate::error::{LabError, Result};
use crate::output::{Check, ExperimentOutput, Series};

/// Coupling that is effectively infinite at wavenumber `k0`: `200/λ`.
pub fn strong_coupling(k0: f64) -> f64 {
    200.0 * k0 / (2.0 * PI)
}

#[derive(Serialize)]
struct FlipParams {
    grid: GridParams,
    packet: PacketParams,
    alpha: f64,
    t_total: f64,
    safety: f64,
}

fn flip_params(cfg: &ExperimentConfig) -> Result<FlipParams> {
    let g = cfg.gaussian(DEFAULT_X0, DEFAULT_K0, DEFAULT_SIGMA)?;
    let grid = cfg.grid_or(40.0, 1024)?;
    make_gaussian(&grid, &g)?;
    let alpha = positive("model.alpha", cfg.model.alpha.unwrap_or(strong_coupling(g.k0)))?;
    let t_default = (g.x0.abs() + 10.0 * g.sigma) * g.m / g.k0.abs();
    let t_total = positive("evolution.t_total", cfg.evolution.t_total.unwrap_or(t_default))?;
    Ok(FlipParams { grid: grid.into(), packet: g.into(), alpha, t_total, safety: cfg.safety()? })
}

pub fn validate_flip(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(flip_params(cfg)?)?)
}

pub fn run_flip(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = flip_params(cfg)?;
    let grid = p.grid.build()?;
    let spec = p.packet.spec();
    let psi = SpinorWave::up_only(make_gaussian(&grid, &spec)?);
    let params = EvolutionParams::stable(&grid, spec.m, p.t_total, p.safety);
    let every = (params.n_steps / 100).max(1);
    let mut series = Series::new("evolution", &[("t", "time"), ("p_down", "probability"), ("norm", "probability")]);
    series.push(vec![0.0, 0.0, psi.norm_sqr()]);
    let out = evolve_spinor_observed(&psi, &PotentialSpec::trigger(p.alpha, 0.0), &params, every, |t, s| {
        series.push(vec![t, s.down.norm_sqr(), s.norm_sqr()]);
        Ok(())
    })?;
    let flip = out.down.norm_sqr();
    let e_k = spec.mean_energy();
    // flux average of the finite-coupling closed form over the packet
    let mom = psi.up.to_momentum();
    let averaged: f64 = mom
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let k = grid.k(j);
            if k > 0.0 {
                v.norm_sqr() * grid.dk() * detection_closed_form(spec.m, Some(p.alpha), k * k / (2.0 * spec.m), 0.0)
            } else {
                0.0
            }
        })
        .sum();
    let limit = detection_probability(&clock_scatter_limit(e_k, 0.0, spec.m)?);
    let mut o = ExperimentOutput::new(&p)?;
    o.value("flip_probability", flip);
    o.value("flux_average_finite_alpha", averaged);
    o.value("analytic_limit", limit);
    o.value("norm_drift", out.norm_sqr() - 1.0);
    o.check(Check::within("flip_probability", flip, 0.5, 0.02));
    o.check(Check::within("analytic_limit", limit, 0.5, 1e-15));
    o.check(Check::below("norm_drift", (out.norm_sqr() - 1.0).abs(), 1e-9));
    o.series.push(series);
    Ok(o)
}

#[derive(Serialize)]
struct MultiParams {
    n_triggers: Vec<u32>,
    trials: usize,
}

fn multi_params(cfg: &ExperimentConfig) -> Result<MultiParams> {
    let n_triggers = non_empty("model.n_triggers", &cfg.model.n_triggers, &[1, 2, 3, 4, 5, 6])?;
    if n_triggers.iter().any(|&n| n == 0 || n > 52) {
        return Err(LabError::Config("model.n_triggers must lie in 1..=52".into()));
    }
    let trials = cfg.model.trials.unwrap_or(100_000);
    if trials == 0 {
        return Err(LabError::Config("model.trials must be positive".into()));
    }
    Ok(MultiParams { n_triggers, trials })
}

pub fn validate_multi(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(multi_params(cfg)?)?)
}

/// Analytic `1 − 2^{−N}` against a product over independent triggers and a seeded
/// Monte Carlo estimate.
pub fn run_multi(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    let p = multi_params(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = Series::new("flips", &[("n", ""), ("analytic", "probability"), ("product", "probability"), ("monte_carlo", "probability")]);
    let mut worst_exact = 0.0f64;
    let mut worst_sigma = 0.0f64;
    for &n in &p.n_triggers {
        let analytic = trigger_flip_probability(n);
        let none = (0..n).fold(1.0, |acc, _| acc * 0.5);
        let product = 1.0 - none;
        let hits = (0..p.trials).filter(|_| (0..n).any(|_| rng.gen_bool(0.5))).count();
        let mc = hits as f64 / p.trials as f64;
        let sd = (analytic * (1.0 - analytic) / p.trials as f64).sqrt();
        worst_exact = worst_exact.max((analytic - product).abs());
        worst_sigma = worst_sigma.max((mc - analytic).abs() / sd);
        series.push(vec![f64::from(n), analytic, product, mc]);
    }
    let mut o = ExperimentOutput::new(&p)?;
    o.value("max_analytic_deviation", worst_exact);
    o.value("max_monte_carlo_sigma", worst_sigma);
    o.check(Check::below("analytic_vs_product", worst_exact, f64::EPSILON));
    o.check(Check::below("monte_carlo_sigma", worst_sigma, 5.0));
    o.series.push(series);
    Ok(o)
}

#[derive(Serialize)]
struct NullParams {
    grid: GridParams,
    k: f64,
    envelope: f64,
    m: f64,
    alpha: f64,
    t_total: f64,
    safety: f64,
}

fn null_params(cfg: &ExperimentConfig) -> Result<NullParams> {
    let grid = cfg.grid_or(60.0, 4096)?;
    let k = positive("packet.k0", cfg.packet.k0.unwrap_or(DEFAULT_K0))?;
    let envelope = positive("model.envelope", cfg.model.envelope.unwrap_or(5.0))?;
    if 8.0 * envelope > grid.x_max() {
        return Err(LabError::Config(format!("envelope {envelope} does not fit the grid")));
    }
    Ok(NullParams {
        grid: grid.into(),
        k,
        envelope,
        m: cfg.mass()?,
        alpha: positive("model.alpha", cfg.model.alpha.unwrap_or(strong_coupling(k)))?,
        t_total: positive("evolution.t_total", cfg.evolution.t_total.unwrap_or(0.25))?,
        safety: cfg.safety()?,
    })
}

pub fn validate_null(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(null_params(cfg)?)?)
}

fn flip_of(psi: WaveFunction, p: &NullParams, params: &EvolutionParams, series: &mut Series, column: usize) -> Result<f64> {
    let mut i = 0;
    let out = evolve_spinor_observed(&SpinorWave::up_only(psi), &PotentialSpec::trigger(p.alpha, 0.0), params, (params.n_steps / 50).max(1), |t, s| {
        if column == 1 {
            series.push(vec![t, s.down.norm_sqr(), 0.0]);
        } else {
            series.rows[i][2] = s.down.norm_sqr();
        }
        i += 1;
        Ok(())
    })?;
    Ok(out.down.norm_sqr())
}

/// Windowed `cos(kx)` centered on the detector; the `sin` variant is reported alongside.
pub fn run_null(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = null_params(cfg)?;
    let grid: Grid1D = p.grid.build()?;
    let cos = windowed_standing_wave(&grid, p.k, 0.0, p.envelope)?;
    let sin = WaveFunction::from_fn(grid, |x| Complex64::new((p.k * x).sin() * (-x * x / (4.0 * p.envelope * p.envelope)).exp(), 0.0))?.normalized()?;
    let current = current_at(&cos, 0.0, p.m);
    let params = EvolutionParams::stable(&grid, p.m, p.t_total, p.safety);
    let mut series = Series::new("flip", &[("t", "time"), ("p_down_cos", "probability"), ("p_down_sin", "probability")]);
    let flip_cos = flip_of(cos, &p, &params, &mut series, 1)?;
    let flip_sin = flip_of(sin, &p, &params, &mut series, 2)?;
    let mut o = ExperimentOutput::new(&p)?;
    o.value("flip_probability", flip_cos);
    o.value("flip_probability_sin", flip_sin);
    o.value("current_at_detector", current);
    o.check(Check::below("flip_probability", flip_cos, 1e-4));
    o.check(Check::below("current_at_detector", current.abs(), 1e-8));
    o.series.push(series);
    Ok(o)
}
