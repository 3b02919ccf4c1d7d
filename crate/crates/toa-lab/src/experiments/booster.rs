//! Two-channel step with a spin-flip coupling: wavepacket run against stationary amplitudes.

use num_complex::Complex64;
use serde::Serialize;
use toa_core::clock::gaussian_amplitude;
use toa_core::propagator::{evolve_spinor, DeltaTerm, EvolutionParams, PotentialSpec};
use toa_core::scattering::{booster_scatter, diag, solve_piecewise, BoosterParams, SIGMA_X};
use toa_core::{make_gaussian, SpinorWave};

use super::{GridParams, PacketParams};
use crate::config::{positive, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::output::{Check, ExperimentOutput, Series};

#[derive(Serialize)]
struct Params {
    grid: GridParams,
    packet: PacketParams,
    alpha: f64,
    w: f64,
    v1: f64,
    v2: f64,
    t_total: f64,
    safety: f64,
    /// Offsets from `k0` at which amplitudes are compared.
    probe_offsets: Vec<f64>,
}

fn params(cfg: &ExperimentConfig) -> Result<Params> {
    let g = cfg.gaussian(-9.0, 10f64.sqrt(), 1.5)?;
    let grid = cfg.grid_or(48.0, 8192)?;
    make_gaussian(&grid, &g)?;
    let b = cfg.model.booster.clone().unwrap_or(crate::config::BoosterConfig { w: 20.0, v1: 20.0, v2: 10.0 });
    let alpha = positive("model.alpha", cfg.model.alpha.unwrap_or(3.0))?;
    let e_top = (g.k0 + 4.0 / (2.0 * g.sigma)).powi(2) / (2.0 * g.m);
    let e_bottom = (g.k0 - 4.0 / (2.0 * g.sigma)).powi(2) / (2.0 * g.m);
    if !(g.k0 - 4.0 / (2.0 * g.sigma) > 0.0) {
        return Err(LabError::Config("the packet must be right-moving".into()));
    }
    for e in [e_bottom, e_top] {
        BoosterParams { m: g.m, alpha, w: b.w, v1: b.v1, v2: b.v2, e }.validate()?;
    }
    let t_default = 7.5;
    Ok(Params {
        grid: grid.into(),
        packet: g.into(),
        alpha,
        w: b.w,
        v1: b.v1,
        v2: b.v2,
        t_total: positive("evolution.t_total", cfg.evolution.t_total.unwrap_or(t_default))?,
        safety: cfg.safety()?,
        probe_offsets: vec![-0.33, 0.0, 0.33],
    })
}

pub fn validate(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(params(cfg)?)?)
}

/// Reflected up and transmitted down amplitudes read off the evolved packet in momentum
/// space, against the stationary solution for the profile the grid realizes and for the
/// ideal delta coupling.
pub fn run(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = params(cfg)?;
    let grid = p.grid.build()?;
    let spec = p.packet.spec();
    let m = spec.m;
    let psi = SpinorWave::up_only(make_gaussian(&grid, &spec)?);
    let v = PotentialSpec::piecewise(vec![0.0], vec![diag(0.0, p.v1), diag(p.w, -p.v2)]).with_delta(DeltaTerm { x: 0.0, matrix: SIGMA_X, strength: p.alpha });
    let out = evolve_spinor(&psi, &v, &EvolutionParams::stable(&grid, m, p.t_total, p.safety))?;
    let realized = v.realized_profile(&grid)?;
    let mut series = Series::new(
        "amplitudes",
        &[
            ("k", "1/length"),
            ("r_up_re", ""),
            ("r_up_im", ""),
            ("r_up_realized_re", ""),
            ("r_up_realized_im", ""),
            ("t_down_re", ""),
            ("t_down_im", ""),
            ("t_down_realized_re", ""),
            ("t_down_realized_im", ""),
            ("reflection_ideal", "probability"),
        ],
    );
    let mut worst = 0.0f64;
    let mut worst_ideal = 0.0f64;
    for dk in &p.probe_offsets {
        let k = spec.k0 + dk;
        let e = k * k / (2.0 * m);
        let q = (2.0 * m * (e + p.v2)).sqrt();
        let a = gaussian_amplitude(&spec, k);
        let phase = Complex64::from_polar(1.0, e * p.t_total);
        let r = out.up.amplitude_at(-k) * phase / a;
        // dk = (q/k) dq on the outgoing branch
        let t = out.down.amplitude_at(q) * phase * k / (q * a);
        let sol = solve_piecewise(&realized, m, e, 0)?;
        let ideal = booster_scatter(&BoosterParams { m, alpha: p.alpha, w: p.w, v1: p.v1, v2: p.v2, e })?;
        let (r0, t0) = (sol.reflected[0], sol.transmitted[1]);
        worst = worst.max((r - r0).norm() / r0.norm()).max((t - t0).norm() / t0.norm());
        worst_ideal = worst_ideal.max((r - ideal.r_up).norm() / ideal.r_up.norm()).max((t - ideal.t_down).norm() / ideal.t_down.norm());
        series.push(vec![k, r.re, r.im, r0.re, r0.im, t.re, t.im, t0.re, t0.im, ideal.reflection()]);
    }
    let mut o = ExperimentOutput::new(&p)?;
    o.value("reflected_weight", out.up.norm_sqr());
    o.value("transmitted_weight", out.down.norm_sqr());
    o.value("norm_drift", out.norm_sqr() - 1.0);
    o.value("max_relative_deviation", worst);
    o.value("max_relative_deviation_ideal_delta", worst_ideal);
    o.check(Check::below("amplitude_relative_deviation", worst, 1e-3));
    o.check(Check::below("norm_drift", (out.norm_sqr() - 1.0).abs(), 1e-9));
    o.series.push(series);
    Ok(o)
}
