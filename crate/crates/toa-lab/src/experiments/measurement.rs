//! Repeated projections, the current and the presence density at the detector.

use rayon::prelude::*;
use serde::Serialize;
use toa_core::measurement::{
    current_series, continuity_residual, presence_distribution, projector_commutator_norm, repeated_measurement_arrival, weight_beyond, MeasurementSchedule,
};
use toa_core::{make_gaussian, GaussianSpec};

use super::{GridParams, PacketParams};
use crate::config::{finite, non_empty, positive, ExperimentConfig, DEFAULT_K0, DEFAULT_SIGMA, DEFAULT_X0};
use crate::error::{LabError, Result};
use crate::output::{Check, ExperimentOutput, Series};

#[derive(Serialize)]
struct ZenoParams {
    grid: GridParams,
    packet: PacketParams,
    x_a: f64,
    t_max: f64,
    deltas: Vec<f64>,
}

fn zeno_params(cfg: &ExperimentConfig) -> Result<ZenoParams> {
    let g = cfg.gaussian(-7.0, DEFAULT_K0, DEFAULT_SIGMA)?;
    let grid = cfg.grid_or(20.0, 512)?;
    make_gaussian(&grid, &g)?;
    let x_a = finite("model.x_a", cfg.model.x_a.unwrap_or(0.0))?;
    let t_max = positive("model.t_max", cfg.model.t_max.unwrap_or(3.0))?;
    let mut deltas = non_empty("model.deltas", &cfg.model.deltas, &[3e-3, 1e-3, 3e-4, 1e-4, 3e-5])?;
    deltas.sort_by(|a, b| b.total_cmp(a));
    if deltas.windows(2).any(|w| w[0] == w[1]) {
        return Err(LabError::Config("model.deltas must be distinct".into()));
    }
    for &d in &deltas {
        MeasurementSchedule::new(x_a, d, t_max, g.m).validate()?;
    }
    Ok(ZenoParams { grid: grid.into(), packet: g.into(), x_a, t_max, deltas })
}

pub fn validate_zeno(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(zeno_params(cfg)?)?)
}

/// Detection under projections every `Δ`, from the coarsest to the finest interval.
pub fn run_zeno(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = zeno_params(cfg)?;
    let grid = p.grid.build()?;
    let psi = make_gaussian(&grid, &p.packet.spec())?;
    let rows: Vec<[f64; 4]> = p
        .deltas
        .par_iter()
        .map(|&d| {
            let s = repeated_measurement_arrival(&psi, &MeasurementSchedule::new(p.x_a, d, p.t_max, p.packet.spec().m))?;
            Ok([d, s.detected(), s.residual, s.closure_error()])
        })
        .collect::<Result<_>>()?;
    let mut series = Series::new("zeno", &[("delta", "time"), ("detection", "probability"), ("residual", "probability"), ("closure_error", "probability")]);
    rows.iter().for_each(|r| series.push(r.to_vec()));
    let det: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let closure = rows.iter().map(|r| r[3].abs()).fold(0.0, f64::max);
    let last = *det.last().expect("non-empty scan");
    let mut o = ExperimentOutput::new(&p)?;
    o.value("detection_coarsest", det[0]);
    o.value("detection_finest", last);
    o.value("max_closure_error", closure);
    o.check(Check::holds("detection_decreases", det.windows(2).filter(|w| !(w[1] < w[0])).count()));
    o.check(Check::below("detection_finest", last, 0.05));
    o.check(Check::below("zeno_ratio", last, det[0] / 10.0));
    o.check(Check::below("closure_error", closure, 1e-9));
    o.series.push(series);
    Ok(o)
}

#[derive(Serialize)]
struct CurrentParams {
    grid: GridParams,
    packets: Vec<PacketParams>,
    x_a: f64,
    n_times: usize,
    h: f64,
}

fn current_params(cfg: &ExperimentConfig) -> Result<CurrentParams> {
    let grid = cfg.grid_or(30.0, 1024)?;
    let m = cfg.mass()?;
    let p = &cfg.packet;
    let packets: Vec<GaussianSpec> = if p.x0.is_some() || p.k0.is_some() || p.sigma.is_some() {
        vec![cfg.gaussian(-5.0, DEFAULT_K0, DEFAULT_SIGMA)?]
    } else {
        [(-5.0, 5.0, 1.0), (-3.0, 2.0, 1.5), (-8.0, 8.0, 0.7)].iter().map(|&(x0, k0, sigma)| GaussianSpec { x0, k0, sigma, m }).collect()
    };
    for g in &packets {
        make_gaussian(&grid, g)?;
        if !(g.x0 < 0.0 && g.k0 > 0.0) {
            return Err(LabError::Config("fixtures must start left of the detector moving right".into()));
        }
    }
    Ok(CurrentParams {
        grid: grid.into(),
        packets: packets.into_iter().map(Into::into).collect(),
        x_a: finite("model.x_a", cfg.model.x_a.unwrap_or(0.0))?,
        n_times: 21,
        h: 1e-3,
    })
}

pub fn validate_current(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(current_params(cfg)?)?)
}

/// `d/dt` of the weight beyond the detector against `j(x_a, t)` on free evolution.
pub fn run_current(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = current_params(cfg)?;
    let grid = p.grid.build()?;
    let mut series = Series::new("continuity", &[("fixture", ""), ("t", "time"), ("current", "1/time"), ("weight_rate", "1/time")]);
    let mut worst = 0.0f64;
    let mut o = ExperimentOutput::new(&p)?;
    for (i, pk) in p.packets.iter().enumerate() {
        let spec = pk.spec();
        let psi = make_gaussian(&grid, &spec)?;
        let t_end = 2.0 * (spec.x0 - p.x_a).abs() * spec.m / spec.k0;
        let times: Vec<f64> = (0..p.n_times).map(|j| t_end * j as f64 / (p.n_times - 1) as f64).collect();
        let j = current_series(&psi, p.x_a, &times, spec.m);
        for (t, jt) in times.iter().zip(&j) {
            let rate = (weight_beyond(&psi, p.x_a, t + p.h, spec.m) - weight_beyond(&psi, p.x_a, t - p.h, spec.m)) / (2.0 * p.h);
            series.push(vec![i as f64, *t, *jt, rate]);
        }
        let r = continuity_residual(&psi, p.x_a, &times, spec.m, p.h);
        o.value(&format!("residual_fixture_{i}"), r);
        worst = worst.max(r);
    }
    o.value("max_residual", worst);
    o.check(Check::below("continuity_residual", worst, 1e-6));
    o.series.push(series);
    Ok(o)
}

#[derive(Serialize)]
struct PresenceParams {
    grid: GridParams,
    packet: PacketParams,
    x_a: f64,
    t_start: f64,
    t_end: f64,
    n_t: usize,
    commutator_times: [f64; 2],
}

fn presence_params(cfg: &ExperimentConfig) -> Result<PresenceParams> {
    let g = cfg.gaussian(DEFAULT_X0, DEFAULT_K0, DEFAULT_SIGMA)?;
    let grid = cfg.grid_or(80.0, 2048)?;
    make_gaussian(&grid, &g)?;
    let x_a = finite("model.x_a", cfg.model.x_a.unwrap_or(0.0))?;
    let t_cl = (x_a - g.x0) * g.m / g.k0;
    if !(t_cl > 0.0) {
        return Err(LabError::Config("the packet must move towards the detector".into()));
    }
    let t_end = positive("model.t_max", cfg.model.t_max.unwrap_or(3.0 * t_cl))?;
    Ok(PresenceParams { grid: grid.into(), packet: g.into(), x_a, t_start: 0.0, t_end, n_t: 901, commutator_times: [0.5 * t_cl, t_cl] })
}

pub fn validate_presence(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(presence_params(cfg)?)?)
}

/// Presence density against the flux density; the projectors onto `x > x_a` at two
/// times do not commute.
pub fn run_presence(cfg: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutput> {
    let p = presence_params(cfg)?;
    let grid = p.grid.build()?;
    let spec = p.packet.spec();
    let psi = make_gaussian(&grid, &spec)?;
    let presence = presence_distribution(&psi, p.x_a, p.t_start, p.t_end, p.n_t, spec.m)?;
    let j = current_series(&psi, p.x_a, &presence.times, spec.m);
    let mut series = Series::new("densities", &[("t", "time"), ("presence", "1/time"), ("current", "1/time")]);
    for ((t, d), jt) in presence.times.iter().zip(&presence.density).zip(&j) {
        series.push(vec![*t, *d, *jt]);
    }
    let dt = presence.times[1] - presence.times[0];
    let flux_total: f64 = j.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum();
    let arrived = weight_beyond(&psi, p.x_a, p.t_end, spec.m) - weight_beyond(&psi, p.x_a, p.t_start, spec.m);
    let mean = |f: &[f64]| -> f64 {
        let norm: f64 = f.iter().sum();
        presence.times.iter().zip(f).map(|(t, v)| t * v).sum::<f64>() / norm
    };
    let distance: f64 = presence.density.iter().zip(&j).map(|(a, b)| (a - b / flux_total).abs()).sum::<f64>() * dt;
    let [t1, t2] = p.commutator_times;
    let commutator = projector_commutator_norm(&psi, p.x_a, t1, t2, spec.m);
    let negative = j.iter().filter(|v| **v < 0.0).count();
    let mut o = ExperimentOutput::new(&p)?;
    o.value("presence_integral", presence.integral());
    o.value("flux_integral", flux_total);
    o.value("arrived_weight", arrived);
    o.value("mean_time_presence", mean(&presence.density));
    o.value("mean_time_flux", mean(&j));
    o.value("l1_distance", distance);
    o.value("projector_commutator", commutator);
    o.value("negative_current_samples", negative as f64);
    o.check(Check::within("presence_integral", presence.integral(), 1.0, 1e-9));
    o.check(Check::within("flux_integral", flux_total, arrived, 1e-6));
    o.check(Check::above("projector_commutator", commutator, 1e-3));
    o.series.push(series);
    Ok(o)
}
