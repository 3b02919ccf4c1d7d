mod support;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;
use toa_core::scattering::*;
use toa_core::Error;

/// Random clock-model draw used by the matching-formula comparison.
fn draw(rng: &mut ChaCha8Rng) -> TriggerClockParams {
    let m = rng.gen_range(0.5..2.0);
    let alpha = 10f64.powf(rng.gen_range(-1.0..1.7));
    let e_k = 10f64.powf(rng.gen_range(-1.0..1.3));
    let p = rng.gen_range(-0.9 * e_k..20.0);
    TriggerClockParams { m, alpha, e_k, p }
}

fn width_for(p: &TriggerClockParams) -> f64 {
    let k = (2.0 * p.m * (p.e_k + p.p.abs() + p.alpha * p.alpha)).sqrt();
    2e-3 / k.max(1.0)
}

#[test]
fn matching_formula_agrees_with_transfer_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut worst_flux = 0.0f64;
    for _ in 0..200 {
        let prm = draw(&mut rng);
        let a = clock_scatter(&prm).unwrap();
        let o = clock_delta_limit(prm.m, prm.alpha, prm.e_k, prm.p, width_for(&prm));
        let pairs = [(a.phi_r_up, o.transmitted[0]), (a.phi_r_down, o.transmitted[1]), (a.phi_l_up, o.reflected[0]), (a.phi_l_down, o.reflected[1])];
        for (x, y) in pairs {
            worst = worst.max((x - y).norm());
        }
        worst_flux = worst_flux.max(a.flux_residual().abs());
    }
    assert!(worst < 1e-6, "max amplitude deviation {worst:e}");
    assert!(worst_flux < 1e-9, "flux residual {worst_flux:e}");
}

#[test]
fn multi_trigger_is_exact() {
    for n in 1..=6u32 {
        let exact = 1.0 - 1.0 / f64::from(1u32 << n);
        assert!((trigger_flip_probability(n) - exact).abs() <= f64::EPSILON);
    }
}

#[test]
fn limit_matches_large_alpha() {
    let (e_k, p) = (3.0, 1.5);
    let lim = clock_scatter_limit(e_k, p, 1.0).unwrap();
    let big = clock_scatter(&TriggerClockParams { m: 1.0, alpha: 1e9, e_k, p }).unwrap();
    assert!((lim.phi_r_down - big.phi_r_down).norm() < 1e-8);
    let expect = e_k.sqrt() / (e_k.sqrt() + (e_k + p).sqrt());
    assert!((lim.phi_r_down.norm() - expect).abs() < 1e-14);
    assert!(lim.flux_residual().abs() < 1e-14);
}

#[test]
fn zero_clock_momentum_flips_half_in_the_limit() {
    let a = clock_scatter_limit(2.0, 0.0, 1.0).unwrap();
    assert!((detection_probability(&a) - 0.5).abs() < 1e-14);
}

#[test]
fn closed_down_channel_is_reported() {
    let e = clock_scatter(&TriggerClockParams { m: 1.0, alpha: 1.0, e_k: 1.0, p: -2.0 });
    assert!(matches!(e, Err(Error::DegenerateChannel(_))));
    assert_eq!(detection_closed_form(1.0, Some(1.0), 1.0, -2.0), 0.0);
}

#[test]
fn square_and_jump_variants_approach_the_delta() {
    let prm = TriggerClockParams { m: 1.0, alpha: 4.0, e_k: 2.0, p: 0.7 };
    let a = clock_scatter(&prm).unwrap();
    let j = clock_scatter_jump(&prm).unwrap();
    assert!((a.phi_r_down - j.phi_r_down).norm() < 1e-12);
    let s = clock_scatter_square(&prm, 1e-4).unwrap();
    assert!((a.phi_r_down - s.phi_r_down).norm() < 1e-3);
    let o = clock_square(1.0, 4.0, 2.0, 0.7, 0.3);
    let s = clock_scatter_square(&prm, 0.3).unwrap();
    assert!((o.transmitted[1] - s.phi_r_down).norm() < 1e-10);
    assert!((o.reflected[0] - s.phi_l_up).norm() < 1e-10);
}

#[test]
fn booster_matches_transfer_oracle() {
    let prm = BoosterParams { m: 1.0, alpha: 3.0, w: 20.0, v1: 20.0, v2: 10.0, e: 5.0 };
    let b = booster_scatter(&prm).unwrap();
    // delta as a Richardson-extrapolated square straddling the step
    let at = |w: f64| {
        let h = prm.alpha / w;
        let half = [[re(0.0), re(h)], [re(h), re(prm.v1)]];
        let half_r = [[re(prm.w), re(h)], [re(h), re(-prm.v2)]];
        transfer_scatter(prm.m, prm.e, [0.0, prm.v1], [prm.w, -prm.v2], -0.5 * w, &[(0.5 * w, half), (0.5 * w, half_r)], 0)
    };
    let w = 1e-4;
    let r = [at(w), at(w / 2.0), at(w / 4.0)];
    let ex = |f: &dyn Fn(&TransferResult) -> C| {
        let a = [f(&r[0]), f(&r[1]), f(&r[2])];
        (4.0 * (2.0 * a[2] - a[1]) - (2.0 * a[1] - a[0])) / 3.0
    };
    assert!((ex(&|t| t.reflected[0]) - b.r_up).norm() < 1e-6);
    assert!((ex(&|t| t.transmitted[1]) - b.t_down).norm() < 1e-6);
    assert!((b.reflection() + b.transmission() - 1.0).abs() < 1e-12);
}

#[test]
fn booster_rejects_open_barrier() {
    let prm = BoosterParams { m: 1.0, alpha: 3.0, w: 2.0, v1: 20.0, v2: 10.0, e: 5.0 };
    assert!(matches!(booster_scatter(&prm), Err(Error::InvalidRegime(_))));
}

proptest! {
    #[test]
    fn flux_is_conserved(m in 0.3f64..3.0, alpha in 0.01f64..100.0, e_k in 0.01f64..50.0, frac in -0.99f64..5.0) {
        let p = frac * e_k;
        let a = clock_scatter(&TriggerClockParams { m, alpha, e_k, p }).unwrap();
        prop_assert!(a.flux_residual().abs() < 1e-10);
        let d = detection_probability(&a);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - detection_closed_form(m, Some(alpha), e_k, p)).abs() < 1e-12);
    }

    #[test]
    fn amplitude_relations_hold(m in 0.3f64..3.0, alpha in 0.01f64..100.0, e_k in 0.01f64..50.0, frac in -0.99f64..5.0) {
        let a = clock_scatter(&TriggerClockParams { m, alpha, e_k, p: frac * e_k }).unwrap();
        prop_assert!((a.phi_l_up - (a.phi_r_up - 1.0)).norm() < 1e-12);
        prop_assert!((a.phi_l_down - a.phi_r_down).norm() < 1e-12);
    }

    #[test]
    fn detection_rises_with_coupling(e_k in 0.1f64..20.0, frac in -0.5f64..3.0, a1 in 0.1f64..10.0, scale in 1.01f64..10.0) {
        let p = frac * e_k;
        let lo = detection_closed_form(1.0, Some(a1), e_k, p);
        let hi = detection_closed_form(1.0, Some(a1 * scale), e_k, p);
        prop_assert!(hi >= lo);
        prop_assert!(detection_closed_form(1.0, None, e_k, p) >= hi);
    }

    #[test]
    fn multi_trigger_grows(n in 1u32..30) {
        prop_assert!(trigger_flip_probability(n + 1) > trigger_flip_probability(n));
    }
}
