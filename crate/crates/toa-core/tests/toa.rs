mod support;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use toa_core::toa::*;
use toa_core::*;

fn packet(grid: &Grid1D, x0: f64, k0: f64, sigma: f64) -> WaveFunction {
    make_gaussian(grid, &GaussianSpec { x0, k0, sigma, m: 1.0 }).unwrap()
}

/// Mixture with weight on both momentum signs and near `k = 0`.
fn mixed_state(grid: &Grid1D) -> WaveFunction {
    let mut psi = WaveFunction::zeros(*grid, Repr::Position);
    for (c, x0, k0, s) in [(1.0, -5.0, 0.3, 1.5), (0.7, 3.0, -1.0, 1.0), (0.5, 0.0, 2.0, 2.0)] {
        psi = psi.add(&packet(grid, x0, k0, s).scaled(C::new(c, 0.3 * c))).unwrap();
    }
    psi.normalized().unwrap()
}

#[test]
fn right_movers_are_complete_and_peak_at_the_classical_time() {
    let grid = Grid1D::centered(40.0, 2048).unwrap();
    let psi = packet(&grid, -10.0, 5.0, 1.0);
    let st = toa_transform(&psi, &time_grid(-4.0, 8.0, 6000), 1.0).unwrap();
    assert!((st.total() - 1.0).abs() < 1e-6);
    assert!((st.peak_time() - 2.0).abs() < 0.1);
}

#[test]
fn coarse_or_short_time_grids_are_rejected() {
    let grid = Grid1D::centered(40.0, 2048).unwrap();
    let psi = packet(&grid, -10.0, 5.0, 1.0);
    assert!(matches!(toa_transform(&psi, &time_grid(-4.0, 8.0, 200), 1.0), Err(Error::Aliasing(_))));
    assert!(matches!(toa_transform(&psi, &time_grid(1.5, 2.5, 2000), 1.0), Err(Error::Aliasing(_))));
}

#[test]
fn eigenfunctions_evolve_by_a_time_shift() {
    // e^{-iHt}|T⟩ = |T − t⟩
    for &k in &[-3.0, -0.2, 0.5, 4.0] {
        let a = toa_eigenfunction(1.7, k, 2.0) * C::from_polar(1.0, -k * k / 4.0 * 0.6);
        assert!((a - toa_eigenfunction(1.1, k, 2.0)).norm() < 1e-14);
    }
}

#[test]
fn eigenfunctions_satisfy_the_unregularized_operator() {
    let grid = Grid1D::centered(60.0, 4096).unwrap();
    // T ψ_T = T ψ_T applied to a smooth test state: ⟨φ|Tψ⟩ = ∫ T g*(T) h(T)
    let phi = packet(&grid, -12.0, 4.0, 1.2);
    let o = CutoffProfile::new(1e-3).unwrap();
    let lhs = toa_expectation(&phi, &o, 1.0);
    let st = toa_transform(&phi, &time_grid(-2.0, 10.0, 8000), 1.0).unwrap();
    let rhs: f64 = st.times.windows(2).zip(st.density().windows(2)).map(|(t, d)| 0.25 * (t[1] - t[0]) * (t[0] * d[0] + t[1] * d[1]) * 2.0).sum();
    assert!((lhs - rhs).abs() < 1e-5, "{lhs} vs {rhs}");
}

#[test]
fn regularized_operator_is_hermitian() {
    let grid = Grid1D::centered(40.0, 2048).unwrap();
    let psi = mixed_state(&grid);
    let phi = packet(&grid, 2.0, -0.5, 1.2);
    let o = CutoffProfile::new(0.1).unwrap();
    let a = phi.to_momentum().inner(&apply_regularized_toa(&psi, &o, 1.0)).unwrap();
    let b = psi.to_momentum().inner(&apply_regularized_toa(&phi, &o, 1.0)).unwrap();
    assert!((a - b.conj()).norm() < 1e-12);
}

#[test]
fn commutator_equals_minus_i_cutoff_weight() {
    // the momentum spacing must resolve the cutoff ramp
    let grid = Grid1D::centered(160.0, 8192).unwrap();
    let psi = mixed_state(&grid);
    let o = CutoffProfile::new(0.3).unwrap();
    let (on, _) = cutoff_weights(&psi, &o);
    let c = toa_commutator(&psi, &o, 1.0);
    assert!((c + C::new(0.0, on)).norm() < 1e-6);
}

#[test]
fn expectation_falls_at_rate_cutoff_weight() {
    let grid = Grid1D::centered(160.0, 8192).unwrap();
    let psi = mixed_state(&grid);
    let o = CutoffProfile::new(0.3).unwrap();
    for t in [0.5, 1.0] {
        let d = toa_drift(&psi, &o, t, 1.0);
        assert!(d.low_momentum_weight > 1e-3);
        assert!((d.evolved - (d.initial + t * d.low_momentum_weight)).abs() < 1e-6);
    }
}

#[test]
fn kernel_matches_delta_plus_principal_value() {
    let ts = time_grid(-10.0, 16.0, 1301);
    let gauss = |c: f64, w: f64| ts.iter().map(|t| C::new((-(t - c) * (t - c) / (2.0 * w * w)).exp(), 0.0)).collect::<Vec<_>>();
    let r = overlap_kernel_check(&gauss(0.0, 0.5), &gauss(6.0, 0.5), &ts).unwrap();
    assert!(r.residual() < 1e-4);
    // disjoint supports: only the principal value survives
    assert!(r.closed_form.re.abs() < 1e-10 && r.closed_form.im.abs() > 1e-3);
}

#[test]
fn kick_shifts_the_energy_by_q() {
    let grid = Grid1D::centered(20.0, 1024).unwrap();
    let psi = packet(&grid, 0.0, 5.0, 2.0);
    let o = CutoffProfile::for_packet(5.0).unwrap();
    let e0 = mean_energy(&psi, 1.0);
    let k = energy_shift_kick(&psi, &o, 2.0, 1.0).unwrap();
    assert!((mean_energy(&k, 1.0) - e0 - 2.0).abs() < 0.02);
    assert!((k.norm_sqr() - 1.0).abs() < 1e-9);
    assert!(energy_shift_kick(&psi, &o, -20.0, 1.0).is_err());
    let slow = packet(&grid, 0.0, 0.05, 2.0);
    assert!(matches!(energy_shift_kick(&slow, &o, 1.0, 1.0), Err(Error::SupportViolation(_))));
}

#[test]
fn coherent_state_energy_scales_inversely_with_width() {
    let grid = Grid1D::centered(60.0, 8192).unwrap();
    let e = |d: f64| mean_energy(&coherent_toa_state(&CoherentToaSpec { t0: 4.0, delta: d, m: 1.0 }, &grid).unwrap(), 1.0);
    for d in [0.1, 0.4] {
        assert!((e(d) * d * std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-3);
    }
    assert!(matches!(coherent_toa_state(&CoherentToaSpec { t0: 0.0, delta: 1e-4, m: 1.0 }, &grid), Err(Error::Resolution(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cutoff_profile_is_a_monotone_step(eps in 0.01f64..2.0, u1 in 0.0f64..1.5, u2 in 0.0f64..1.5) {
        let o = CutoffProfile::new(eps).unwrap();
        let (a, b) = if u1 < u2 { (u1, u2) } else { (u2, u1) };
        prop_assert!(o.value(a * eps) <= o.value(b * eps));
        prop_assert!(o.value(-a * eps) == o.value(a * eps));
        prop_assert!((0.0..=1.0).contains(&o.value(a * eps)));
        prop_assert_eq!(o.value(0.0), 0.0);
        prop_assert_eq!(o.value(eps * 1.0001), 1.0);
    }

    #[test]
    fn commutator_is_exact_on_random_mixtures(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, k1 in -2.0f64..2.0, eps in 0.7f64..2.0) {
        let grid = Grid1D::centered(80.0, 4096).unwrap();
        let psi = packet(&grid, -3.0, k1, 1.5).scaled(C::new(1.0, c1)).add(&packet(&grid, 4.0, 1.0, 1.0).scaled(C::new(c2, 0.0))).unwrap().normalized().unwrap();
        let o = CutoffProfile::new(eps).unwrap();
        let (on, _) = cutoff_weights(&psi, &o);
        prop_assert!((toa_commutator(&psi, &o, 1.0) + C::new(0.0, on)).norm() < 1e-6);
    }
}
