mod support;

use proptest::prelude::*;
use support::gaussian_density;
use toa_core::measurement::*;
use toa_core::propagator::free_evolve;
use toa_core::*;

fn packet(grid: &Grid1D, x0: f64, k0: f64, sigma: f64) -> WaveFunction {
    make_gaussian(grid, &GaussianSpec { x0, k0, sigma, m: 1.0 }).unwrap()
}

#[test]
fn current_matches_the_gaussian_velocity_field() {
    let grid = Grid1D::centered(30.0, 1024).unwrap();
    let (x0, k0, sigma) = (-5.0, 4.0, 1.2);
    let psi = packet(&grid, x0, k0, sigma);
    let tau = 2.0 * sigma * sigma;
    for &t in &[0.0, 0.8, 1.3, 2.0] {
        for &x in &[-1.0, 0.0, 0.37] {
            let xc = x0 + k0 * t;
            let v = k0 + (x - xc) * t / (tau * tau + t * t);
            let expect = gaussian_density(x, t, x0, k0, sigma, 1.0) * v;
            let got = current_at(&free_evolve(&psi, 1.0, t), x, 1.0);
            assert!((got - expect).abs() < 1e-10, "t {t} x {x}: {got} vs {expect}");
        }
    }
}

#[test]
fn continuity_holds_on_smooth_fixtures() {
    let grid = Grid1D::centered(30.0, 1024).unwrap();
    for (x0, k0, s) in [(-5.0, 5.0, 1.0), (-3.0, 2.0, 1.5), (-8.0, 8.0, 0.7)] {
        let psi = packet(&grid, x0, k0, s);
        let times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64 * (-x0 / k0)).collect();
        assert!(continuity_residual(&psi, 0.0, &times, 1.0, 1e-3) < 1e-6);
    }
}

#[test]
fn repeated_measurement_closes_and_approaches_the_flux() {
    let grid = Grid1D::centered(30.0, 1024).unwrap();
    let psi = packet(&grid, -7.0, 5.0, 1.0);
    let s = repeated_measurement_arrival(&psi, &MeasurementSchedule::new(0.0, 3e-3, 3.0, 1.0)).unwrap();
    assert!(s.closure_error().abs() < 1e-9);
    assert!(s.probabilities.iter().all(|p| *p >= 0.0));
    assert_eq!(s.times.len(), 1000);
    assert!((s.peak_time().unwrap() - 1.4).abs() < 0.3);
}

#[test]
fn zeno_suppresses_detection() {
    let grid = Grid1D::centered(20.0, 512).unwrap();
    let psi = packet(&grid, -7.0, 5.0, 1.0);
    let scan = zeno_scan(&psi, 0.0, &[3e-3, 1e-3, 3e-4], 3.0, 1.0).unwrap();
    assert!(scan.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(scan[2].1 < 0.05);
    assert!(zeno_scan(&psi, 0.0, &[1e-3, 3e-3], 3.0, 1.0).is_err());
}

#[test]
fn schedule_validation() {
    let grid = Grid1D::centered(20.0, 512).unwrap();
    let inside = packet(&grid, 2.0, 5.0, 1.0);
    assert!(matches!(repeated_measurement_arrival(&inside, &MeasurementSchedule::new(0.0, 1e-2, 1.0, 1.0)), Err(Error::SupportViolation(_))));
    let mut bad = MeasurementSchedule::new(0.0, 1e-2, 1.0, 1.0);
    bad.dt = 3e-3;
    assert!(bad.validate().is_err());
    assert!(MeasurementSchedule::new(0.0, 1e-7, 1.0, 1.0).validate().is_err());
}

#[test]
fn presence_distribution_is_normalized_and_checks_its_window() {
    let grid = Grid1D::centered(30.0, 1024).unwrap();
    let psi = packet(&grid, -8.0, 5.0, 1.0);
    let d = presence_distribution(&psi, 0.0, -1.0, 5.0, 601, 1.0).unwrap();
    assert!((d.integral() - 1.0).abs() < 1e-12);
    assert!(matches!(presence_distribution(&psi, 0.0, 1.0, 2.0, 101, 1.0), Err(Error::WindowTooSmall(_))));
}

#[test]
fn projectors_at_different_times_do_not_commute() {
    let grid = Grid1D::centered(30.0, 1024).unwrap();
    let psi = packet(&grid, -2.0, 3.0, 1.0);
    assert!(projector_commutator_norm(&psi, 0.0, 0.4, 0.4, 1.0) < 1e-12);
    assert!(projector_commutator_norm(&psi, 0.0, 0.2, 0.9, 1.0) > 1e-3);
}

#[test]
fn interval_weight_is_exact_for_the_band_limited_state() {
    let grid = Grid1D::centered(30.0, 512).unwrap();
    let psi = packet(&grid, 0.0, 1.0, 1.0);
    // half of a symmetric Gaussian
    assert!((interval_weight(&psi, 0.0, 30.0) - 0.5).abs() < 1e-10);
    let erf_1 = 0.842_700_792_949_714_9;
    assert!((interval_weight(&psi, -2f64.sqrt(), 2f64.sqrt()) - erf_1).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closure_holds_for_any_schedule(k0 in 2.0f64..6.0, sigma in 0.8f64..1.5, n in 20usize..200) {
        let grid = Grid1D::centered(40.0, 1024).unwrap();
        let psi = packet(&grid, -12.0, k0, sigma);
        let t_max = 2.0;
        let delta = t_max / n as f64;
        match repeated_measurement_arrival(&psi, &MeasurementSchedule::new(0.0, delta, t_max, 1.0)) {
            Ok(s) => {
                prop_assert!(s.closure_error().abs() < 1e-9);
                prop_assert!(s.detected() <= 1.0 + 1e-12);
            }
            Err(e) => prop_assert!(matches!(e, Error::WrapAround(_))),
        }
    }
}
