use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn eos() -> EosSpec {
    EosSpec::new(1.0, 0.01, 1e-6)
}

fn gravastar() -> TovSolution {
    integrate_star(1.05, &eos(), &TovOptions::default()).unwrap()
}

#[test]
fn rhs_examples() {
    let d = tov_rhs_with_density(2.0, 0.3, 0.0, 0.0).unwrap();
    assert_eq!(d[0], 0.0);
    assert_eq!(d[2], 0.0);
    assert!((d[1] - 0.3 / (2.0 * (2.0 - 0.6))).abs() < 1e-16);

    let e = EosSpec::new(1.0, 1e-3, 1e-6);
    assert_eq!(e.branch_for(2.0), Branch::Interior);
    let rho = e.density(2.0, Branch::Interior);
    assert!((rho + 2.0 - 1e-3).abs() < 1e-15);
    let d = tov_rhs(1.0, -0.5, 0.0, 2.0, &e).unwrap();
    let dnu = (-0.5 + 4.0 * PI * 2.0) / (1.0 * 2.0);
    assert!((d[2] + (rho + 2.0) * dnu).abs() < 1e-15);
    assert!((d[2] / dnu + 1e-3).abs() < 1e-12);

    assert_eq!(e.branch_for(0.5), Branch::Exterior);
    assert_eq!(e.density(0.5, e.branch_for(0.5)), 1.5);
    assert_eq!(e.without_jump().branch_for(2.0), Branch::Exterior);
}

#[test]
fn rhs_rejects_horizon_and_bad_radius() {
    assert!(matches!(
        tov_rhs_with_density(1.0, 0.5, 0.1, 0.3),
        Err(Error::Horizon { .. })
    ));
    assert!(matches!(
        tov_rhs_with_density(0.0, 0.0, 0.1, 0.3),
        Err(Error::Config(_))
    ));
}

#[test]
fn eos_validation() {
    assert!(eos().validate().is_ok());
    assert!(EosSpec::new(1.0, 0.01, 2.0).validate().is_err());
    assert!(EosSpec::new(1.0, 0.0, 1e-6).validate().is_err());
    assert!(EosSpec::new(1.0, 0.01, 0.0).validate().is_err());
    assert!(EosSpec::new(f64::NAN, 0.01, 1e-6).validate().is_err());
    assert!(integrate_star(1e-7, &eos(), &TovOptions::default()).is_err());
    let bad = TovOptions {
        rtol: 0.0,
        ..TovOptions::default()
    };
    assert!(matches!(integrate_star(1.05, &eos(), &bad), Err(Error::Config(_))));
}

#[test]
fn below_threshold_matches_star_without_jump() {
    let opts = TovOptions::default();
    let a = integrate_star(0.5, &eos(), &opts).unwrap();
    let b = integrate_star(0.5, &eos().without_jump(), &opts).unwrap();
    assert!(a.jump.is_none());
    assert_eq!(a, b);
    // ordinary star: positive mass, compactness strictly inside (0, 1)
    assert!(a.m_total > 0.0 && a.min_compactness > 0.0 && a.min_compactness < 1.0);
}

#[test]
fn series_start() {
    let s = gravastar();
    let (r0, p_c) = (s.r[0], 1.05);
    let rho_c = -p_c + 0.01;
    assert!((s.m[0] - 4.0 / 3.0 * PI * rho_c * r0 * r0 * r0).abs() < 1e-30);
    assert!((r0 - 1e-6 * length_scale(p_c, &eos())).abs() < 1e-20);
    assert!(s.p[0] < p_c && p_c - s.p[0] < 1e-9);
}

#[test]
fn gravastar_is_horizonless_and_matches_schwarzschild() {
    let s = gravastar();
    assert!(s.min_compactness > 0.0);
    assert!(s.compactness().iter().all(|&c| c > 0.0));
    assert!(s.nu.iter().chain(&s.exterior.nu).all(|nu| (2.0 * nu).exp() > 0.0));
    assert!(s.exterior.max_relative_deviation <= 1e-6);
    assert_eq!(*s.exterior.r.last().unwrap(), 10.0 * s.r_surface);
    // surface normalization
    let nu_r = *s.nu.last().unwrap();
    let target = 1.0 - 2.0 * s.m_total / s.r_surface;
    assert!(((2.0 * nu_r).exp() - target).abs() < 1e-14);
    // independent reference values from a separate adaptive integrator
    assert!((s.r_surface - 58.2).abs() < 0.05, "R = {}", s.r_surface);
    assert!((s.m_total - 29.06).abs() < 0.01, "M = {}", s.m_total);
    assert!((s.min_compactness - 1.09e-3).abs() < 0.02e-3);
}

#[test]
fn jump_keeps_pressure_and_switches_density_once() {
    let s = gravastar();
    let j = s.jump.expect("jump reached");
    assert!(j.p_residual <= 1e-12);
    assert!(((j.rho_outside - j.rho_inside) - (4.0 - 0.01)).abs() < 1e-12);
    let dup: Vec<usize> = (1..s.r.len()).filter(|&i| s.r[i] == s.r[i - 1]).collect();
    assert_eq!(dup.len(), 1);
    let i = dup[0];
    assert_eq!(s.r[i], j.r);
    assert_eq!(s.p[i], s.p[i - 1]);
    assert_eq!(s.p[i], 1.0);
    assert!(s.rho[..i].iter().all(|&rho| rho < 0.0));
    assert!(s.rho[i..].iter().all(|&rho| rho > 0.0));
    assert!(s.max_pressure_increase() < 0.0);
    // m grows wherever ρ > 0
    for k in i..s.m.len() - 1 {
        assert!(s.m[k + 1] >= s.m[k]);
    }
    assert!(j.m < 0.0);
}

#[test]
fn mass_converges_under_tolerance_halving() {
    for pc in [1.01, 1.05, 0.5] {
        let o = TovOptions::default();
        let a = integrate_star(pc, &eos(), &o).unwrap();
        let b = integrate_star(pc, &eos(), &TovOptions { rtol: o.rtol / 2.0, ..o }).unwrap();
        let rel = (a.m_total - b.m_total).abs() / a.m_total.abs();
        assert!(rel < 1e-8, "p_c = {pc}: {rel:e}");
    }
}

#[test]
fn literal_high_pressure_run_never_reaches_jump() {
    // with ε = 1e-2 p_jump the interior pressure only falls like ε·ln r
    let r = integrate_star(1e3, &eos(), &TovOptions::default());
    match r {
        Err(Error::NoSurface { p, target, .. }) => {
            assert!(p > 999.0);
            assert_eq!(target, 1.0);
        }
        other => panic!("expected NoSurface, got {other:?}"),
    }
}

#[test]
fn small_radius_budget_reports_no_surface() {
    let opts = TovOptions {
        r_max: Some(1.0),
        ..TovOptions::default()
    };
    assert!(matches!(
        integrate_star(0.5, &eos(), &opts),
        Err(Error::NoSurface { .. })
    ));
}

#[test]
fn weyl_identity_scaling_is_exact() {
    let s = gravastar();
    let samples = metric_samples(&s, 500, 3).unwrap();
    let ones = vec![1.0; samples.len()];
    assert_eq!(weyl_invariance_check(&samples, &ones).unwrap(), 0.0);
    assert_eq!(curvature_control_check(&samples, &ones).unwrap(), 0.0);
}

#[test]
fn weyl_invariance_on_random_scalings() {
    let s = gravastar();
    let samples = metric_samples(&s, 10_000, 11).unwrap();
    assert!(samples.iter().all(|m| m.g00 > 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lambdas: Vec<f64> = (0..samples.len()).map(|_| rng.random_range(0.5..2.0)).collect();
    let dev = weyl_invariance_check(&samples, &lambdas).unwrap();
    assert!(dev <= 1e-12, "{dev:e}");
    let control = curvature_control_check(&samples, &lambdas).unwrap();
    assert!(control > 1e-3, "{control:e}");
}

#[test]
fn weyl_rejects_bad_inputs() {
    let s = gravastar();
    let mut samples = metric_samples(&s, 4, 1).unwrap();
    assert!(matches!(
        weyl_invariance_check(&samples, &[1.0; 3]),
        Err(Error::Shape { .. })
    ));
    assert!(weyl_invariance_check(&samples, &[1.0, 0.0, 1.0, 1.0]).is_err());
    samples[2].g00 = -1.0;
    assert!(weyl_invariance_check(&samples, &[1.0; 4]).is_err());
}

#[test]
fn sweep_single_point_equals_direct_run() {
    let opts = TovOptions::default();
    let rows = sweep(&sweep_grid(&[1.05], &[eos()]), &opts);
    assert_eq!(rows.len(), 1);
    let direct = StarSummary::from(&gravastar());
    assert_eq!(rows[0].outcome, Ok(direct));
}

#[test]
fn sweep_isolates_failures() {
    let opts = TovOptions::default();
    let points = sweep_grid(&[0.5, 1e3, 1.05], &[eos()]);
    let rows = sweep(&points, &opts);
    assert_eq!(rows.len(), 3);
    assert!(rows[0].outcome.is_ok());
    assert!(matches!(rows[1].outcome, Err(Error::NoSurface { .. })));
    assert_eq!(rows[2].outcome, Ok(StarSummary::from(&gravastar())));
    assert_eq!(rows[1].point.p_center, 1e3);
}

#[test]
fn sweep_grid_order() {
    let e2 = EosSpec::new(1.0, 0.02, 1e-6);
    let g = sweep_grid(&[0.5, 1.05], &[eos(), e2]);
    let got: Vec<(f64, f64)> = g.iter().map(|p| (p.p_center, p.eos.epsilon)).collect();
    assert_eq!(got, vec![(0.5, 0.01), (1.05, 0.01), (0.5, 0.02), (1.05, 0.02)]);
}
