use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::*;
use crate::linalg::invert;
use crate::matrix::ComplexMatrix;
use crate::poly::{parse, SymbolTable};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn model(text: &str, dofs: usize, dim: usize) -> ModelSpec {
    let t = Arc::new(SymbolTable::bosonic(dofs));
    ModelSpec::new(parse(text, t).unwrap(), dim, vec![]).unwrap()
}

/// Exact moments of `exp(−τ(½a Tr p² + ½b Tr q²) − Tr λ̃[q,p])` from the
/// quadratic form on a Hermitian basis.
struct GaussianOracle {
    avg_c: ComplexMatrix,
    trace_h: f64,
}

fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::new();
    for i in 0..n {
        let mut m = ComplexMatrix::zeros(n, 0, Grading::Even);
        m.set(i, i, c(1.0, 0.0));
        basis.push(m);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut m = ComplexMatrix::zeros(n, 0, Grading::Even);
            m.set(i, j, c(1.0, 0.0));
            m.set(j, i, c(1.0, 0.0));
            basis.push(m);
            let mut m = ComplexMatrix::zeros(n, 0, Grading::Even);
            m.set(i, j, c(0.0, 1.0));
            m.set(j, i, c(0.0, -1.0));
            basis.push(m);
        }
    }
    basis
}

fn gaussian_oracle(n: usize, tau: f64, a: f64, b: f64, lambda: &ComplexMatrix) -> GaussianOracle {
    let e = hermitian_basis(n);
    let m = e.len();
    let dim = 2 * m;
    // z = (x, y) with q = Σ x_k E_k, p = Σ y_k E_k; exponent = ½ zᵀ A z
    let mut form = vec![0.0; dim * dim];
    for k in 0..m {
        for l in 0..m {
            let g = (&e[k] * &e[l]).trace().re;
            form[k * dim + l] = tau * b * g;
            form[(m + k) * dim + (m + l)] = tau * a * g;
            let comm = &(&e[k] * &e[l]) - &(&e[l] * &e[k]);
            let cross = (lambda * &comm).trace().re;
            form[k * dim + (m + l)] = cross;
            form[(m + l) * dim + k] = cross;
        }
    }
    let cov = invert(&form, dim, 1e-12).expect("positive definite form");
    let mut avg_c = ComplexMatrix::zeros(n, 0, Grading::Even);
    let mut trace_h = 0.0;
    for k in 0..m {
        for l in 0..m {
            let comm = &(&e[k] * &e[l]) - &(&e[l] * &e[k]);
            avg_c = avg_c.add_scaled(&comm, cov[k * dim + (m + l)]);
            let g = (&e[k] * &e[l]).trace().re;
            trace_h += 0.5 * b * g * cov[k * dim + l] + 0.5 * a * g * cov[(m + k) * dim + (m + l)];
        }
    }
    GaussianOracle { avg_c, trace_h }
}

fn assert_within_sigma(res: &EnsembleResult, oracle: &GaussianOracle, k: f64) {
    let n = res.dim;
    for i in 0..n {
        for j in 0..n {
            let (got, want, err) = (res.avg_c.get(i, j), oracle.avg_c.get(i, j), res.avg_c_stderr.get(i, j));
            assert!((got.re - want.re).abs() <= k * err.re + 1e-12, "Re({i},{j}): {got} vs {want} ± {err}");
            assert!((got.im - want.im).abs() <= k * err.im + 1e-12, "Im({i},{j}): {got} vs {want} ± {err}");
        }
    }
    assert!(
        (res.mean_trace_h - oracle.trace_h).abs() <= k * res.stderr_trace_h,
        "TrH {} vs {} ± {}",
        res.mean_trace_h,
        oracle.trace_h,
        res.stderr_trace_h
    );
}

#[test]
fn oracle_sanity() {
    // λ̃ = 0: 8 quadratic modes give ⟨Tr𝐇⟩ = 4/τ and no charge
    let zero = ComplexMatrix::zeros(2, 0, Grading::Even);
    let o = gaussian_oracle(2, 2.0, 1.0, 1.0, &zero);
    assert!((o.trace_h - 2.0).abs() < 1e-12);
    assert!(o.avg_c.frobenius_norm() < 1e-12);
    let o = gaussian_oracle(2, 1.0, 1.0, 1.0, &default_lambda_tilde(2, 0.2));
    assert!(o.avg_c.frobenius_norm() > 1e-2);
    assert!(o.avg_c.trace().norm() < 1e-12);
}

#[test]
fn default_lambda_is_balanced() {
    let l = default_lambda_tilde(4, 0.5);
    assert_eq!(l.trace(), c(0.0, 0.0));
    assert_eq!(*l.get(0, 0), c(0.0, 0.5));
    assert_eq!(*l.get(3, 3), c(0.0, -0.5));
    let l = default_lambda_tilde(3, 1.0);
    assert_eq!(*l.get(1, 1), c(0.0, 0.0));
}

#[test]
fn coordinates_round_trip() {
    let coords = HermitianCoordinates::new(3, 2);
    assert_eq!(coords.len(), 18);
    let x: Vec<f64> = (0..18).map(|k| k as f64 * 0.25 - 1.0).collect();
    let mats = coords.to_matrices(&x);
    for m in &mats {
        assert_eq!(m.max_abs_diff(&m.adjoint()), 0.0);
    }
    for k in 0..18 {
        assert_eq!(coords.get(&mats, k), x[k]);
    }
}

#[test]
fn harmonic_n2_matches_gaussian_oracle() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let mut params = EnsembleParams::new(2, 1.0, 0.2, 11);
    params.sweeps = 20_000;
    params.proposal_scale = 1.5;
    let res = run_ensemble(&m, &params).unwrap();
    let oracle = gaussian_oracle(2, 1.0, 1.0, 1.0, &params.lambda_tilde);
    assert_within_sigma(&res, &oracle, 3.0);
    assert!(res.warnings.is_empty(), "{:?}", res.warnings);
    assert!(res.max_antihermitian_sigma <= 3.0);
}

#[test]
fn lambda_zero_control() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let mut params = EnsembleParams::new(2, 1.0, 0.0, 12);
    params.sweeps = 10_000;
    params.proposal_scale = 1.5;
    let res = run_ensemble(&m, &params).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let (v, e) = (res.avg_c.get(i, j), res.avg_c_stderr.get(i, j));
            assert!(v.re.abs() <= 3.0 * e.re + 1e-12 && v.im.abs() <= 3.0 * e.im + 1e-12);
        }
    }
    assert!((res.mean_trace_h - 4.0).abs() <= 3.0 * res.stderr_trace_h);
}

#[test]
fn chains_are_deterministic_and_independent_of_order() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let mut params = EnsembleParams::new(2, 1.0, 0.2, 3);
    params.sweeps = 200;
    params.burn_in = 10;
    let a = run_chain(&m, &params, 1).unwrap();
    let b = run_chain(&m, &params, 1).unwrap();
    assert_eq!(a, b);
    let other = run_chain(&m, &params, 0).unwrap();
    assert_ne!(a.trace_h, other.trace_h);
    let fwd = merge_chains(2, &[other.clone(), a.clone()]).unwrap();
    let rev = merge_chains(2, &[a, other]).unwrap();
    assert_eq!(fwd, rev);
}

#[test]
fn chain_count_does_not_change_the_answer() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let mut p1 = EnsembleParams::new(2, 1.0, 0.2, 21);
    p1.chains = 2;
    p1.sweeps = 8_000;
    p1.proposal_scale = 1.5;
    let mut p2 = p1.clone();
    p2.chains = 4;
    p2.sweeps = 4_000;
    let r1 = run_ensemble(&m, &p1).unwrap();
    let r2 = run_ensemble(&m, &p2).unwrap();
    let sig = (r1.stderr_trace_h.powi(2) + r2.stderr_trace_h.powi(2)).sqrt();
    assert!((r1.mean_trace_h - r2.mean_trace_h).abs() <= 3.0 * sig);
    for i in 0..2 {
        for j in 0..2 {
            let (a, b) = (r1.avg_c.get(i, j), r2.avg_c.get(i, j));
            let (ea, eb) = (r1.avg_c_stderr.get(i, j), r2.avg_c_stderr.get(i, j));
            assert!((a.im - b.im).abs() <= 3.0 * (ea.im.powi(2) + eb.im.powi(2)).sqrt() + 1e-12);
            assert!((a.re - b.re).abs() <= 3.0 * (ea.re.powi(2) + eb.re.powi(2)).sqrt() + 1e-12);
        }
    }
}

#[test]
fn unbounded_weights_are_refused() {
    let m = model("0.5*Tr(p1*p1) - 0.5*Tr(q1*q1)", 1, 2);
    let params = EnsembleParams::new(2, 1.0, 0.0, 1);
    assert!(matches!(check_weight(&m, &params), Err(crate::Error::Unbounded(_))));
    // a source too strong for the harmonic confinement
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let params = EnsembleParams::new(2, 1.0, 5.0, 1);
    assert!(matches!(check_weight(&m, &params), Err(crate::Error::Unbounded(_))));
    let m = model("0.5*Tr(p1*p1) - 0.1*Tr(q1^4) + 0.5*Tr(q1^2)", 1, 2);
    let params = EnsembleParams::new(2, 1.0, 0.0, 1);
    assert!(matches!(check_weight(&m, &params), Err(crate::Error::Unbounded(_))));
    let m = model("0.5*Tr(p1*p1) + 0.1*Tr(q1^4)", 1, 2);
    assert!(check_weight(&m, &params).is_ok());
}

#[test]
fn bad_params_rejected() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let mut p = EnsembleParams::new(2, 1.0, 0.1, 1);
    p.tau = 0.0;
    assert!(matches!(p.validate(&m), Err(crate::Error::Config(_))));
    let mut p = EnsembleParams::new(2, 1.0, 0.1, 1);
    p.lambda_tilde = ComplexMatrix::identity(2, 0);
    assert!(matches!(p.validate(&m), Err(crate::Error::Config(_))));
    let mut p = EnsembleParams::new(2, 1.0, 0.1, 1);
    p.sweeps = 10;
    assert!(matches!(p.validate(&m), Err(crate::Error::Config(_))));
    let p = EnsembleParams::new(3, 1.0, 0.1, 1);
    assert!(matches!(p.validate(&m), Err(crate::Error::Shape { .. })));
}

#[test]
fn ieff_canonical_form() {
    let hbar = 0.7;
    let avg = ComplexMatrix::from_diagonal(&[c(0.0, hbar), c(0.0, -hbar)]);
    let d = extract_ieff(&avg, None).unwrap();
    let want = ComplexMatrix::from_diagonal(&[c(0.0, 1.0), c(0.0, -1.0)]);
    assert!(d.i_eff.max_abs_diff(&want) < 1e-12);
    assert!(d.d.max_abs_diff(&ComplexMatrix::identity(2, 0).scale_real(hbar)) < 1e-12);
    assert_eq!(d.defect, 0);
    assert!((d.hbar.unwrap() - hbar).abs() < 1e-12);
    assert_eq!(d.multiplicity, (1, 1));
    assert!(d.residual < 1e-12);
}

#[test]
fn ieff_off_diagonal_closed_form() {
    let z = c(0.3, 0.4);
    let avg = ComplexMatrix::from_rows(&[&[c(0.0, 0.0), z], &[-z.conj(), c(0.0, 0.0)]]).unwrap();
    let d = extract_ieff(&avg, None).unwrap();
    assert!(d.d.max_abs_diff(&ComplexMatrix::identity(2, 0).scale_real(0.5)) < 1e-12);
    let ch = d.checks();
    assert!(ch.square < 1e-12 && ch.antihermitian < 1e-12 && ch.commutator < 1e-12 && ch.trace < 1e-12);
    assert!(d.residual < 1e-12);
}

#[test]
fn ieff_rank_deficient() {
    let avg = ComplexMatrix::from_diagonal(&[c(0.0, 1.0), c(0.0, 0.0), c(0.0, -2.0)]);
    let d = extract_ieff(&avg, None).unwrap();
    assert_eq!(d.defect, 1);
    assert_eq!(d.multiplicity, (1, 1));
    assert!(d.hbar.is_none());
    assert!(d.checks().square < 1e-12);
    assert_eq!(*d.i_eff.get(1, 1), c(0.0, 0.0));
    let zero = ComplexMatrix::zeros(2, 0, Grading::Even);
    let d = extract_ieff(&zero, None).unwrap();
    assert_eq!(d.defect, 2);
}

#[test]
fn ieff_asymmetry_is_an_error() {
    let avg = ComplexMatrix::from_rows(&[&[c(1.0, 0.5), c(0.0, 0.0)], &[c(0.0, 0.0), c(0.0, -0.5)]]).unwrap();
    let err = ComplexMatrix::from_rows(&[&[c(0.01, 0.01), c(0.01, 0.01)], &[c(0.01, 0.01), c(0.01, 0.01)]])
        .unwrap();
    assert!(matches!(extract_ieff(&avg, Some(&err)), Err(crate::Error::Asymmetric { .. })));
    // without error bars the Hermitian part is projected away
    assert!(extract_ieff(&avg, None).is_ok());
}

#[test]
fn leapfrog_preserves_volume() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let r = volume_preservation_check(&m, &StepKind::Leapfrog, 1e-2, 1).unwrap();
    assert_eq!(r.real_dim, 16);
    assert!(r.deviation <= 1e-10, "{r:?}");
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(p2*p2) + 0.1*Tr(q1^4) + 0.1*Tr(q1*q2*q1*q2)", 2, 2);
    let r = volume_preservation_check(&m, &StepKind::Leapfrog, 1e-2, 2).unwrap();
    assert!(r.deviation <= 1e-9, "{r:?}");
}

#[test]
fn rk4_volume_error_shrinks() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let a = volume_preservation_check(&m, &StepKind::Rk4, 0.2, 1).unwrap();
    let b = volume_preservation_check(&m, &StepKind::Rk4, 0.1, 1).unwrap();
    let ratio = a.deviation / b.deviation;
    assert!(ratio >= 16.0, "{a:?} {b:?}");
}

#[test]
fn euler_generator_step_is_second_order() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 2);
    let g = parse("Tr(q1*p1)", m.symbols().clone()).unwrap();
    let a = volume_preservation_check(&m, &StepKind::Generator(g.clone()), 2e-3, 1).unwrap();
    let b = volume_preservation_check(&m, &StepKind::Generator(g), 1e-3, 1).unwrap();
    // q' = (1+dt)q, p' = (1−dt)p on 8 complex entries each
    let want = 1.0 - (1.0 - 1e-6f64).powi(8);
    assert!((b.deviation - want).abs() < 1e-10, "{b:?}");
    let ratio = a.deviation / b.deviation;
    assert!((ratio - 4.0).abs() < 0.01, "ratio {ratio}");
    let zero = crate::poly::TracePolynomial::zero(m.symbols().clone());
    let r = volume_preservation_check(&m, &StepKind::Generator(zero), 1e-3, 1).unwrap();
    assert_eq!(r.det, 1.0);
}

#[test]
fn jacobian_dimension_limit() {
    let m = model("0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1, 4);
    assert!(matches!(
        volume_preservation_check(&m, &StepKind::Leapfrog, 1e-2, 1),
        Err(crate::Error::DimensionOverflow { .. })
    ));
}
