//! Invariant suites behind `tracedyn check <suite>`.
//!
//! Each suite returns measured values against tolerances rather than asserting,
//! so the same code feeds the command line report and the acceptance tests.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracedyn_core::dynamics::{
    evolve, step_rk4, EvolveOptions, Integrator, LagrangianFlow, ModelSpec, PhaseSpaceState,
};
use tracedyn_core::ensemble::{
    extract_ieff, volume_preservation_check, EnsembleParams, EnsembleResult,
    StepKind,
};
use tracedyn_core::gravastar::{
    curvature_control_check, integrate_star, metric_samples, weyl_invariance_check, EosSpec,
    TovOptions, TovSolution,
};
use tracedyn_core::linalg::{hermitian_eigenvalues, invert};
use tracedyn_core::matrix::random_hermitian_with;
use tracedyn_core::poly::{cyclic_derivative, parse, Binding, SymbolTable, TracePolynomial};
use tracedyn_core::{Complex64, ComplexMatrix, GradedMatrix, Grading, Grassmann, Parity};

use crate::report::{CheckItem, Relation, SuiteReport};
use crate::runner::run_ensemble_parallel;
use crate::RunError;

pub const DEFAULT_SEED: u64 = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Derivative,
    Conservation,
    Equivalence,
    Liouville,
    Ensemble,
    Gravastar,
    Weyl,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Algebra,
        Suite::Derivative,
        Suite::Conservation,
        Suite::Equivalence,
        Suite::Liouville,
        Suite::Ensemble,
        Suite::Gravastar,
        Suite::Weyl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Derivative => "derivative",
            Suite::Conservation => "conservation",
            Suite::Equivalence => "equivalence",
            Suite::Liouville => "liouville",
            Suite::Ensemble => "ensemble",
            Suite::Gravastar => "gravastar",
            Suite::Weyl => "weyl",
        }
    }

    pub fn from_name(name: &str) -> Result<Suite, RunError> {
        Suite::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
            RunError::Config(format!("unknown suite `{name}`; expected one of {}", names.join(", ")))
        })
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let items = match suite {
        Suite::Algebra => algebra_items(seed, 1000),
        Suite::Derivative => derivative_items(seed),
        Suite::Conservation => conservation_items(seed),
        Suite::Equivalence => equivalence_items(seed),
        Suite::Liouville => liouville_items(seed),
        Suite::Ensemble => ensemble_items(seed),
        Suite::Gravastar => gravastar_items(),
        Suite::Weyl => weyl_items(seed),
    };
    SuiteReport {
        suite: suite.name().to_string(),
        seed,
        items,
    }
}

/// Hermitian matrix with unit Frobenius norm.
pub fn unit_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let m = random_hermitian_with(rng, n);
    let norm = m.frobenius_norm();
    m.scale_real(1.0 / norm)
}

/// Unit-norm Hermitian coordinates and momenta drawn from `seed`.
pub fn random_state(seed: u64, dofs: usize, n: usize, scale: f64) -> PhaseSpaceState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = (0..dofs).map(|_| unit_hermitian(&mut rng, n).scale_real(scale)).collect();
    let p = (0..dofs).map(|_| unit_hermitian(&mut rng, n).scale_real(scale)).collect();
    PhaseSpaceState::new(q, p, 0.0).expect("matching shapes")
}

pub fn bosonic_model(text: &str, dofs: usize, n: usize) -> Result<ModelSpec, RunError> {
    let t = Arc::new(SymbolTable::bosonic(dofs));
    Ok(ModelSpec::new(parse(text, t)?, n, vec![])?)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so a broken measurement cannot pass
    xs.into_iter()
        .fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

// ---------------------------------------------------------------- algebra

pub fn algebra_items(seed: u64, trials: usize) -> Vec<CheckItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grading = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { Grading::Odd } else { Grading::Even };
    let mut cyclic: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    let mut square: f64 = 0.0;
    let mut soul: f64 = 0.0;
    for _ in 0..trials {
        let g = rng.random_range(1..=6u8);
        let n = rng.random_range(1..=4usize);
        let (ga, gb) = (grading(&mut rng), grading(&mut rng));
        let a = GradedMatrix::random(&mut rng, n, g, ga, 0.6);
        let b = GradedMatrix::random(&mut rng, n, g, gb, 0.6);
        let ab = (&a * &b).trace();
        let ba = (&b * &a).trace().scale(Complex64::new(ga.koszul(gb), 0.0));
        cyclic = cyclic.max((&ab - &ba).norm_sqr().sqrt() / ab.norm_sqr().sqrt().max(1.0));

        let prod = &a * &b;
        let lhs = prod.adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        adjoint = adjoint.max((&lhs - &rhs).frobenius_norm() / prod.frobenius_norm().max(1.0));

        let x = Grassmann::random(&mut rng, g, Parity::Odd, 0.7);
        let x2 = &x * &x;
        square = square.max(x2.norm_sqr().sqrt() / x.norm_sqr().max(1.0));

        let y = Grassmann::random(&mut rng, g, Parity::Mixed, 0.7);
        let s = &y - &Grassmann::scalar(y.body(), g);
        let mut power = s.clone();
        for _ in 0..g {
            power = &power * &s;
        }
        soul = soul.max(power.norm_sqr().sqrt());
    }
    vec![
        CheckItem::at_most("graded trace cyclicity Tr(AB) = ±Tr(BA)", cyclic, 1e-12),
        CheckItem::at_most("adjoint reverses products (AB)† = B†A†", adjoint, 1e-12),
        CheckItem::at_most("odd elements square to zero", square, 1e-12),
        CheckItem::at_most("soul^(G+1) = 0", soul, 0.0),
    ]
    .into_iter()
    .map(|i| i.with_detail(format!("{trials} trials, G <= 6, N <= 4")))
    .collect()
}

// ---------------------------------------------------------------- derivative

/// `(name, polynomial, dofs)` fixtures for the gradient check.
pub const DERIVATIVE_FIXTURES: [(&str, &str, usize); 5] = [
    ("harmonic", "0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", 1),
    ("quartic", "0.5*Tr(p1^2) + 0.25*Tr(q1^4)", 1),
    (
        "two-dof coupled",
        "0.5*Tr(p1*p1) + 0.5*Tr(p2*p2) + 0.1*Tr(q1*q2*q1*q2) + 0.1*Tr(q1*q1*q2*q2)",
        2,
    ),
    ("degree-6 word", "0.2*Tr(q1^6) + Tr(q1*q2*q1*q1*q2*q2)", 2),
    ("mixed qp word", "Tr(q1*p1*q1*p1) - 0.3i*Tr(q1*q2*p2*q1*p1*q2)", 2),
];

fn evaluate_at(poly: &TracePolynomial, mats: &[ComplexMatrix]) -> Result<Complex64, RunError> {
    let mut b = Binding::new(poly.symbols());
    for (id, m) in mats.iter().enumerate() {
        b.bind(id, m)?;
    }
    Ok(poly.evaluate(&b)?)
}

/// Largest relative mismatch between `Tr(G·E)` and the central difference of the
/// polynomial along `E`, over `directions` random Hermitian `E` per symbol.
pub fn gradient_mismatch(text: &str, dofs: usize, n: usize, directions: usize, seed: u64) -> Result<f64, RunError> {
    let table = Arc::new(SymbolTable::bosonic(dofs));
    let poly = parse(text, table.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats: Vec<ComplexMatrix> = (0..table.len()).map(|_| random_hermitian_with(&mut rng, n)).collect();
    let mut b = Binding::new(&table);
    for (id, m) in mats.iter().enumerate() {
        b.bind(id, m)?;
    }
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for slot in 0..table.len() {
        let grad = cyclic_derivative(&poly, slot).evaluate(&b)?;
        for _ in 0..directions {
            let e = random_hermitian_with(&mut rng, n);
            let analytic = grad.trace_of_product(&e);
            let shifted = |s: f64| {
                let mut m = mats.clone();
                m[slot] = m[slot].add_scaled(&e, s);
                evaluate_at(&poly, &m)
            };
            let numeric = (shifted(h)? - shifted(-h)?) / (2.0 * h);
            worst = worst.max((analytic - numeric).norm() / analytic.norm().max(1.0));
        }
    }
    Ok(worst)
}

pub fn derivative_items(seed: u64) -> Vec<CheckItem> {
    DERIVATIVE_FIXTURES
        .iter()
        .enumerate()
        .map(|(k, (name, text, dofs))| {
            let label = format!("cyclic derivative vs finite differences: {name}");
            match gradient_mismatch(text, *dofs, 3, 50, seed.wrapping_add(k as u64)) {
                Ok(v) => CheckItem::at_most(label, v, 1e-6).with_detail("N=3, 50 directions"),
                Err(e) => CheckItem::failed(label, Relation::AtMost, 1e-6, e),
            }
        })
        .collect()
}

// ---------------------------------------------------------------- conservation

pub const HARMONIC: &str = "0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)";
/// Coupled quartic with a confining `Tr(q1²q2²)` term.
pub const COUPLED_QUARTIC: &str =
    "0.5*Tr(p1*p1) + 0.5*Tr(p2*p2) + 0.1*Tr(q1*q2*q1*q2) + 0.1*Tr(q1*q1*q2*q2)";
/// The bare `Tr(q1q2q1q2)` coupling; its potential is unbounded below.
pub const COUPLED_QUARTIC_BARE: &str = "0.5*Tr(p1*p1) + 0.5*Tr(p2*p2) + 0.1*Tr(q1*q2*q1*q2)";

pub struct ConservationRun {
    pub relative_energy_drift: f64,
    pub tilde_c_drift: f64,
    pub max_pair_drift: f64,
}

pub fn conservation_run(model: &ModelSpec, seed: u64, t_end: f64, dt: f64) -> Result<ConservationRun, RunError> {
    let s = random_state(seed, model.dofs(), model.dim(), 1.0);
    let opts = EvolveOptions::new(t_end, dt, Integrator::Rk4).with_stride(100);
    let tr = evolve(&s, model, &opts)?;
    Ok(ConservationRun {
        relative_energy_drift: tr.report.max_relative_energy_drift,
        tilde_c_drift: tr.report.max_tilde_c_drift,
        max_pair_drift: max_of(tr.report.max_dof_drift.iter().copied()),
    })
}

/// `𝐇` coupling `q1` and `p1` through a fixed diagonal matrix, which breaks
/// global unitary invariance.
pub fn non_invariant_model(n: usize) -> Result<ModelSpec, RunError> {
    let mut t = SymbolTable::bosonic(1);
    let k = t.declare_constant("K")?;
    let h = parse(
        "0.5*Tr(p1*p1) + 0.5*Tr(q1*q1) + Tr(q1*K*p1) + Tr(p1*K*q1)",
        Arc::new(t),
    )?;
    let diag: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(0.3 - 0.4 * i as f64 / (n.max(2) - 1) as f64, 0.0))
        .collect();
    Ok(ModelSpec::new(h, n, vec![(k, ComplexMatrix::from_diagonal(&diag))])?)
}

pub fn conservation_items(seed: u64) -> Vec<CheckItem> {
    let mut items = Vec::new();
    for (name, text, dofs) in [("harmonic", HARMONIC, 1), ("coupled quartic", COUPLED_QUARTIC, 2)] {
        let run = bosonic_model(text, dofs, 4).and_then(|m| conservation_run(&m, seed, 10.0, 1e-3));
        let drift = format!("{name}: relative TrH drift");
        let charge = format!("{name}: |C̃(t) - C̃(0)|_F");
        match run {
            Ok(r) => {
                items.push(CheckItem::at_most(drift, r.relative_energy_drift, 1e-8));
                items.push(CheckItem::at_most(charge, r.tilde_c_drift, 1e-6));
                if dofs > 1 {
                    items.push(CheckItem::at_least(
                        format!("{name}: largest single [q_r,p_r] drift"),
                        r.max_pair_drift,
                        1e-2,
                    ));
                }
            }
            Err(e) => {
                items.push(CheckItem::failed(drift, Relation::AtMost, 1e-8, &e));
                items.push(CheckItem::failed(charge, Relation::AtMost, 1e-6, &e));
            }
        }
    }
    let label = "non-invariant counterexample: |C̃(t) - C̃(0)|_F";
    match non_invariant_model(4).and_then(|m| conservation_run(&m, seed, 10.0, 1e-3)) {
        Ok(r) => items.push(CheckItem::above(label, r.tilde_c_drift, 1e-3)),
        Err(e) => items.push(CheckItem::failed(label, Relation::Above, 1e-3, e)),
    }
    items
}

// ---------------------------------------------------------------- equivalence

pub const LAGRANGIAN_FIXTURES: [(&str, usize); 4] = [
    ("0.5*Tr(v1*v1) - 0.5*Tr(q1*q1)", 1),
    ("0.5*Tr(v1*v1) - 0.1*Tr(q1^4) - 0.5*Tr(q1^2)", 1),
    ("0.5*Tr(v1*v1) + 0.5*Tr(v2*v2) - 0.1*Tr(q1*q2*q1*q2) - 0.1*Tr(q1*q1*q2*q2)", 2),
    (
        "Tr(v1*v1) + Tr(v1*v2) + 0.5*Tr(v2*v2) + 0.3*Tr(q2*v1) - 0.5*Tr(q1^2) - 0.5*Tr(q2^2)",
        2,
    ),
];

/// Largest coordinate and momentum mismatch after `steps` RK4 steps on the
/// Euler-Lagrange and the Legendre-transformed Hamilton paths.
pub fn path_mismatch(text: &str, dofs: usize, n: usize, steps: usize, dt: f64, seed: u64) -> Result<f64, RunError> {
    let l = parse(text, Arc::new(SymbolTable::lagrangian(dofs)))?;
    let flow = LagrangianFlow::new(l.clone(), vec![])?;
    let model = ModelSpec::from_lagrangian(&l, n, vec![])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q0: Vec<ComplexMatrix> = (0..dofs).map(|_| unit_hermitian(&mut rng, n)).collect();
    let v0: Vec<ComplexMatrix> = (0..dofs).map(|_| unit_hermitian(&mut rng, n)).collect();
    let p0 = flow.momenta(&q0, &v0)?;
    let mut hs = PhaseSpaceState::new(q0.clone(), p0, 0.0)?;
    let (mut q, mut v) = (q0, v0);
    for _ in 0..steps {
        hs = step_rk4(&hs, &model, dt)?;
        (q, v) = flow.step_rk4(&q, &v, dt)?;
    }
    let pv = flow.momenta(&q, &v)?;
    let diff = |a: &[ComplexMatrix], b: &[ComplexMatrix]| {
        max_of(a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)))
    };
    Ok(diff(&hs.q, &q).max(diff(&hs.p, &pv)))
}

pub fn equivalence_items(seed: u64) -> Vec<CheckItem> {
    LAGRANGIAN_FIXTURES
        .iter()
        .enumerate()
        .map(|(k, (text, dofs))| {
            let label = format!("Lagrangian vs Hamiltonian path: {text}");
            match path_mismatch(text, *dofs, 3, 1000, 1e-3, seed.wrapping_add(100 + k as u64)) {
                Ok(d) => CheckItem::at_most(label, d, 1e-8).with_detail("N=3, T=1, dt=1e-3"),
                Err(e) => CheckItem::failed(label, Relation::AtMost, 1e-8, e),
            }
        })
        .collect()
}

// ---------------------------------------------------------------- liouville

pub const LIOUVILLE_MODEL: &str = "0.5*Tr(p1*p1) + 0.5*Tr(q1*q1) + 0.1*Tr(q1^4)";

pub struct LiouvilleRun {
    pub real_dim: usize,
    pub leapfrog_deviation: f64,
    pub rk4_coarse: f64,
    pub rk4_fine: f64,
}

pub fn liouville_run(seed: u64) -> Result<LiouvilleRun, RunError> {
    let m = bosonic_model(LIOUVILLE_MODEL, 1, 2)?;
    let lf = volume_preservation_check(&m, &StepKind::Leapfrog, 0.1, seed)?;
    let coarse = volume_preservation_check(&m, &StepKind::Rk4, 0.2, seed)?;
    let fine = volume_preservation_check(&m, &StepKind::Rk4, 0.1, seed)?;
    Ok(LiouvilleRun {
        real_dim: lf.real_dim,
        leapfrog_deviation: lf.deviation,
        rk4_coarse: coarse.deviation,
        rk4_fine: fine.deviation,
    })
}

pub fn liouville_items(seed: u64) -> Vec<CheckItem> {
    let lf = "leapfrog |det J - 1|";
    let ratio = "RK4 |det J - 1| ratio for dt 0.2 -> 0.1";
    match liouville_run(seed) {
        Ok(r) => vec![
            CheckItem::at_most(lf, r.leapfrog_deviation, 1e-10)
                .with_detail(format!("N=2, {} real dimensions, dt=0.1", r.real_dim)),
            CheckItem::at_least(ratio, r.rk4_coarse / r.rk4_fine, 16.0)
                .with_detail(format!("{:.3e} -> {:.3e}", r.rk4_coarse, r.rk4_fine)),
        ],
        Err(e) => vec![
            CheckItem::failed(lf, Relation::AtMost, 1e-10, &e),
            CheckItem::failed(ratio, Relation::AtLeast, 16.0, &e),
        ],
    }
}

// ---------------------------------------------------------------- ensemble

/// Exact `⟨C̃⟩` and `⟨Tr𝐇⟩` for `𝐇 = ½a Tr p² + ½b Tr q²` under
/// `exp(−τ𝐇 − Re Tr λ̃C̃)`, from the Gaussian covariance on a Hermitian basis.
pub struct GaussianOracle {
    pub avg_c: ComplexMatrix,
    pub trace_h: f64,
}

fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let unit = |i: usize, j: usize, z: Complex64| {
        let mut m = ComplexMatrix::zeros(n, 0, Grading::Even);
        m.set(i, j, z);
        m.set(j, i, z.conj());
        m
    };
    let mut basis: Vec<ComplexMatrix> = (0..n).map(|i| unit(i, i, Complex64::new(1.0, 0.0))).collect();
    for i in 0..n {
        for j in i + 1..n {
            basis.push(unit(i, j, Complex64::new(1.0, 0.0)));
            basis.push(unit(i, j, Complex64::new(0.0, 1.0)));
        }
    }
    basis
}

pub fn gaussian_oracle(n: usize, tau: f64, a: f64, b: f64, lambda: &ComplexMatrix) -> Option<GaussianOracle> {
    let e = hermitian_basis(n);
    let m = e.len();
    let dim = 2 * m;
    // exponent ½ zᵀ A z with q = Σ x_k E_k, p = Σ y_k E_k, z = (x, y)
    let mut form = vec![0.0; dim * dim];
    for k in 0..m {
        for l in 0..m {
            let g = e[k].trace_of_product(&e[l]).re;
            form[k * dim + l] = tau * b * g;
            form[(m + k) * dim + (m + l)] = tau * a * g;
            let comm = &(&e[k] * &e[l]) - &(&e[l] * &e[k]);
            let cross = lambda.trace_of_product(&comm).re;
            form[k * dim + (m + l)] = cross;
            form[(m + l) * dim + k] = cross;
        }
    }
    let cov = invert(&form, dim, 1e-12)?;
    let mut avg_c = ComplexMatrix::zeros(n, 0, Grading::Even);
    let mut trace_h = 0.0;
    for k in 0..m {
        for l in 0..m {
            let comm = &(&e[k] * &e[l]) - &(&e[l] * &e[k]);
            avg_c = avg_c.add_scaled(&comm, cov[k * dim + (m + l)]);
            let g = e[k].trace_of_product(&e[l]).re;
            trace_h += 0.5 * b * g * cov[k * dim + l] + 0.5 * a * g * cov[(m + k) * dim + (m + l)];
        }
    }
    Some(GaussianOracle { avg_c, trace_h })
}

/// Largest `|MC − exact|/σ` over the real and imaginary parts of every `⟨C̃⟩`
/// entry, and the same for `⟨Tr𝐇⟩`.
pub fn oracle_sigmas(res: &EnsembleResult, oracle: &GaussianOracle) -> (f64, f64) {
    let n = res.dim;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (got, want, err) = (res.avg_c.get(i, j), oracle.avg_c.get(i, j), res.avg_c_stderr.get(i, j));
            for (g, w, s) in [(got.re, want.re, err.re), (got.im, want.im, err.im)] {
                let d = (g - w).abs();
                // entries fixed by symmetry come out exactly, with zero spread
                let sig = if d == 0.0 { 0.0 } else { d / s };
                worst = worst.max(sig);
            }
        }
    }
    let th = (res.mean_trace_h - oracle.trace_h).abs() / res.stderr_trace_h;
    (worst, th)
}

pub struct OracleCase {
    pub n: usize,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub sweeps: usize,
}

pub const ORACLE_CASES: [OracleCase; 3] = [
    OracleCase { n: 2, tau: 1.0, a: 1.0, b: 1.0, lambda: 0.2, sweeps: 20_000 },
    OracleCase { n: 3, tau: 1.0, a: 1.5, b: 0.8, lambda: 0.2, sweeps: 20_000 },
    OracleCase { n: 2, tau: 1.0, a: 1.0, b: 1.0, lambda: 0.0, sweeps: 20_000 },
];

pub fn oracle_case_run(case: &OracleCase, seed: u64) -> Result<(EnsembleResult, GaussianOracle), RunError> {
    let text = format!("{}*Tr(p1*p1) + {}*Tr(q1*q1)", 0.5 * case.a, 0.5 * case.b);
    let model = bosonic_model(&text, 1, case.n)?;
    let mut params = EnsembleParams::new(case.n, case.tau, case.lambda, seed);
    params.sweeps = case.sweeps;
    let res = run_ensemble_parallel(&model, &params)?;
    let oracle = gaussian_oracle(case.n, case.tau, case.a, case.b, &params.lambda_tilde)
        .ok_or_else(|| RunError::Numerical("oracle quadratic form is singular".into()))?;
    Ok((res, oracle))
}

pub fn ensemble_items(seed: u64) -> Vec<CheckItem> {
    let mut items = Vec::new();
    for (k, case) in ORACLE_CASES.iter().enumerate() {
        let tag = format!("N={} a={} b={} lambda={}", case.n, case.a, case.b, case.lambda);
        let c_label = format!("{tag}: max |<C̃> - exact| / sigma");
        let h_label = format!("{tag}: |<TrH> - exact| / sigma");
        match oracle_case_run(case, seed.wrapping_add(k as u64)) {
            Ok((res, oracle)) => {
                let (cs, hs) = oracle_sigmas(&res, &oracle);
                items.push(CheckItem::at_most(c_label, cs, 3.0));
                items.push(CheckItem::at_most(h_label, hs, 3.0).with_detail(format!(
                    "MC {:.4} ± {:.4}, exact {:.4}",
                    res.mean_trace_h, res.stderr_trace_h, oracle.trace_h
                )));
                if case.lambda != 0.0 {
                    items.extend(ieff_items(&tag, &res));
                }
            }
            Err(e) => {
                items.push(CheckItem::failed(c_label, Relation::AtMost, 3.0, &e));
                items.push(CheckItem::failed(h_label, Relation::AtMost, 3.0, &e));
            }
        }
    }
    items
}

/// Eigenvalues of `i_eff` as imaginary parts (`i_eff` is anti-Hermitian).
pub fn ieff_eigenvalues(i_eff: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigenvalues(&i_eff.scale(Complex64::new(0.0, -1.0)))
}

pub fn ieff_items(tag: &str, res: &EnsembleResult) -> Vec<CheckItem> {
    let label = |s: &str| format!("{tag}: i_eff {s}");
    let dec = match extract_ieff(&res.avg_c, Some(&res.avg_c_stderr)) {
        Ok(d) => d,
        Err(e) => return vec![CheckItem::failed(label("extraction"), Relation::AtMost, 0.0, e)],
    };
    let c = dec.checks();
    let n = res.dim;
    let (plus, minus) = dec.multiplicity;
    let eig_err = max_of(ieff_eigenvalues(&dec.i_eff).iter().map(|x| (x.abs() - 1.0).abs()));
    let mut items = vec![
        CheckItem::at_most(label("|i_eff² + 1|"), c.square, 1e-6),
        CheckItem::at_most(label("|i_eff† + i_eff|"), c.antihermitian, 1e-8),
        CheckItem::at_most(label("|[i_eff, D]|"), c.commutator, 1e-8),
        CheckItem::at_most(label("eigenvalue distance from ±i"), eig_err, 1e-8),
        CheckItem::at_most(label("singular directions"), dec.defect as f64, 0.0),
    ];
    // a full-rank square root of −1 is traceless only in even dimension
    if n % 2 == 0 {
        items.push(CheckItem::at_most(label("|Tr i_eff|"), c.trace, 1e-6));
        items.push(
            CheckItem::at_most(label("multiplicity imbalance |n₊ - n₋|"), plus.abs_diff(minus) as f64, 0.0)
                .with_detail(format!("+i x{plus}, -i x{minus}")),
        );
    }
    items
}

// ---------------------------------------------------------------- gravastar

/// Reference equation of state in units of `p_jump`.
pub fn reference_eos() -> EosSpec {
    EosSpec::new(1.0, 1e-2, 1e-6)
}

pub const REFERENCE_P_CENTER: f64 = 1e3;
/// Central pressure of the run used when the reference run has no surface.
pub const REACHABLE_P_CENTER: f64 = 1.05;

pub fn star_items(tag: &str, p_center: f64, eos: &EosSpec) -> Vec<CheckItem> {
    let label = |s: &str| format!("{tag}: {s}");
    let opts = TovOptions::default();
    let s = match integrate_star(p_center, eos, &opts) {
        Ok(s) => s,
        Err(e) => {
            return vec![
                CheckItem::failed(label("min(1 - 2m/r)"), Relation::Above, 0.0, &e),
                CheckItem::failed(label("exterior Schwarzschild deviation"), Relation::AtMost, 1e-6, &e),
                CheckItem::failed(label("M_total change under rtol/2"), Relation::AtMost, 1e-8, &e),
            ]
        }
    };
    let g00_min = s
        .nu
        .iter()
        .chain(&s.exterior.nu)
        .map(|nu| (2.0 * nu).exp())
        .fold(f64::INFINITY, f64::min);
    let mut items = vec![
        CheckItem::above(label("min(1 - 2m/r)"), s.min_compactness, 0.0),
        CheckItem::above(label("min g00"), g00_min, 0.0),
        CheckItem::at_most(label("exterior Schwarzschild deviation to 10R"), s.exterior.max_relative_deviation, 1e-6),
        CheckItem::above(label("smallest pressure drop between grid points"), -s.max_pressure_increase(), 0.0),
    ];
    if let Some(j) = s.jump {
        items.push(CheckItem::at_most(label("|p - p_jump| at transition"), j.p_residual, 1e-12));
        items.push(CheckItem::at_most(
            label("| |Δρ| - (4p_jump - ε) |"),
            ((j.rho_outside - j.rho_inside).abs() - (4.0 * eos.p_jump - eos.epsilon)).abs(),
            1e-12 * eos.p_jump,
        ));
    }
    let halved = TovOptions {
        rtol: opts.rtol / 2.0,
        ..opts
    };
    match integrate_star(p_center, eos, &halved) {
        Ok(h) => items.push(CheckItem::at_most(
            label("M_total change under rtol/2"),
            (h.m_total - s.m_total).abs() / s.m_total.abs(),
            1e-8,
        )),
        Err(e) => items.push(CheckItem::failed(label("M_total change under rtol/2"), Relation::AtMost, 1e-8, e)),
    }
    items
}

pub fn gravastar_items() -> Vec<CheckItem> {
    let eos = reference_eos();
    let mut items = star_items("reference p_c=1e3 p_jump", REFERENCE_P_CENTER, &eos);
    items.extend(star_items("reachable p_c=1.05 p_jump", REACHABLE_P_CENTER, &eos));
    items
}

// ---------------------------------------------------------------- weyl

pub struct WeylRun {
    pub identity: f64,
    pub deviation: f64,
    pub control: f64,
    pub samples: usize,
}

pub fn weyl_run(solution: &TovSolution, samples: usize, lo: f64, hi: f64, seed: u64) -> Result<WeylRun, RunError> {
    let pts = metric_samples(solution, samples, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1e);
    let lambdas: Vec<f64> = (0..pts.len()).map(|_| rng.random_range(lo..=hi)).collect();
    Ok(WeylRun {
        identity: weyl_invariance_check(&pts, &vec![1.0; pts.len()])?,
        deviation: weyl_invariance_check(&pts, &lambdas)?,
        control: curvature_control_check(&pts, &lambdas)?,
        samples: pts.len(),
    })
}

pub fn weyl_items(seed: u64) -> Vec<CheckItem> {
    let run = integrate_star(REACHABLE_P_CENTER, &reference_eos(), &TovOptions::default())
        .map_err(RunError::from)
        .and_then(|s| weyl_run(&s, 10_000, 0.5, 2.0, seed));
    match run {
        Ok(w) => vec![
            CheckItem::at_most("identity scaling deviation", w.identity, 0.0),
            CheckItem::at_most("√g·g00⁻² deviation under random λ ∈ [0.5, 2]", w.deviation, 1e-12)
                .with_detail(format!("{} samples", w.samples)),
            CheckItem::above("control √g·R deviation", w.control, 1e-3),
        ],
        Err(e) => vec![CheckItem::failed("Weyl integrand", Relation::AtMost, 1e-12, e)],
    }
}
