use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{step_leapfrog, step_rk4, ModelSpec, PhaseSpaceState};
use crate::error::{Error, Result};
use crate::linalg::determinant;
use crate::matrix::{ComplexMatrix, Grading};
use crate::poly::{cyclic_derivative, Binding, TracePolynomial};

/// Largest real phase-space dimension accepted by the dense Jacobian.
pub const MAX_JACOBIAN_DIM: usize = 144;

#[derive(Clone, Debug)]
pub enum StepKind {
    Leapfrog,
    Rk4,
    /// Explicit Euler step of the canonical transformation with generator `𝐆`:
    /// `δq_r = dt·δ𝐆/δp_r`, `δp_r = −dt·δ𝐆/δq_r`.
    Generator(TracePolynomial),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianReport {
    /// Real dimension of the map: `2·N²` per matrix.
    pub real_dim: usize,
    pub det: f64,
    /// `|det J − 1|`.
    pub deviation: f64,
    pub dt: f64,
}

/// Finite-difference Jacobian determinant of one step on the real coordinates of all
/// matrix elements (real and imaginary parts, no Hermiticity constraint), evaluated
/// at a seeded random point.
pub fn volume_preservation_check(
    model: &ModelSpec,
    kind: &StepKind,
    dt: f64,
    seed: u64,
) -> Result<JacobianReport> {
    let n = model.dim();
    let r = model.dofs();
    let real_dim = 4 * n * n * r;
    if n > 3 || real_dim > MAX_JACOBIAN_DIM {
        return Err(Error::DimensionOverflow {
            dim: real_dim,
            max: MAX_JACOBIAN_DIM,
        });
    }
    if !(dt.is_finite()) {
        return Err(Error::Config("dt must be finite".into()));
    }
    let generator = match kind {
        StepKind::Generator(g) => {
            if **g.symbols() != **model.symbols() {
                return Err(Error::Symbol(
                    "generator must use the model's symbol table".into(),
                ));
            }
            let q: Vec<_> = model
                .coordinate_ids()
                .iter()
                .map(|&id| cyclic_derivative(g, id))
                .collect();
            let p: Vec<_> = model
                .momentum_ids()
                .iter()
                .map(|&id| cyclic_derivative(g, id))
                .collect();
            Some((q, p))
        }
        _ => None,
    };
    let step = |x: &[f64]| -> Result<Vec<f64>> {
        let state = unflatten(x, n, r);
        let next = match kind {
            StepKind::Leapfrog => step_leapfrog(&state, model, dt)?,
            StepKind::Rk4 => step_rk4(&state, model, dt)?,
            StepKind::Generator(_) => {
                let (gq, gp) = generator.as_ref().expect("built above");
                let mut b = Binding::new(model.symbols());
                for (&id, m) in model.coordinate_ids().iter().zip(&state.q) {
                    b.bind(id, m)?;
                }
                for (&id, m) in model.momentum_ids().iter().zip(&state.p) {
                    b.bind(id, m)?;
                }
                for (id, m) in model.constants() {
                    b.bind(*id, m)?;
                }
                let mut q = Vec::with_capacity(r);
                let mut p = Vec::with_capacity(r);
                for k in 0..r {
                    q.push(state.q[k].add_scaled(&gp[k].evaluate(&b)?, dt));
                    p.push(state.p[k].add_scaled(&gq[k].evaluate(&b)?, -dt));
                }
                PhaseSpaceState { q, p, t: state.t + dt }
            }
        };
        Ok(flatten(&next))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = (0..real_dim)
        .map(|_| 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    // J = 1 + D(f − id), central differences with one Richardson refinement
    let h = 1.0 / 1024.0;
    let increment = |x: &[f64]| -> Result<Vec<f64>> {
        let fx = step(x)?;
        Ok(fx.iter().zip(x).map(|(f, x)| f - x).collect())
    };
    let mut jac = vec![0.0; real_dim * real_dim];
    for j in 0..real_dim {
        let col = |h: f64| -> Result<Vec<f64>> {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (increment(&xp)?, increment(&xm)?);
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let coarse = col(h)?;
        let fine = col(h / 2.0)?;
        for i in 0..real_dim {
            let d = (4.0 * fine[i] - coarse[i]) / 3.0;
            jac[i * real_dim + j] = d + if i == j { 1.0 } else { 0.0 };
        }
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            t: dt,
            what: format!("non-finite Jacobian entry for a step of size {dt}"),
        });
    }
    let det = determinant(&jac, real_dim);
    Ok(JacobianReport {
        real_dim,
        det,
        deviation: (det - 1.0).abs(),
        dt,
    })
}

fn flatten(s: &PhaseSpaceState) -> Vec<f64> {
    let mut out = Vec::new();
    for m in s.q.iter().chain(&s.p) {
        for z in m.entries() {
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

fn unflatten(x: &[f64], n: usize, r: usize) -> PhaseSpaceState {
    let per = 2 * n * n;
    let mats: Vec<ComplexMatrix> = (0..2 * r)
        .map(|k| {
            let entries = (0..n * n)
                .map(|e| Complex64::new(x[k * per + 2 * e], x[k * per + 2 * e + 1]))
                .collect();
            ComplexMatrix::new(n, entries, Grading::Even).expect("finite entries")
        })
        .collect();
    PhaseSpaceState {
        q: mats[..r].to_vec(),
        p: mats[r..].to_vec(),
        t: 0.0,
    }
}
