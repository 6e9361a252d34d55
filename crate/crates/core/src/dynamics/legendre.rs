use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::invert;
use crate::matrix::{ComplexMatrix, Grading};
use crate::poly::{
    cyclic_derivative, Binding, OperatorPolynomial, SymbolId, SymbolKind,
    SymbolTable, TracePolynomial, TraceWord,
};

/// Result of the transform. Momentum `p_r` reuses the id of velocity `q̇_r`.
#[derive(Clone, Debug)]
pub struct LegendreTransform {
    pub hamiltonian: TracePolynomial,
    /// Kinetic form `M` with `δ𝐋/δq̇_r = Σ_s M_rs q̇_s + A_r(q)`, row-major over dofs.
    pub kinetic: Vec<f64>,
    /// `M⁻¹`.
    pub inverse_kinetic: Vec<f64>,
    /// `A_r(q)`, over the Lagrangian's table.
    pub linear: Vec<OperatorPolynomial>,
    pub dofs: Vec<usize>,
}

/// Supports Lagrangians built from three kinds of word: kinetic `Tr(q̇_r q̇_s)` with
/// real coefficients, words with a single velocity (`Tr(A_r(q) q̇_r)`), and
/// velocity-free potential words. Anything else is rejected.
pub fn legendre_transform(lagrangian: &TracePolynomial) -> Result<LegendreTransform> {
    let symbols = lagrangian.symbols();
    symbols.validate()?;
    if symbols.has_fermions() {
        return Err(Error::FermionicUnsupported("the Legendre transform".into()));
    }
    let dofs = symbols.dofs();
    let n = dofs.len();
    let mut velocities = Vec::with_capacity(n);
    for &r in &dofs {
        if symbols.momentum(r).is_some() {
            return Err(Error::Kinetic(format!(
                "degree of freedom {r} already has a momentum"
            )));
        }
        velocities.push(symbols.velocity(r).ok_or_else(|| {
            Error::Kinetic(format!("degree of freedom {r} has no velocity"))
        })?);
    }
    let slot = |id: SymbolId| velocities.iter().position(|&v| v == id);

    let mut k = vec![0.0; n * n];
    let mut linear_words = Vec::new();
    let mut potential_words = Vec::new();
    for w in lagrangian.words() {
        let vs: Vec<usize> = w.letters.iter().filter_map(|&l| slot(l)).collect();
        match vs.len() {
            0 => potential_words.push(w.clone()),
            1 => linear_words.push(w.clone()),
            2 if w.letters.len() == 2 => {
                if w.coefficient.im.abs() > 1e-14 * w.coefficient.norm() {
                    return Err(Error::Kinetic(format!(
                        "kinetic coefficient {} is not real",
                        w.coefficient
                    )));
                }
                k[vs[0] * n + vs[1]] += w.coefficient.re;
            }
            _ => {
                return Err(Error::Kinetic(format!(
                    "unsupported velocity dependence in a word of degree {}",
                    w.letters.len()
                )))
            }
        }
    }
    let mut m = vec![0.0; n * n];
    for r in 0..n {
        for s in 0..n {
            m[r * n + s] = k[r * n + s] + k[s * n + r];
        }
    }
    let w = invert(&m, n, 1e-12).ok_or_else(|| {
        Error::Kinetic("kinetic form is not invertible".into())
    })?;

    let linear_poly = TracePolynomial::from_words(symbols.clone(), linear_words);
    let linear: Vec<OperatorPolynomial> = velocities
        .iter()
        .map(|&v| cyclic_derivative(&linear_poly, v))
        .collect();

    let table = Arc::new(symbols.velocities_to_momenta()?);
    let rehome = |op: &OperatorPolynomial| {
        OperatorPolynomial::from_terms(table.clone(), op.grading(), op.terms().to_vec())
    };
    // π_r = p_r − A_r
    let pi: Vec<OperatorPolynomial> = (0..n)
        .map(|r| {
            OperatorPolynomial::letter(table.clone(), velocities[r])
                .add(&rehome(&linear[r]).scale(Complex64::new(-1.0, 0.0)))
        })
        .collect();
    let mut h_words: Vec<TraceWord> = Vec::new();
    for r in 0..n {
        for s in 0..n {
            let c = w[r * n + s];
            if c == 0.0 {
                continue;
            }
            let tr = pi[r].mul(&pi[s]).trace();
            h_words.extend(tr.words().iter().map(|t| TraceWord::new(t.coefficient * (0.5 * c), t.letters.clone())));
        }
    }
    h_words.extend(
        potential_words
            .into_iter()
            .map(|t| TraceWord::new(-t.coefficient, t.letters)),
    );
    Ok(LegendreTransform {
        hamiltonian: TracePolynomial::from_words(table, h_words),
        kinetic: m,
        inverse_kinetic: w,
        linear,
        dofs,
    })
}

/// Euler-Lagrange flow `d/dt(δ𝐋/δq̇_r) = δ𝐋/δq_r` written as a first-order system in
/// `(q, q̇)`.
#[derive(Clone, Debug)]
pub struct LagrangianFlow {
    lagrangian: TracePolynomial,
    transform: LegendreTransform,
    coordinates: Vec<SymbolId>,
    velocities: Vec<SymbolId>,
    grad_q: Vec<OperatorPolynomial>,
    grad_v: Vec<OperatorPolynomial>,
    /// `Σ_s ∂A_r/∂q_s[q̇_s]`, the total time derivative of `A_r` along the flow.
    linear_rate: Vec<OperatorPolynomial>,
    constants: Vec<(SymbolId, ComplexMatrix)>,
}

impl LagrangianFlow {
    pub fn new(
        lagrangian: TracePolynomial,
        constants: Vec<(SymbolId, ComplexMatrix)>,
    ) -> Result<Self> {
        let transform = legendre_transform(&lagrangian)?;
        let symbols = lagrangian.symbols().clone();
        let coordinates: Vec<SymbolId> = transform
            .dofs
            .iter()
            .map(|&r| symbols.coordinate(r).expect("validated"))
            .collect();
        let velocities: Vec<SymbolId> = transform
            .dofs
            .iter()
            .map(|&r| symbols.velocity(r).expect("validated"))
            .collect();
        let grad_q = coordinates
            .iter()
            .map(|&q| cyclic_derivative(&lagrangian, q))
            .collect();
        let grad_v = velocities
            .iter()
            .map(|&v| cyclic_derivative(&lagrangian, v))
            .collect();
        let linear_rate = transform
            .linear
            .iter()
            .map(|a| {
                coordinates.iter().zip(&velocities).fold(
                    OperatorPolynomial::zero(symbols.clone(), Grading::Even),
                    |acc, (&q, &v)| acc.add(&a.substitute_each(q, v)),
                )
            })
            .collect();
        for (id, _) in &constants {
            if symbols.get(*id).kind != SymbolKind::Constant {
                return Err(Error::Symbol(format!("symbol {id} is not a constant")));
            }
        }
        Ok(LagrangianFlow {
            lagrangian,
            transform,
            coordinates,
            velocities,
            grad_q,
            grad_v,
            linear_rate,
            constants,
        })
    }

    pub fn transform(&self) -> &LegendreTransform {
        &self.transform
    }

    pub fn lagrangian(&self) -> &TracePolynomial {
        &self.lagrangian
    }

    pub fn symbols(&self) -> &SymbolTable {
        self.lagrangian.symbols()
    }

    fn binding<'a>(
        &'a self,
        q: &'a [ComplexMatrix],
        v: &'a [ComplexMatrix],
    ) -> Result<Binding<'a, Complex64>> {
        let mut b = Binding::new(self.lagrangian.symbols());
        for (&id, m) in self.coordinates.iter().zip(q) {
            b.bind(id, m)?;
        }
        for (&id, m) in self.velocities.iter().zip(v) {
            b.bind(id, m)?;
        }
        for (id, m) in &self.constants {
            b.bind(*id, m)?;
        }
        Ok(b)
    }

    /// `δ𝐋/δq_r` at `(q, q̇)`.
    pub fn force(&self, q: &[ComplexMatrix], v: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
        let b = self.binding(q, v)?;
        self.grad_q.iter().map(|g| g.evaluate(&b)).collect()
    }

    /// `δ𝐋/δq̇_r` at `(q, q̇)`, i.e. the canonical momenta.
    pub fn momenta(&self, q: &[ComplexMatrix], v: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
        let b = self.binding(q, v)?;
        self.grad_v.iter().map(|g| g.evaluate(&b)).collect()
    }

    /// Inverse of [`momenta`](Self::momenta): `q̇ = M⁻¹(p − A(q))`.
    pub fn velocities_from_momenta(
        &self,
        q: &[ComplexMatrix],
        p: &[ComplexMatrix],
    ) -> Result<Vec<ComplexMatrix>> {
        let n = q.len();
        let dim = q.first().map_or(0, |m| m.dim());
        let zeros = vec![ComplexMatrix::zeros(dim, 0, Grading::Even); n];
        let b = self.binding(q, &zeros)?;
        let pi: Vec<ComplexMatrix> = self
            .transform
            .linear
            .iter()
            .zip(p)
            .map(|(a, p)| a.evaluate(&b).map(|a| p - &a))
            .collect::<Result<_>>()?;
        Ok(self.mix(&pi))
    }

    fn mix(&self, xs: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        let n = xs.len();
        let w = &self.transform.inverse_kinetic;
        (0..n)
            .map(|r| {
                let mut acc = xs[0].scale_real(w[r * n]);
                for s in 1..n {
                    acc = acc.add_scaled(&xs[s], w[r * n + s]);
                }
                acc
            })
            .collect()
    }

    /// `(q̇, q̈)` with `q̈ = M⁻¹(δ𝐋/δq − dA/dt)`.
    pub fn rhs(
        &self,
        q: &[ComplexMatrix],
        v: &[ComplexMatrix],
    ) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
        let b = self.binding(q, v)?;
        let mut drive = Vec::with_capacity(q.len());
        for (g, a) in self.grad_q.iter().zip(&self.linear_rate) {
            drive.push(&g.evaluate(&b)? - &a.evaluate(&b)?);
        }
        Ok((v.to_vec(), self.mix(&drive)))
    }

    /// One RK4 step of the first-order system in `(q, q̇)`.
    pub fn step_rk4(
        &self,
        q: &[ComplexMatrix],
        v: &[ComplexMatrix],
        dt: f64,
    ) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
        let ax = |x: &[ComplexMatrix], y: &[ComplexMatrix], a: f64| -> Vec<ComplexMatrix> {
            x.iter().zip(y).map(|(x, y)| x.add_scaled(y, a)).collect()
        };
        let (k1q, k1v) = self.rhs(q, v)?;
        let (k2q, k2v) = self.rhs(&ax(q, &k1q, dt / 2.0), &ax(v, &k1v, dt / 2.0))?;
        let (k3q, k3v) = self.rhs(&ax(q, &k2q, dt / 2.0), &ax(v, &k2v, dt / 2.0))?;
        let (k4q, k4v) = self.rhs(&ax(q, &k3q, dt), &ax(v, &k3v, dt))?;
        let fin = |x: &[ComplexMatrix], a: &[ComplexMatrix], b: &[ComplexMatrix], c: &[ComplexMatrix], d: &[ComplexMatrix]| {
            (0..x.len())
                .map(|r| {
                    x[r].add_scaled(&a[r], dt / 6.0)
                        .add_scaled(&b[r], dt / 3.0)
                        .add_scaled(&c[r], dt / 3.0)
                        .add_scaled(&d[r], dt / 6.0)
                })
                .collect::<Vec<_>>()
        };
        Ok((fin(q, &k1q, &k2q, &k3q, &k4q), fin(v, &k1v, &k2v, &k3v, &k4v)))
    }
}
