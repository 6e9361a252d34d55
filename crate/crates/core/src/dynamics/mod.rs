//! Operator Hamilton flow for trace Hamiltonians, the Legendre transform from trace
//! Lagrangians, and monitoring of the conserved trace energy and the `C̃` charge.

mod integrate;
mod legendre;


use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Grading, OperatorMatrix};
use crate::poly::{
    check_unitary_invariance, cyclic_derivative, is_separable, Binding, OperatorPolynomial,
    SymbolId, SymbolKind, SymbolTable, TracePolynomial,
};
use crate::scalar::Scalar;

pub use integrate::{
    evolve, step_leapfrog, step_rk4, ConservationReport, EvolveOptions, Integrator, Sample,
    Trajectory,
};
pub use legendre::{legendre_transform, LagrangianFlow, LegendreTransform};

/// Positions and momenta, one matrix per degree of freedom in the order of
/// [`SymbolTable::dofs`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceState<S: Scalar = num_complex::Complex64> {
    pub q: Vec<OperatorMatrix<S>>,
    pub p: Vec<OperatorMatrix<S>>,
    pub t: f64,
}

impl<S: Scalar> PhaseSpaceState<S> {
    pub fn new(q: Vec<OperatorMatrix<S>>, p: Vec<OperatorMatrix<S>>, t: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Config(format!(
                "{} coordinates but {} momenta",
                q.len(),
                p.len()
            )));
        }
        if let Some(first) = q.first() {
            for m in q.iter().chain(&p) {
                if m.dim() != first.dim() {
                    return Err(Error::Shape {
                        left: first.dim(),
                        right: m.dim(),
                    });
                }
                if m.generators() != first.generators() {
                    return Err(Error::GeneratorMismatch {
                        left: first.generators(),
                        right: m.generators(),
                    });
                }
            }
        }
        Ok(PhaseSpaceState { q, p, t })
    }

    pub fn dofs(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        self.q.first().map_or(0, |m| m.dim())
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|m| m.is_finite())
    }

    /// Checks the state against a table: one pair per dof with the declared gradings.
    pub fn check_against(&self, symbols: &SymbolTable) -> Result<()> {
        let dofs = symbols.dofs();
        if dofs.len() != self.q.len() {
            return Err(Error::Config(format!(
                "state has {} degrees of freedom, symbol table has {}",
                self.q.len(),
                dofs.len()
            )));
        }
        for (k, &r) in dofs.iter().enumerate() {
            let g = symbols.grading(symbols.coordinate(r).ok_or_else(|| {
                Error::Symbol(format!("degree of freedom {r} has no coordinate"))
            })?);
            if self.q[k].grading() != g || self.p[k].grading() != g {
                return Err(Error::Grading(format!(
                    "degree of freedom {r} is declared {g:?}"
                )));
            }
        }
        Ok(())
    }
}

/// `C̃ = Σ_bos [q_r, p_r] − Σ_ferm {q_r, p_r}`, with the statistics of each pair read
/// off the matrix grading.
pub fn compute_tilde_c<S: Scalar>(state: &PhaseSpaceState<S>) -> Result<OperatorMatrix<S>> {
    let dim = state.dim();
    let g = state.q.first().map_or(0, |m| m.generators());
    let mut acc = OperatorMatrix::zeros(dim, g, Grading::Even);
    for (q, p) in state.q.iter().zip(&state.p) {
        let part = pair_charge(q, p)?;
        acc = acc.checked_add(&part)?;
    }
    Ok(acc)
}

/// `[q, p]` for a bosonic pair, `−{q, p}` for a fermionic one.
pub fn pair_charge<S: Scalar>(
    q: &OperatorMatrix<S>,
    p: &OperatorMatrix<S>,
) -> Result<OperatorMatrix<S>> {
    if q.grading() != p.grading() {
        return Err(Error::Grading("coordinate and momentum gradings differ".into()));
    }
    if q.grading().is_odd() {
        Ok(-&q.anticommutator(p)?)
    } else {
        q.commutator(p)
    }
}

/// A bosonic trace Hamiltonian at fixed matrix size, with its cyclic gradients.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    symbols: Arc<SymbolTable>,
    hamiltonian: TracePolynomial,
    dim: usize,
    coordinates: Vec<SymbolId>,
    momenta: Vec<SymbolId>,
    grad_q: Vec<OperatorPolynomial>,
    grad_p: Vec<OperatorPolynomial>,
    constants: Vec<(SymbolId, ComplexMatrix)>,
    separable: bool,
    unitary_invariant: bool,
}

impl ModelSpec {
    pub fn new(
        hamiltonian: TracePolynomial,
        dim: usize,
        constants: Vec<(SymbolId, ComplexMatrix)>,
    ) -> Result<Self> {
        let symbols = hamiltonian.symbols().clone();
        symbols.validate()?;
        if dim == 0 {
            return Err(Error::Config("matrix dimension must be positive".into()));
        }
        if symbols.has_fermions() {
            return Err(Error::FermionicUnsupported(
                "operator Hamilton flow".into(),
            ));
        }
        let mut coordinates = Vec::new();
        let mut momenta = Vec::new();
        for r in symbols.dofs() {
            let q = symbols.coordinate(r).ok_or_else(|| {
                Error::Symbol(format!("degree of freedom {r} has no coordinate"))
            })?;
            let p = symbols.momentum(r).ok_or_else(|| {
                Error::Symbol(format!(
                    "degree of freedom {r} has no momentum; Lagrangians go through legendre_transform"
                ))
            })?;
            coordinates.push(q);
            momenta.push(p);
        }
        for id in symbols.constants() {
            match constants.iter().find(|(c, _)| *c == id) {
                None => return Err(Error::UnboundSymbol(symbols.name(id).into())),
                Some((_, m)) if m.dim() != dim => {
                    return Err(Error::Shape {
                        left: dim,
                        right: m.dim(),
                    })
                }
                Some(_) => {}
            }
        }
        for (id, m) in &constants {
            if *id >= symbols.len() || symbols.get(*id).kind != SymbolKind::Constant {
                return Err(Error::Symbol(format!("symbol {id} is not a constant")));
            }
            if !m.is_finite() {
                return Err(Error::NonFinite(format!("constant `{}`", symbols.name(*id))));
            }
        }
        let grad_q = coordinates
            .iter()
            .map(|&q| cyclic_derivative(&hamiltonian, q))
            .collect();
        let grad_p = momenta
            .iter()
            .map(|&p| cyclic_derivative(&hamiltonian, p))
            .collect();
        let separable = is_separable(&hamiltonian);
        let unitary_invariant =
            check_unitary_invariance(&hamiltonian, dim, &constants, 3, 0x5eed)?.invariant;
        Ok(ModelSpec {
            symbols,
            hamiltonian,
            dim,
            coordinates,
            momenta,
            grad_q,
            grad_p,
            constants,
            separable,
            unitary_invariant,
        })
    }

    /// Legendre-transforms a Lagrangian in coordinates and velocities, then builds the
    /// Hamiltonian model over the same symbol ids.
    pub fn from_lagrangian(
        lagrangian: &TracePolynomial,
        dim: usize,
        constants: Vec<(SymbolId, ComplexMatrix)>,
    ) -> Result<Self> {
        let lt = legendre_transform(lagrangian)?;
        ModelSpec::new(lt.hamiltonian, dim, constants)
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn hamiltonian(&self) -> &TracePolynomial {
        &self.hamiltonian
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dofs(&self) -> usize {
        self.coordinates.len()
    }

    pub fn grad_q(&self) -> &[OperatorPolynomial] {
        &self.grad_q
    }

    pub fn grad_p(&self) -> &[OperatorPolynomial] {
        &self.grad_p
    }

    pub fn constants(&self) -> &[(SymbolId, ComplexMatrix)] {
        &self.constants
    }

    pub fn is_separable(&self) -> bool {
        self.separable
    }

    pub fn is_unitary_invariant(&self) -> bool {
        self.unitary_invariant
    }

    pub fn coordinate_ids(&self) -> &[SymbolId] {
        &self.coordinates
    }

    pub fn momentum_ids(&self) -> &[SymbolId] {
        &self.momenta
    }

    pub(crate) fn binding<'a>(
        &'a self,
        q: &'a [ComplexMatrix],
        p: &'a [ComplexMatrix],
    ) -> Result<Binding<'a, num_complex::Complex64>> {
        let mut b = Binding::new(&self.symbols);
        for (&id, m) in self.coordinates.iter().zip(q) {
            b.bind(id, m)?;
        }
        for (&id, m) in self.momenta.iter().zip(p) {
            b.bind(id, m)?;
        }
        for (id, m) in &self.constants {
            b.bind(*id, m)?;
        }
        Ok(b)
    }

    /// Checks that a state fits this model.
    pub fn check_state(&self, state: &PhaseSpaceState) -> Result<()> {
        state.check_against(&self.symbols)?;
        if state.dim() != self.dim {
            return Err(Error::Shape {
                left: self.dim,
                right: state.dim(),
            });
        }
        Ok(())
    }

    /// `Tr𝐇` at the given state.
    pub fn energy(&self, state: &PhaseSpaceState) -> Result<num_complex::Complex64> {
        let b = self.binding(&state.q, &state.p)?;
        self.hamiltonian.evaluate(&b)
    }

    /// `δ𝐇/δq_r` for every dof (the negated force).
    pub(crate) fn eval_grad_q(
        &self,
        q: &[ComplexMatrix],
        p: &[ComplexMatrix],
    ) -> Result<Vec<ComplexMatrix>> {
        let b = self.binding(q, p)?;
        self.grad_q.iter().map(|g| g.evaluate(&b)).collect()
    }

    /// `δ𝐇/δp_r` for every dof (the velocity).
    pub(crate) fn eval_grad_p(
        &self,
        q: &[ComplexMatrix],
        p: &[ComplexMatrix],
    ) -> Result<Vec<ComplexMatrix>> {
        let b = self.binding(q, p)?;
        self.grad_p.iter().map(|g| g.evaluate(&b)).collect()
    }
}

/// Right-hand side of the operator Hamilton equations:
/// `q̇_r = δ𝐇/δp_r`, `ṗ_r = −δ𝐇/δq_r`.
pub fn hamilton_rhs(
    state: &PhaseSpaceState,
    model: &ModelSpec,
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    model.check_state(state)?;
    let b = model.binding(&state.q, &state.p)?;
    let qdot = model
        .grad_p
        .iter()
        .map(|g| g.evaluate(&b))
        .collect::<Result<Vec<_>>>()?;
    let pdot = model
        .grad_q
        .iter()
        .map(|g| g.evaluate(&b).map(|m| -&m))
        .collect::<Result<Vec<_>>>()?;
    Ok((qdot, pdot))
}
