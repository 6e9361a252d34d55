use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::symbols::{SymbolId, SymbolKind};
use super::trace::{Binding, TracePolynomial};
use crate::error::{Error, Result};
use crate::matrix::{random_hermitian_with, random_unitary_with, ComplexMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    pub invariant: bool,
    /// Largest `|𝐏(UXU†) − 𝐏(X)| / max(1, |𝐏(X)|)` seen.
    pub max_deviation: f64,
    pub trials: usize,
}

const TOLERANCE: f64 = 1e-10;

/// Conjugates every non-constant bound matrix by the same random unitary and
/// compares values. Constants stay fixed, so a polynomial that couples the dynamical
/// variables to an external matrix generally fails.
pub fn check_unitary_invariance(
    poly: &TracePolynomial,
    dim: usize,
    constants: &[(SymbolId, ComplexMatrix)],
    trials: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let symbols = poly.symbols();
    if symbols.has_fermions() {
        return Err(Error::FermionicUnsupported("the unitary invariance check".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        let u = random_unitary_with(&mut rng, dim);
        let u_dag = u.adjoint();
        let mut plain: Vec<(SymbolId, ComplexMatrix)> = Vec::new();
        let mut rotated: Vec<(SymbolId, ComplexMatrix)> = Vec::new();
        for (id, s) in symbols.iter() {
            if s.kind == SymbolKind::Constant {
                continue;
            }
            let m = random_hermitian_with(&mut rng, dim);
            let r = &(&u * &m) * &u_dag;
            plain.push((id, m));
            rotated.push((id, r));
        }
        let value_plain = evaluate_with(poly, &plain, constants)?;
        let value_rotated = evaluate_with(poly, &rotated, constants)?;
        let dev = (value_rotated - value_plain).norm() / value_plain.norm().max(1.0);
        max_deviation = max_deviation.max(dev);
    }
    Ok(InvarianceReport {
        invariant: max_deviation <= TOLERANCE,
        max_deviation,
        trials,
    })
}

fn evaluate_with(
    poly: &TracePolynomial,
    vars: &[(SymbolId, ComplexMatrix)],
    constants: &[(SymbolId, ComplexMatrix)],
) -> Result<Complex64> {
    let mut binding = Binding::new(poly.symbols());
    for (id, m) in vars.iter().chain(constants) {
        binding.bind(*id, m)?;
    }
    poly.evaluate(&binding)
}
