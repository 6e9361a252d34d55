use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::antihermitian_sigma;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_function};
use crate::matrix::ComplexMatrix;

/// Relative eigenvalue spread of `D` below which `D` is reported as `ħ·1`.
pub const SPREAD_TOLERANCE: f64 = 0.05;

/// `⟨C̃⟩ = i_eff·D` with `D = (−⟨C̃⟩²)^{1/2}` and `i_eff = ⟨C̃⟩·D⁻¹` on the
/// nonsingular subspace of `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct IeffDecomposition {
    pub i_eff: ComplexMatrix,
    pub d: ComplexMatrix,
    /// Ascending eigenvalues of `D`.
    pub d_eigenvalues: Vec<f64>,
    /// `‖⟨C̃⟩ − i_eff·D‖_F`, measured against the input before symmetrization.
    pub residual: f64,
    /// Number of eigen-directions of `D` below the cutoff; `i_eff` vanishes there.
    pub defect: usize,
    pub cutoff: f64,
    /// `(max − min)/mean` over the nonsingular eigenvalues of `D`.
    pub d_spread: f64,
    /// Mean eigenvalue of `D` when the spread is below [`SPREAD_TOLERANCE`].
    pub hbar: Option<f64>,
    /// Numbers of `+i` and `−i` eigenvalues of `i_eff`.
    pub multiplicity: (usize, usize),
}

/// Measured deviations from the defining relations of the decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IeffChecks {
    /// `‖i_eff² + P‖_max` with `P` the projector on the nonsingular subspace.
    pub square: f64,
    /// `‖i_eff† + i_eff‖_max`.
    pub antihermitian: f64,
    /// `‖[i_eff, D]‖_max`.
    pub commutator: f64,
    /// `|Tr i_eff|`.
    pub trace: f64,
}

impl IeffDecomposition {
    pub fn checks(&self) -> IeffChecks {
        let n = self.i_eff.dim();
        let zero = ComplexMatrix::zeros(n, 0, crate::matrix::Grading::Even);
        // −i_eff² is the projector onto the nonsingular subspace
        let sq = &self.i_eff * &self.i_eff;
        let projector = hermitian_function(&self.d, |x| if x > self.cutoff { 1.0 } else { 0.0 });
        IeffChecks {
            square: (&sq + &projector).max_abs_diff(&zero),
            antihermitian: (&self.i_eff + &self.i_eff.adjoint()).max_abs_diff(&zero),
            commutator: (&(&self.i_eff * &self.d) - &(&self.d * &self.i_eff)).max_abs_diff(&zero),
            trace: self.i_eff.trace().norm(),
        }
    }
}

/// Decomposes an ensemble average of `C̃`. With standard errors supplied, an
/// anti-Hermiticity violation beyond 5σ is an error; otherwise the input is
/// projected onto its anti-Hermitian part first.
pub fn extract_ieff(
    avg_c: &ComplexMatrix,
    stderr: Option<&ComplexMatrix>,
) -> Result<IeffDecomposition> {
    if !avg_c.is_finite() {
        return Err(Error::NonFinite("ensemble average".into()));
    }
    if let Some(err) = stderr {
        if err.dim() != avg_c.dim() {
            return Err(Error::Shape {
                left: avg_c.dim(),
                right: err.dim(),
            });
        }
        let sigma = antihermitian_sigma(avg_c, err);
        if sigma > 5.0 {
            return Err(Error::Asymmetric { max_sigma: sigma });
        }
    }
    let c = (avg_c - &avg_c.adjoint()).scale_real(0.5);
    // K = −iC is Hermitian; D = |K| and i_eff = i·sign(K)
    let k = c.scale(Complex64::new(0.0, -1.0));
    let eig = hermitian_eigenvalues(&k);
    let top = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cutoff = 1e-8 * top;
    let d = hermitian_function(&k, |x| x.abs());
    let sign = hermitian_function(&k, |x| {
        if x.abs() > cutoff && top > 0.0 {
            x.signum()
        } else {
            0.0
        }
    });
    let i_eff = sign.scale(Complex64::new(0.0, 1.0));
    let nonsingular: Vec<f64> = eig
        .iter()
        .filter(|x| x.abs() > cutoff && top > 0.0)
        .map(|x| x.abs())
        .collect();
    let defect = eig.len() - nonsingular.len();
    let plus = eig.iter().filter(|&&x| x > cutoff && top > 0.0).count();
    let minus = nonsingular.len() - plus;
    let (d_spread, hbar) = if nonsingular.is_empty() {
        (f64::INFINITY, None)
    } else {
        let mean = nonsingular.iter().sum::<f64>() / nonsingular.len() as f64;
        let max = nonsingular.iter().fold(f64::MIN, |a, &b| a.max(b));
        let min = nonsingular.iter().fold(f64::MAX, |a, &b| a.min(b));
        let spread = (max - min) / mean;
        (spread, (spread <= SPREAD_TOLERANCE && defect == 0).then_some(mean))
    };
    let mut d_eigenvalues: Vec<f64> = eig.iter().map(|x| x.abs()).collect();
    d_eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let residual = (avg_c - &(&i_eff * &d)).frobenius_norm();
    Ok(IeffDecomposition {
        i_eff,
        d,
        d_eigenvalues,
        residual,
        defect,
        cutoff,
        d_spread,
        hbar,
        multiplicity: (plus, minus),
    })
}
