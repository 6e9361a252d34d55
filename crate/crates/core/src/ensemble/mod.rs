//! Metropolis sampling of the canonical ensemble `ρ ∝ exp(−τ Tr𝐇 − Tr λ̃C̃)` over the
//! flat measure on Hermitian matrix elements, with pooled batch-means errors, the
//! `⟨C̃⟩ = i_eff·D` decomposition and a finite-difference phase-space volume check.

mod ieff;
mod liouville;

#[cfg(test)]
mod tests;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{compute_tilde_c, ModelSpec, PhaseSpaceState};
use crate::error::{Error, Result};
use crate::linalg::is_positive_definite;
use crate::matrix::{ComplexMatrix, Grading};

pub use ieff::{extract_ieff, IeffDecomposition, IeffChecks, SPREAD_TOLERANCE};
pub use liouville::{volume_preservation_check, JacobianReport, StepKind, MAX_JACOBIAN_DIM};

/// Number of batches each chain is cut into for the error estimate.
pub const BATCHES_PER_CHAIN: usize = 20;

/// `λ·i·diag(1,…,1,−1,…,−1)`; the middle entry is 0 when `N` is odd.
pub fn default_lambda_tilde(dim: usize, lambda: f64) -> ComplexMatrix {
    let half = dim / 2;
    let diag: Vec<Complex64> = (0..dim)
        .map(|k| {
            let s = if k < half {
                1.0
            } else if k >= dim - half {
                -1.0
            } else {
                0.0
            };
            Complex64::new(0.0, lambda * s)
        })
        .collect();
    ComplexMatrix::from_diagonal(&diag)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleParams {
    pub tau: f64,
    pub lambda_tilde: ComplexMatrix,
    pub chains: usize,
    /// Sweeps kept per chain after burn-in (before thinning).
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Standard deviation of the single-coordinate Gaussian proposal.
    pub proposal_scale: f64,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn new(dim: usize, tau: f64, lambda: f64, seed: u64) -> Self {
        EnsembleParams {
            tau,
            lambda_tilde: default_lambda_tilde(dim, lambda),
            chains: 4,
            sweeps: 20_000,
            burn_in: 1_000,
            thin: 1,
            proposal_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.lambda_tilde.dim() != model.dim() {
            return Err(Error::Shape {
                left: model.dim(),
                right: self.lambda_tilde.dim(),
            });
        }
        if !self.lambda_tilde.is_finite() {
            return Err(Error::NonFinite("lambda_tilde".into()));
        }
        let herm = (&self.lambda_tilde + &self.lambda_tilde.adjoint()).max_abs_diff(
            &ComplexMatrix::zeros(model.dim(), 0, Grading::Even),
        );
        if herm > 1e-12 {
            return Err(Error::Config(format!(
                "lambda_tilde must be anti-Hermitian (deviation {herm:e})"
            )));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.sweeps / self.thin < 2 * BATCHES_PER_CHAIN {
            return Err(Error::Config(format!(
                "need at least {} kept sweeps per chain for batch means",
                2 * BATCHES_PER_CHAIN
            )));
        }
        if !(self.proposal_scale > 0.0) || !self.proposal_scale.is_finite() {
            return Err(Error::Config("proposal_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Flat coordinates of a Hermitian phase-space point: per matrix, the `N` real
/// diagonal entries, then `Re` and `Im` of each entry above the diagonal.
#[derive(Clone, Debug)]
pub struct HermitianCoordinates {
    dim: usize,
    matrices: usize,
}

impl HermitianCoordinates {
    pub fn new(dim: usize, matrices: usize) -> Self {
        HermitianCoordinates { dim, matrices }
    }

    pub fn per_matrix(&self) -> usize {
        self.dim * self.dim
    }

    pub fn len(&self) -> usize {
        self.matrices * self.per_matrix()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes coordinate `k` with value `x` into the matrices (keeping them Hermitian).
    pub fn set(&self, mats: &mut [ComplexMatrix], k: usize, x: f64) {
        let n = self.dim;
        let m = k / self.per_matrix();
        let local = k % self.per_matrix();
        if local < n {
            mats[m].set(local, local, Complex64::new(x, 0.0));
            return;
        }
        let off = (local - n) / 2;
        let imag = (local - n) % 2 == 1;
        let (i, j) = upper_pair(n, off);
        let mut z = *mats[m].get(i, j);
        if imag {
            z.im = x;
        } else {
            z.re = x;
        }
        mats[m].set(i, j, z);
        mats[m].set(j, i, z.conj());
    }

    pub fn get(&self, mats: &[ComplexMatrix], k: usize) -> f64 {
        let n = self.dim;
        let m = k / self.per_matrix();
        let local = k % self.per_matrix();
        if local < n {
            return mats[m].get(local, local).re;
        }
        let off = (local - n) / 2;
        let (i, j) = upper_pair(n, off);
        let z = mats[m].get(i, j);
        if (local - n) % 2 == 1 {
            z.im
        } else {
            z.re
        }
    }

    pub fn to_matrices(&self, x: &[f64]) -> Vec<ComplexMatrix> {
        let mut mats = vec![ComplexMatrix::zeros(self.dim, 0, Grading::Even); self.matrices];
        for (k, &v) in x.iter().enumerate() {
            self.set(&mut mats, k, v);
        }
        mats
    }
}

/// `off`-th strictly upper entry in row-major order.
fn upper_pair(n: usize, mut off: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if off < row {
            return (i, i + 1 + off);
        }
        off -= row;
    }
    unreachable!("offset beyond the upper triangle")
}

/// Boltzmann exponent `τ Re Tr𝐇 + Re Tr(λ̃C̃)` on phase-space matrices laid out as
/// `q_1..q_R, p_1..p_R`.
pub struct Exponent<'a> {
    model: &'a ModelSpec,
    tau: f64,
    lambda_tilde: &'a ComplexMatrix,
}

impl<'a> Exponent<'a> {
    pub fn new(model: &'a ModelSpec, params: &'a EnsembleParams) -> Self {
        Exponent {
            model,
            tau: params.tau,
            lambda_tilde: &params.lambda_tilde,
        }
    }

    /// Returns the exponent together with `Tr𝐇` and `C̃`.
    pub fn evaluate(&self, mats: &[ComplexMatrix]) -> Result<(f64, Complex64, ComplexMatrix)> {
        let r = self.model.dofs();
        let state = PhaseSpaceState {
            q: mats[..r].to_vec(),
            p: mats[r..].to_vec(),
            t: 0.0,
        };
        let h = self.model.energy(&state)?;
        let c = compute_tilde_c(&state)?;
        let src = self.lambda_tilde.trace_of_product(&c);
        Ok((self.tau * h.re + src.re, h, c))
    }

    fn value(&self, mats: &[ComplexMatrix]) -> Result<f64> {
        self.evaluate(mats).map(|(e, _, _)| e)
    }
}

/// Refuses ensembles whose weight cannot be normalized. Quadratic Hamiltonians get an
/// exact test (Cholesky of the exponent's quadratic form); higher degrees get an
/// asymptotic probe along random directions. Also rejects complex exponents.
pub fn check_weight(model: &ModelSpec, params: &EnsembleParams) -> Result<()> {
    let coords = HermitianCoordinates::new(model.dim(), 2 * model.dofs());
    let exponent = Exponent::new(model, params);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..4 {
        let x: Vec<f64> = (0..coords.len()).map(|_| rng.sample(StandardNormal)).collect();
        let (_, h, _) = exponent.evaluate(&coords.to_matrices(&x))?;
        if h.im.abs() > 1e-9 * (1.0 + h.re.abs()) {
            return Err(Error::Config(format!(
                "Tr H is not real on Hermitian matrices (imaginary part {:e})",
                h.im
            )));
        }
    }
    if model.hamiltonian().max_degree() <= 2 {
        let a = quadratic_form(&exponent, &coords)?;
        if !is_positive_definite(&a, coords.len()) {
            return Err(Error::Unbounded(
                "the quadratic form of the exponent is not positive definite".into(),
            ));
        }
        return Ok(());
    }
    let origin = exponent.value(&coords.to_matrices(&vec![0.0; coords.len()]))?;
    for _ in 0..64 {
        let mut x: Vec<f64> = (0..coords.len()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let mut last = origin;
        for s in [10.0, 100.0, 1000.0] {
            let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
            let e = exponent.value(&coords.to_matrices(&xs))?;
            if !(e > last) {
                return Err(Error::Unbounded(format!(
                    "exponent does not grow along a probe direction (radius {s}: {e:e})"
                )));
            }
            last = e;
        }
    }
    Ok(())
}

/// Symmetric matrix `A` with exponent `= ½xᵀAx + linear + const`, by polarization.
/// Exact (up to rounding) when the exponent is quadratic.
pub fn quadratic_form(exponent: &Exponent<'_>, coords: &HermitianCoordinates) -> Result<Vec<f64>> {
    let n = coords.len();
    let at = |pairs: &[(usize, f64)]| -> Result<f64> {
        let mut x = vec![0.0; n];
        for &(k, v) in pairs {
            x[k] += v;
        }
        exponent.value(&coords.to_matrices(&x))
    };
    let e0 = at(&[])?;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = at(&[(i, 1.0)])? + at(&[(i, -1.0)])? - 2.0 * e0;
        for j in 0..i {
            let v = (at(&[(i, 1.0), (j, 1.0)])? - at(&[(i, 1.0), (j, -1.0)])?
                - at(&[(i, -1.0), (j, 1.0)])?
                + at(&[(i, -1.0), (j, -1.0)])?)
                / 4.0;
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    Ok(a)
}

/// Raw output of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSamples {
    pub chain: usize,
    /// `Re Tr𝐇` per kept sample.
    pub trace_h: Vec<f64>,
    /// Row-major `C̃` per kept sample.
    pub tilde_c: Vec<Vec<Complex64>>,
    pub accepted: u64,
    pub proposed: u64,
}

/// Runs chain `chain` from the origin. The stream is a pure function of
/// `(params.seed, chain)`, so chains can run in any order or in parallel.
pub fn run_chain(model: &ModelSpec, params: &EnsembleParams, chain: usize) -> Result<ChainSamples> {
    params.validate(model)?;
    let coords = HermitianCoordinates::new(model.dim(), 2 * model.dofs());
    let exponent = Exponent::new(model, params);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(chain as u64);

    let mut mats = vec![ComplexMatrix::zeros(model.dim(), 0, Grading::Even); coords.matrices];
    let (mut e, _, _) = exponent.evaluate(&mats)?;
    let mut out = ChainSamples {
        chain,
        trace_h: Vec::with_capacity(params.sweeps / params.thin),
        tilde_c: Vec::with_capacity(params.sweeps / params.thin),
        accepted: 0,
        proposed: 0,
    };
    for sweep in 0..params.burn_in + params.sweeps {
        for k in 0..coords.len() {
            let old = coords.get(&mats, k);
            let step: f64 = rng.sample(StandardNormal);
            coords.set(&mut mats, k, old + params.proposal_scale * step);
            let e_new = exponent.value(&mats)?;
            let u: f64 = rng.random();
            out.proposed += 1;
            if e_new.is_finite() && u < (e - e_new).exp() {
                e = e_new;
                out.accepted += 1;
            } else {
                coords.set(&mut mats, k, old);
            }
        }
        if sweep >= params.burn_in && (sweep - params.burn_in) % params.thin == 0 {
            let (_, h, c) = exponent.evaluate(&mats)?;
            if !h.re.is_finite() {
                return Err(Error::Numerical {
                    t: sweep as f64,
                    what: "Tr H became non-finite during sampling".into(),
                });
            }
            out.trace_h.push(h.re);
            out.tilde_c.push(c.entries().to_vec());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub dim: usize,
    pub chains: usize,
    pub samples: usize,
    pub mean_trace_h: f64,
    pub stderr_trace_h: f64,
    /// `⟨C̃⟩`.
    pub avg_c: ComplexMatrix,
    /// Batch-means standard errors of `Re` and `Im` of each entry, packed as complex.
    pub avg_c_stderr: ComplexMatrix,
    pub acceptance_rate: f64,
    /// `var(Tr𝐇) / stderr²`.
    pub ess_trace_h: f64,
    /// Largest `|⟨C̃⟩ + ⟨C̃⟩†|` entry in units of its standard error.
    pub max_antihermitian_sigma: f64,
    pub warnings: Vec<String>,
}

/// Mean and standard error from the pooled batch means of several series.
fn batch_stats<'a, I>(series: I) -> (f64, f64, f64)
where
    I: Iterator<Item = &'a [f64]>,
{
    let mut means = Vec::new();
    let mut all_sum = 0.0;
    let mut all_sq = 0.0;
    let mut all_n = 0usize;
    for s in series {
        let b = s.len() / BATCHES_PER_CHAIN;
        for k in 0..BATCHES_PER_CHAIN {
            let chunk = &s[k * b..(k + 1) * b];
            means.push(chunk.iter().sum::<f64>() / b as f64);
        }
        for &x in &s[..b * BATCHES_PER_CHAIN] {
            all_sum += x;
            all_sq += x * x;
            all_n += 1;
        }
    }
    let nb = means.len() as f64;
    let mean = means.iter().sum::<f64>() / nb;
    let var_b = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (nb - 1.0);
    let stderr = (var_b / nb).sqrt();
    let var = (all_sq / all_n as f64 - (all_sum / all_n as f64).powi(2)).max(0.0);
    (mean, stderr, var)
}

/// Pooled reduction over chains; the result does not depend on the order of `chains`.
pub fn merge_chains(dim: usize, chains: &[ChainSamples]) -> Result<EnsembleResult> {
    if chains.is_empty() {
        return Err(Error::Config("no chains to merge".into()));
    }
    let mut sorted: Vec<&ChainSamples> = chains.iter().collect();
    sorted.sort_by_key(|c| c.chain);
    let len = sorted[0].trace_h.len();
    if len < 2 * BATCHES_PER_CHAIN || sorted.iter().any(|c| c.trace_h.len() != len) {
        return Err(Error::Config("chains must have equal length of at least 40".into()));
    }
    let (mean_h, err_h, var_h) = batch_stats(sorted.iter().map(|c| c.trace_h.as_slice()));
    let mut avg = ComplexMatrix::zeros(dim, 0, Grading::Even);
    let mut err = ComplexMatrix::zeros(dim, 0, Grading::Even);
    let mut series_re: Vec<Vec<f64>> = vec![Vec::with_capacity(len); sorted.len()];
    let mut series_im: Vec<Vec<f64>> = vec![Vec::with_capacity(len); sorted.len()];
    for idx in 0..dim * dim {
        for (k, c) in sorted.iter().enumerate() {
            series_re[k].clear();
            series_im[k].clear();
            for s in &c.tilde_c {
                series_re[k].push(s[idx].re);
                series_im[k].push(s[idx].im);
            }
        }
        let (m_re, e_re, _) = batch_stats(series_re.iter().map(|v| v.as_slice()));
        let (m_im, e_im, _) = batch_stats(series_im.iter().map(|v| v.as_slice()));
        avg.set(idx / dim, idx % dim, Complex64::new(m_re, m_im));
        err.set(idx / dim, idx % dim, Complex64::new(e_re, e_im));
    }
    let accepted: u64 = sorted.iter().map(|c| c.accepted).sum();
    let proposed: u64 = sorted.iter().map(|c| c.proposed).sum();
    let acceptance_rate = accepted as f64 / proposed.max(1) as f64;
    let mut warnings = Vec::new();
    if !(0.1..=0.9).contains(&acceptance_rate) {
        warnings.push(format!(
            "acceptance rate {acceptance_rate:.3} is outside [0.1, 0.9]; adjust proposal_scale"
        ));
    }
    let max_antihermitian_sigma = antihermitian_sigma(&avg, &err);
    if max_antihermitian_sigma > 3.0 {
        warnings.push(format!(
            "<C~> deviates from anti-Hermitian by {max_antihermitian_sigma:.2} sigma"
        ));
    }
    Ok(EnsembleResult {
        dim,
        chains: sorted.len(),
        samples: len * sorted.len(),
        mean_trace_h: mean_h,
        stderr_trace_h: err_h,
        avg_c: avg,
        avg_c_stderr: err,
        acceptance_rate,
        ess_trace_h: if err_h > 0.0 { var_h / (err_h * err_h) } else { f64::INFINITY },
        max_antihermitian_sigma,
        warnings,
    })
}

/// Largest `|(A + A†)_ij|` in units of its propagated standard error, over `Re`
/// and `Im` parts separately.
pub(crate) fn antihermitian_sigma(avg: &ComplexMatrix, err: &ComplexMatrix) -> f64 {
    let n = avg.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = avg.get(i, j) + avg.get(j, i).conj();
            let (ei, ej) = (err.get(i, j), err.get(j, i));
            let sig_re = (ei.re * ei.re + ej.re * ej.re).sqrt();
            let sig_im = (ei.im * ei.im + ej.im * ej.im).sqrt();
            for (v, sig) in [(s.re, sig_re), (s.im, sig_im)] {
                let z = if sig > 0.0 {
                    v.abs() / sig
                } else if v.abs() > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                };
                worst = worst.max(z);
            }
        }
    }
    worst
}

/// Weight check, every chain in order, then the merge.
pub fn run_ensemble(model: &ModelSpec, params: &EnsembleParams) -> Result<EnsembleResult> {
    params.validate(model)?;
    check_weight(model, params)?;
    let chains = (0..params.chains)
        .map(|c| run_chain(model, params, c))
        .collect::<Result<Vec<_>>>()?;
    merge_chains(model.dim(), &chains)
}
