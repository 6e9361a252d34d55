//! Small dense linear algebra: just enough for the i_eff spectral decomposition,
//! Jacobian determinants and quadratic-form checks. Row-major `Vec<f64>` storage.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::matrix::{ComplexMatrix, Grading};

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

/// `[[A, -B], [B, A]]` for `H = A + iB`.
fn real_embedding(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.dim();
    let mut e = vec![0.0; 4 * n * n];
    let w = 2 * n;
    for i in 0..n {
        for j in 0..n {
            let z = *h.get(i, j);
            e[i * w + j] = z.re;
            e[(i + n) * w + (j + n)] = z.re;
            e[i * w + (j + n)] = -z.im;
            e[(i + n) * w + j] = z.im;
        }
    }
    e
}

/// Eigenvalues of a Hermitian matrix, ascending. Computed on the real embedding,
/// whose spectrum is the Hermitian spectrum with every multiplicity doubled.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.dim();
    let (mut vals, _) = symmetric_eigen(&real_embedding(h), 2 * n);
    vals.sort_by(|a, b| a.total_cmp(b));
    vals.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
}

/// `f(H)` for Hermitian `H` and real `f`, through the real embedding: the
/// embedding commutes with functional calculus, so no eigenvector pairing is needed.
pub fn hermitian_function<F: Fn(f64) -> f64>(h: &ComplexMatrix, f: F) -> ComplexMatrix {
    let n = h.dim();
    let w = 2 * n;
    let (vals, vecs) = symmetric_eigen(&real_embedding(h), w);
    let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    let mut out = ComplexMatrix::zeros(n, 0, Grading::Even);
    for i in 0..n {
        for j in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..w {
                re += vecs[i * w + k] * fv[k] * vecs[j * w + k];
                im += vecs[(i + n) * w + k] * fv[k] * vecs[j * w + k];
            }
            out.set(i, j, Complex64::new(re, im));
        }
    }
    out
}

/// LU factorisation with partial pivoting. Returns `None` for an exactly singular matrix.
fn lu(a: &[f64], n: usize) -> Option<(Vec<f64>, Vec<usize>, f64)> {
    let mut m = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x * n + col].abs().total_cmp(&m[y * n + col].abs()))?;
        if m[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            perm.swap(col, pivot);
            sign = -sign;
        }
        let d = m[col * n + col];
        for row in (col + 1)..n {
            let factor = m[row * n + col] / d;
            m[row * n + col] = factor;
            for k in (col + 1)..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
        }
    }
    Some((m, perm, sign))
}

pub fn determinant(a: &[f64], n: usize) -> f64 {
    match lu(a, n) {
        None => 0.0,
        Some((m, _, sign)) => (0..n).map(|i| m[i * n + i]).product::<f64>() * sign,
    }
}

/// Inverse by LU; `None` when a pivot falls below `rel_tol` times the largest entry.
pub fn invert(a: &[f64], n: usize, rel_tol: f64) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let (m, perm, _) = lu(a, n)?;
    if (0..n).any(|i| m[i * n + i].abs() <= rel_tol * scale) {
        return None;
    }
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut x: Vec<f64> = (0..n).map(|i| if perm[i] == col { 1.0 } else { 0.0 }).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= m[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= m[i * n + k] * x[k];
            }
            x[i] /= m[i * n + i];
        }
        for i in 0..n {
            inv[i * n + col] = x[i];
        }
    }
    Some(inv)
}

/// True when the symmetric matrix admits a Cholesky factorisation.
pub fn is_positive_definite(a: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}
