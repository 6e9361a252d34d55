use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TovSolution;
use crate::error::{Error, Result};

/// Metric data at one spacetime point of a static spherical solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    pub r: f64,
    pub theta: f64,
    pub g00: f64,
    /// `√(−det g)`.
    pub g4det_sqrt: f64,
}

/// Draws `count` points from the matter grid and the vacuum exterior of `solution`,
/// with a uniform polar angle.
pub fn metric_samples(solution: &TovSolution, count: usize, seed: u64) -> Result<Vec<MetricSample>> {
    let ext = &solution.exterior;
    let total = solution.r.len() + ext.r.len();
    if total == 0 {
        return Err(Error::Config("empty solution".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let k = rng.random_range(0..total);
        let (r, m, nu) = if k < solution.r.len() {
            (solution.r[k], solution.m[k], solution.nu[k])
        } else {
            let j = k - solution.r.len();
            (ext.r[j], solution.m_total, ext.nu[j])
        };
        // keep away from the axis so sin θ does not vanish
        let theta = rng.random_range(1e-3..PI - 1e-3);
        let g00 = (2.0 * nu).exp();
        let grr = 1.0 / (1.0 - 2.0 * m / r);
        let g4det_sqrt = (g00 * grr).sqrt() * r * r * theta.sin();
        if !(g00 > 0.0 && g00.is_finite() && g4det_sqrt.is_finite()) {
            return Err(Error::Numerical {
                t: r,
                what: format!("invalid metric sample at r = {r:e}: g00 = {g00:e}"),
            });
        }
        out.push(MetricSample {
            r,
            theta,
            g00,
            g4det_sqrt,
        });
    }
    Ok(out)
}

fn check_inputs(samples: &[MetricSample], lambdas: &[f64]) -> Result<()> {
    if samples.len() != lambdas.len() {
        return Err(Error::Shape {
            left: samples.len(),
            right: lambdas.len(),
        });
    }
    if let Some(s) = samples.iter().find(|s| !(s.g00 > 0.0 && s.g00.is_finite())) {
        return Err(Error::Config(format!("g00 must be positive, got {:e}", s.g00)));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Config(format!("scale factor must be positive, got {l:e}")));
    }
    Ok(())
}

fn max_relative_change<F, G>(samples: &[MetricSample], lambdas: &[f64], before: F, after: G) -> f64
where
    F: Fn(&MetricSample) -> f64,
    G: Fn(&MetricSample, f64) -> f64,
{
    samples
        .iter()
        .zip(lambdas)
        .map(|(s, &l)| {
            let a = before(s);
            ((after(s, l) - a) / a).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest relative change of `√(−g)·g00⁻²` under `g → λ²g`, evaluated pointwise.
pub fn weyl_invariance_check(samples: &[MetricSample], lambdas: &[f64]) -> Result<f64> {
    check_inputs(samples, lambdas)?;
    Ok(max_relative_change(
        samples,
        lambdas,
        |s| s.g4det_sqrt * s.g00.powi(-2),
        |s, l| {
            let l2 = l * l;
            (l2 * l2 * s.g4det_sqrt) * (l2 * s.g00).powi(-2)
        },
    ))
}

/// Same scaling applied to `√(−g)·R` with the toy curvature `R = 1/r²`, which
/// picks up `λ⁻²`. Not invariant, so the returned deviation is large.
pub fn curvature_control_check(samples: &[MetricSample], lambdas: &[f64]) -> Result<f64> {
    check_inputs(samples, lambdas)?;
    Ok(max_relative_change(
        samples,
        lambdas,
        |s| s.g4det_sqrt * (1.0 / (s.r * s.r)),
        |s, l| {
            let l2 = l * l;
            (l2 * l2 * s.g4det_sqrt) * (1.0 / (s.r * s.r)) / l2
        },
    ))
}
