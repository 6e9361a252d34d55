//! Static spherically symmetric stars with a pressure-triggered jump in the
//! equation of state, integrated from the centre with the TOV equations.
//!
//! Geometric units `G = c = 1`. Above `p_jump` the fluid has `ρ = −p + ε`, so the
//! enclosed mass goes negative and `1 − 2m/r` stays away from zero; below it the
//! fluid is relativistic matter with `ρ = 3p`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

mod ode;
mod weyl;

#[cfg(test)]
mod tests;

use ode::{dopri_step, State};
pub use weyl::{
    curvature_control_check, metric_samples, weyl_invariance_check, MetricSample,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosSpec {
    pub p_jump: f64,
    /// Interior offset: `ρ = −p + ε` above the jump.
    pub epsilon: f64,
    pub p_surface: f64,
    /// With the jump disabled the fluid is `ρ = 3p` at every pressure.
    pub jump_enabled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Interior,
    Exterior,
}

impl EosSpec {
    pub fn new(p_jump: f64, epsilon: f64, p_surface: f64) -> Self {
        EosSpec {
            p_jump,
            epsilon,
            p_surface,
            jump_enabled: true,
        }
    }

    pub fn without_jump(mut self) -> Self {
        self.jump_enabled = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.p_jump.is_finite() && self.epsilon.is_finite() && self.p_surface.is_finite();
        if !finite {
            return Err(Error::Config("equation of state parameters must be finite".into()));
        }
        if !(self.p_surface > 0.0 && self.p_surface < self.p_jump) {
            return Err(Error::Config(format!(
                "need 0 < p_surface < p_jump, got p_surface = {:e}, p_jump = {:e}",
                self.p_surface, self.p_jump
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.p_jump) {
            return Err(Error::Config(format!(
                "need 0 < epsilon < p_jump, got epsilon = {:e}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Branch selected by the pressure alone.
    pub fn branch_for(&self, p: f64) -> Branch {
        if self.jump_enabled && p >= self.p_jump {
            Branch::Interior
        } else {
            Branch::Exterior
        }
    }

    pub fn density(&self, p: f64, branch: Branch) -> f64 {
        match branch {
            Branch::Interior => -p + self.epsilon,
            Branch::Exterior => 3.0 * p,
        }
    }
}

/// `(dm/dr, dν/dr, dp/dr)` for a given density.
pub fn tov_rhs_with_density(r: f64, m: f64, p: f64, rho: f64) -> Result<[f64; 3]> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {r:e}")));
    }
    if 2.0 * m >= r {
        return Err(Error::Horizon { r, m });
    }
    let dm = 4.0 * PI * r * r * rho;
    let dnu = (m + 4.0 * PI * r * r * r * p) / (r * (r - 2.0 * m));
    let dp = -(rho + p) * dnu;
    if !(dm.is_finite() && dnu.is_finite() && dp.is_finite()) {
        return Err(Error::Numerical {
            t: r,
            what: format!("non-finite TOV derivative at r = {r:e}"),
        });
    }
    Ok([dm, dnu, dp])
}

/// TOV right-hand side with the branch picked from `p`. `ν` does not enter.
pub fn tov_rhs(r: f64, m: f64, _nu: f64, p: f64, eos: &EosSpec) -> Result<[f64; 3]> {
    tov_rhs_with_density(r, m, p, eos.density(p, eos.branch_for(p)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TovOptions {
    /// Relative tolerance of the embedded error estimate.
    pub rtol: f64,
    /// First trial step; defaults to the start radius.
    pub dr_initial: Option<f64>,
    /// Give up with `NoSurface` beyond this radius; defaults to `1e8` length scales.
    pub r_max: Option<f64>,
    pub max_steps: usize,
    /// Outer edge of the vacuum exterior as a multiple of the surface radius.
    pub exterior_factor: f64,
}

impl Default for TovOptions {
    fn default() -> Self {
        TovOptions {
            rtol: 1e-12,
            dr_initial: None,
            r_max: None,
            max_steps: 1_000_000,
            exterior_factor: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpInfo {
    pub r: f64,
    pub m: f64,
    /// Distance of the located crossing from `p_jump` before snapping.
    pub p_residual: f64,
    pub rho_inside: f64,
    pub rho_outside: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorProfile {
    pub r: Vec<f64>,
    pub nu: Vec<f64>,
    /// `max |e^{2ν} − (1 − 2M/r)| / (1 − 2M/r)`.
    pub max_relative_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TovSolution {
    pub r: Vec<f64>,
    pub m: Vec<f64>,
    pub nu: Vec<f64>,
    pub p: Vec<f64>,
    pub rho: Vec<f64>,
    pub r_surface: f64,
    pub m_total: f64,
    pub min_compactness: f64,
    pub jump: Option<JumpInfo>,
    pub exterior: ExteriorProfile,
    pub p_center: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TovSolution {
    /// `1 − 2m/r` on the matter grid.
    pub fn compactness(&self) -> Vec<f64> {
        self.r
            .iter()
            .zip(&self.m)
            .map(|(r, m)| 1.0 - 2.0 * m / r)
            .collect()
    }

    /// Largest `p[i+1] − p[i]` over the grid, ignoring the duplicated jump point.
    pub fn max_pressure_increase(&self) -> f64 {
        self.r
            .windows(2)
            .zip(self.p.windows(2))
            .filter(|(r, _)| r[1] > r[0])
            .map(|(_, p)| p[1] - p[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Natural length of the central fluid, `(4π(|ρ_c| + 3p_c)/3)^{−1/2}`.
pub fn length_scale(p_center: f64, eos: &EosSpec) -> f64 {
    let rho = eos.density(p_center, eos.branch_for(p_center));
    (4.0 * PI * (rho.abs() + 3.0 * p_center) / 3.0).powf(-0.5)
}

struct Stepper<'a> {
    eos: &'a EosSpec,
    rtol: f64,
}

impl Stepper<'_> {
    fn rhs(&self, branch: Branch) -> impl Fn(f64, &State) -> Result<State> + '_ {
        let eos = *self.eos;
        move |r, y: &State| {
            let rho = eos.density(y[2], branch);
            let d = tov_rhs_with_density(r, y[0], y[2], rho)?;
            Ok([d[0], d[1], d[2]])
        }
    }

    fn error_norm(&self, m_peak: f64, y: &State, y1: &State, err: &State) -> f64 {
        // m may pass through zero, so its tolerance keeps a floor tied to the largest |m| so far
        let m_floor = 1e-3 * m_peak;
        let scales = [
            self.rtol * (y[0].abs().max(y1[0].abs()) + m_floor),
            self.rtol * (1.0 + y[1].abs().max(y1[1].abs())),
            self.rtol * y[2].abs().max(y1[2].abs()),
        ];
        err.iter()
            .zip(&scales)
            .map(|(e, s)| (e / s).abs())
            .fold(0.0, f64::max)
    }
}

/// Step size `h* ∈ (0, h)` where the pressure of a single step from `(r, y)` hits
/// `target`, by Illinois false position.
fn locate_crossing<F>(f: &F, r: f64, y: &State, h: f64, target: f64) -> Result<(f64, State, f64)>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let mut a = 0.0;
    let mut fa = y[2] - target;
    let mut b = h;
    let mut yb = dopri_step(f, r, y, h)?.0;
    let mut fb = yb[2] - target;
    let mut side = 0i8;
    let tol = 1e-15 * target.abs().max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if fb.abs() <= tol || (b - a).abs() <= 4.0 * f64::EPSILON * (r + b) {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let yc = dopri_step(f, r, y, c)?.0;
        let fc = yc[2] - target;
        if fc.signum() == fb.signum() {
            b = c;
            yb = yc;
            fb = fc;
            if side == -1 {
                fa /= 2.0;
            }
            side = -1;
        } else {
            a = b;
            fa = fb;
            b = c;
            yb = yc;
            fb = fc;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
        if fc == 0.0 {
            break;
        }
    }
    Ok((b, yb, fb))
}

/// Integrates a star from the centre to `p = p_surface` and the vacuum exterior
/// out to `exterior_factor · R`.
pub fn integrate_star(p_center: f64, eos: &EosSpec, opts: &TovOptions) -> Result<TovSolution> {
    eos.validate()?;
    if !(p_center.is_finite() && p_center > eos.p_surface) {
        return Err(Error::Config(format!(
            "central pressure must exceed p_surface, got {p_center:e}"
        )));
    }
    if !(opts.rtol > 0.0 && opts.rtol < 1e-2) {
        return Err(Error::Config(format!("rtol out of range: {:e}", opts.rtol)));
    }
    if !(opts.exterior_factor > 1.0) {
        return Err(Error::Config("exterior_factor must exceed 1".into()));
    }
    let scale = length_scale(p_center, eos);
    let r_max = opts.r_max.unwrap_or(1e8 * scale);
    let mut branch = eos.branch_for(p_center);
    let rho_c = eos.density(p_center, branch);
    let stepper = Stepper {
        eos,
        rtol: opts.rtol,
    };

    // series start
    let r0 = 1e-6 * scale;
    let mut r = r0;
    let mut y: State = [
        4.0 / 3.0 * PI * rho_c * r0.powi(3),
        2.0 * PI / 3.0 * (rho_c + 3.0 * p_center) * r0 * r0,
        p_center - 2.0 * PI / 3.0 * (rho_c + p_center) * (rho_c + 3.0 * p_center) * r0 * r0,
    ];
    let mut h = opts.dr_initial.unwrap_or(r0);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("dr_initial must be positive, got {h:e}")));
    }

    let mut rs = alloc::vec![r];
    let mut ys = alloc::vec![y];
    let mut rhos = alloc::vec![rho_c];
    let mut jump = None;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut m_peak = y[0].abs();

    loop {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Numerical {
                t: r,
                what: format!("step budget of {} exhausted at r = {r:e}", opts.max_steps),
            });
        }
        if r > r_max {
            return Err(Error::NoSurface {
                r,
                p: y[2],
                target: if branch == Branch::Interior { eos.p_jump } else { eos.p_surface },
            });
        }
        if h < 1e-14 * r {
            return Err(Error::StepUnderflow { r, h });
        }
        let f = stepper.rhs(branch);
        let (y1, err) = match dopri_step(&f, r, &y, h) {
            Ok(v) => v,
            Err(Error::Horizon { .. }) => {
                // a trial stage may overshoot into 2m >= r; retry smaller before giving up
                if 2.0 * y[0] >= r {
                    return Err(Error::Horizon { r, m: y[0] });
                }
                rejected += 1;
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        let norm = stepper.error_norm(m_peak, &y, &y1, &err);
        if !(norm <= 1.0) {
            rejected += 1;
            let factor = if norm.is_finite() {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            h *= factor;
            continue;
        }
        accepted += 1;
        m_peak = m_peak.max(y1[0].abs());
        let target = match branch {
            Branch::Interior => eos.p_jump,
            Branch::Exterior => eos.p_surface,
        };
        let grow = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        if y1[2] > target {
            r += h;
            y = y1;
            rs.push(r);
            ys.push(y);
            rhos.push(eos.density(y[2], branch));
            h *= grow;
            continue;
        }
        let (hc, mut yc, residual) = locate_crossing(&f, r, &y, h, target)?;
        r += hc;
        yc[2] = target;
        y = yc;
        rs.push(r);
        ys.push(y);
        rhos.push(eos.density(target, branch));
        if branch == Branch::Exterior {
            break;
        }
        let rho_outside = eos.density(target, Branch::Exterior);
        jump = Some(JumpInfo {
            r,
            m: y[0],
            p_residual: residual.abs(),
            rho_inside: eos.density(target, Branch::Interior),
            rho_outside,
        });
        branch = Branch::Exterior;
        rs.push(r);
        ys.push(y);
        rhos.push(rho_outside);
        h = h.max(hc);
    }

    let r_surface = r;
    let m_total = y[0];
    if 2.0 * m_total >= r_surface {
        return Err(Error::Horizon { r: r_surface, m: m_total });
    }
    // shift ν so the surface value matches Schwarzschild
    let shift = 0.5 * (1.0 - 2.0 * m_total / r_surface).ln() - y[1];
    let mut min_compactness = f64::INFINITY;
    for (ri, yi) in rs.iter().zip(&ys) {
        min_compactness = min_compactness.min(1.0 - 2.0 * yi[0] / ri);
    }
    let exterior = integrate_exterior(r_surface, m_total, y[1] + shift, opts, &stepper)?;

    Ok(TovSolution {
        m: ys.iter().map(|y| y[0]).collect(),
        nu: ys.iter().map(|y| y[1] + shift).collect(),
        p: ys.iter().map(|y| y[2]).collect(),
        rho: rhos,
        r: rs,
        r_surface,
        m_total,
        min_compactness,
        jump,
        exterior,
        p_center,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn integrate_exterior(
    r_surface: f64,
    m_total: f64,
    nu_surface: f64,
    opts: &TovOptions,
    stepper: &Stepper<'_>,
) -> Result<ExteriorProfile> {
    let f = |r: f64, y: &State| -> Result<State> {
        let d = tov_rhs_with_density(r, y[0], 0.0, 0.0)?;
        Ok([d[0], d[1], 0.0])
    };
    let r_end = opts.exterior_factor * r_surface;
    let mut r = r_surface;
    let mut y: State = [m_total, nu_surface, 0.0];
    let mut h = 1e-3 * r_surface;
    let mut out_r = alloc::vec![r];
    let mut out_nu = alloc::vec![y[1]];
    let mut steps = 0usize;
    while r < r_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical {
                t: r,
                what: "step budget exhausted in the exterior".into(),
            });
        }
        if h < 1e-14 * r {
            return Err(Error::StepUnderflow { r, h });
        }
        let step = h.min(r_end - r);
        let (y1, err) = dopri_step(&f, r, &y, step)?;
        let scale = stepper.rtol * (1.0 + y[1].abs().max(y1[1].abs()));
        let norm = (err[1] / scale).abs();
        if !(norm <= 1.0) {
            h *= (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }
        r = if step == r_end - r { r_end } else { r + step };
        y = y1;
        out_r.push(r);
        out_nu.push(y[1]);
        h = step
            * if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
    }
    let max_relative_deviation = out_r
        .iter()
        .zip(&out_nu)
        .map(|(r, nu)| {
            let s = 1.0 - 2.0 * m_total / r;
            ((2.0 * nu).exp() - s).abs() / s
        })
        .fold(0.0, f64::max);
    Ok(ExteriorProfile {
        r: out_r,
        nu: out_nu,
        max_relative_deviation,
    })
}

/// One point of a parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub p_center: f64,
    pub eos: EosSpec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarSummary {
    pub m_total: f64,
    pub r_surface: f64,
    pub min_compactness: f64,
    pub r_jump: Option<f64>,
    pub exterior_deviation: f64,
}

impl From<&TovSolution> for StarSummary {
    fn from(s: &TovSolution) -> Self {
        StarSummary {
            m_total: s.m_total,
            r_surface: s.r_surface,
            min_compactness: s.min_compactness,
            r_jump: s.jump.map(|j| j.r),
            exterior_deviation: s.exterior.max_relative_deviation,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub outcome: Result<StarSummary>,
}

/// Runs one sweep point; failures are captured in the row.
pub fn sweep_point(point: SweepPoint, opts: &TovOptions) -> SweepRow {
    SweepRow {
        point,
        outcome: integrate_star(point.p_center, &point.eos, opts).map(|s| StarSummary::from(&s)),
    }
}

/// Cartesian product of central pressures and equations of state, in input order.
pub fn sweep_grid(p_centers: &[f64], eos: &[EosSpec]) -> Vec<SweepPoint> {
    eos.iter()
        .flat_map(|e| p_centers.iter().map(move |&p| SweepPoint { p_center: p, eos: *e }))
        .collect()
}

/// Sequential sweep. Individual failures do not stop the remaining points.
pub fn sweep(points: &[SweepPoint], opts: &TovOptions) -> Vec<SweepRow> {
    points.iter().map(|&p| sweep_point(p, opts)).collect()
}
