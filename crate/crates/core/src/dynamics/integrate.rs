use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::{compute_tilde_c, pair_charge, ModelSpec, PhaseSpaceState};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Rk4,
    Leapfrog,
}

fn axpy(xs: &[ComplexMatrix], ys: &[ComplexMatrix], a: f64) -> Vec<ComplexMatrix> {
    xs.iter().zip(ys).map(|(x, y)| x.add_scaled(y, a)).collect()
}

/// One classical Runge-Kutta step.
pub fn step_rk4(state: &PhaseSpaceState, model: &ModelSpec, dt: f64) -> Result<PhaseSpaceState> {
    model.check_state(state)?;
    let rhs = |q: &[ComplexMatrix], p: &[ComplexMatrix]| -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
        let qd = model.eval_grad_p(q, p)?;
        let pd = model
            .eval_grad_q(q, p)?
            .into_iter()
            .map(|m| -&m)
            .collect();
        Ok((qd, pd))
    };
    let (q0, p0) = (&state.q, &state.p);
    let (k1q, k1p) = rhs(q0, p0)?;
    let (k2q, k2p) = rhs(&axpy(q0, &k1q, dt / 2.0), &axpy(p0, &k1p, dt / 2.0))?;
    let (k3q, k3p) = rhs(&axpy(q0, &k2q, dt / 2.0), &axpy(p0, &k2p, dt / 2.0))?;
    let (k4q, k4p) = rhs(&axpy(q0, &k3q, dt), &axpy(p0, &k3p, dt))?;
    let combine = |x: &[ComplexMatrix], k1: &[ComplexMatrix], k2: &[ComplexMatrix], k3: &[ComplexMatrix], k4: &[ComplexMatrix]| {
        (0..x.len())
            .map(|r| {
                x[r].add_scaled(&k1[r], dt / 6.0)
                    .add_scaled(&k2[r], dt / 3.0)
                    .add_scaled(&k3[r], dt / 3.0)
                    .add_scaled(&k4[r], dt / 6.0)
            })
            .collect::<Vec<_>>()
    };
    Ok(PhaseSpaceState {
        q: combine(q0, &k1q, &k2q, &k3q, &k4q),
        p: combine(p0, &k1p, &k2p, &k3p, &k4p),
        t: state.t + dt,
    })
}

/// Kick-drift-kick Störmer-Verlet. Needs `𝐇 = T(p) + V(q)`.
pub fn step_leapfrog(
    state: &PhaseSpaceState,
    model: &ModelSpec,
    dt: f64,
) -> Result<PhaseSpaceState> {
    if !model.is_separable() {
        return Err(Error::NonSeparable);
    }
    model.check_state(state)?;
    let force = model.eval_grad_q(&state.q, &state.p)?;
    let p_half = axpy(&state.p, &force, -dt / 2.0);
    let vel = model.eval_grad_p(&state.q, &p_half)?;
    let q = axpy(&state.q, &vel, dt);
    let force = model.eval_grad_q(&q, &p_half)?;
    let p = axpy(&p_half, &force, -dt / 2.0);
    Ok(PhaseSpaceState {
        q,
        p,
        t: state.t + dt,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub t_end: f64,
    pub dt: f64,
    pub integrator: Integrator,
    /// Record a sample every `stride` steps (the first and last step are always kept).
    pub stride: usize,
    /// Keep full states every this many steps.
    pub snapshot_stride: Option<usize>,
}

impl EvolveOptions {
    pub fn new(t_end: f64, dt: f64, integrator: Integrator) -> Self {
        EvolveOptions {
            t_end,
            dt,
            integrator,
            stride: 1,
            snapshot_stride: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub tr_h: Complex64,
    /// `Re Tr(C̃²)`.
    pub re_tr_c2: f64,
    /// `‖[q_r,p_r](t) − [q_r,p_r](0)‖_F` per degree of freedom.
    pub dof_drift: Vec<f64>,
    /// `‖C̃(t) − C̃(0)‖_F`.
    pub tilde_c_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConservationReport {
    pub energy_initial: Complex64,
    /// `max_t |Tr𝐇(t) − Tr𝐇(0)|`.
    pub max_energy_drift: f64,
    /// Energy drift divided by `|Tr𝐇(0)|` (or by 1 when that vanishes).
    pub max_relative_energy_drift: f64,
    pub max_tilde_c_drift: f64,
    pub max_dof_drift: Vec<f64>,
    /// `max_t ‖X − X†‖_F` over all coordinates and momenta.
    pub max_hermiticity_defect: f64,
    pub unitary_invariant: bool,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<PhaseSpaceState>,
    pub final_state: PhaseSpaceState,
    pub report: ConservationReport,
}

fn hermiticity_defect(state: &PhaseSpaceState) -> f64 {
    state
        .q
        .iter()
        .chain(&state.p)
        .map(|m| (m - &m.adjoint()).frobenius_norm())
        .fold(0.0, f64::max)
}

/// Integrates from `state` to `state.t + t_end` with a fixed step, sampling the
/// conserved quantities along the way. The last step is shortened if `t_end` is not
/// a multiple of `dt`.
pub fn evolve(
    state: &PhaseSpaceState,
    model: &ModelSpec,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(opts.t_end > 0.0) || !opts.t_end.is_finite() {
        return Err(Error::Config(format!("t_end must be positive, got {}", opts.t_end)));
    }
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {}", opts.dt)));
    }
    if opts.stride == 0 || opts.snapshot_stride == Some(0) {
        return Err(Error::Config("strides must be at least 1".into()));
    }
    if opts.integrator == Integrator::Leapfrog && !model.is_separable() {
        return Err(Error::NonSeparable);
    }
    model.check_state(state)?;
    if !state.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }

    let steps = {
        let n = opts.t_end / opts.dt;
        let rounded = n.round();
        if (n - rounded).abs() <= 1e-9 * n.max(1.0) {
            (rounded as usize).max(1)
        } else {
            n.ceil() as usize
        }
    };
    let t0 = state.t;
    let e0 = model.energy(state)?;
    let c0 = compute_tilde_c(state)?;
    let parts0: Vec<ComplexMatrix> = state
        .q
        .iter()
        .zip(&state.p)
        .map(|(q, p)| pair_charge(q, p))
        .collect::<Result<_>>()?;
    let e_scale = if e0.norm() > 0.0 { e0.norm() } else { 1.0 };

    let mut report = ConservationReport {
        energy_initial: e0,
        max_energy_drift: 0.0,
        max_relative_energy_drift: 0.0,
        max_tilde_c_drift: 0.0,
        max_dof_drift: alloc::vec![0.0; state.dofs()],
        max_hermiticity_defect: hermiticity_defect(state),
        unitary_invariant: model.is_unitary_invariant(),
        steps,
    };
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();

    let mut record = |s: &PhaseSpaceState,
                      report: &mut ConservationReport,
                      keep: bool,
                      snap: bool|
     -> Result<()> {
        let e = model.energy(s)?;
        let c = compute_tilde_c(s)?;
        let drift_e = (e - e0).norm();
        let drift_c = (&c - &c0).frobenius_norm();
        let mut dof_drift = Vec::with_capacity(s.dofs());
        for (k, (q, p)) in s.q.iter().zip(&s.p).enumerate() {
            let d = (&pair_charge(q, p)? - &parts0[k]).frobenius_norm();
            report.max_dof_drift[k] = report.max_dof_drift[k].max(d);
            dof_drift.push(d);
        }
        report.max_energy_drift = report.max_energy_drift.max(drift_e);
        report.max_relative_energy_drift = report.max_energy_drift / e_scale;
        report.max_tilde_c_drift = report.max_tilde_c_drift.max(drift_c);
        report.max_hermiticity_defect = report.max_hermiticity_defect.max(hermiticity_defect(s));
        if keep {
            samples.push(Sample {
                t: s.t,
                tr_h: e,
                re_tr_c2: c.trace_of_product(&c).re,
                dof_drift,
                tilde_c_drift: drift_c,
            });
        }
        if snap {
            snapshots.push(s.clone());
        }
        Ok(())
    };

    record(state, &mut report, true, opts.snapshot_stride.is_some())?;
    let mut current = state.clone();
    for k in 1..=steps {
        let h = if k == steps {
            t0 + opts.t_end - current.t
        } else {
            opts.dt
        };
        current = match opts.integrator {
            Integrator::Rk4 => step_rk4(&current, model, h)?,
            Integrator::Leapfrog => step_leapfrog(&current, model, h)?,
        };
        if k == steps {
            current.t = t0 + opts.t_end;
        }
        if !current.is_finite() {
            return Err(Error::Numerical {
                t: current.t,
                what: format!("non-finite state after step {k}"),
            });
        }
        let keep = k % opts.stride == 0 || k == steps;
        let snap = opts
            .snapshot_stride
            .is_some_and(|s| k % s == 0 || k == steps);
        record(&current, &mut report, keep, snap)?;
        if !report.max_energy_drift.is_finite() {
            return Err(Error::Numerical {
                t: current.t,
                what: "trace energy became non-finite".into(),
            });
        }
    }
    Ok(Trajectory {
        samples,
        snapshots,
        final_state: current,
        report,
    })
}
