use rayon::prelude::*;
use serde_json::{json, Value};
use tracedyn_core::dynamics::{evolve, EvolveOptions, ModelSpec};
use tracedyn_core::ensemble::{
    check_weight, extract_ieff, merge_chains, run_chain, EnsembleParams, EnsembleResult,
};
use tracedyn_core::gravastar::{integrate_star, sweep_grid, sweep_point, SweepRow, TovOptions, TovSolution};
use tracedyn_core::ComplexMatrix;

use crate::checks::{ieff_eigenvalues, random_state, run_suite, weyl_run, Suite};
use crate::scenario::{
    CheckScenario, EnsembleScenario, EvolveScenario, GravastarScenario, MatrixSpec, Scenario,
};
use crate::RunError;

/// One output file, fully rendered in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub artifacts: Vec<Artifact>,
    /// Invariant checks that failed; the artifacts are still complete.
    pub violations: Vec<String>,
    /// Human-readable progress and warnings.
    pub log: Vec<String>,
}

impl RunOutcome {
    fn push_json(&mut self, name: &str, value: &Value) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| RunError::Io(format!("cannot serialize {name}: {e}")))?;
        bytes.push(b'\n');
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes,
        });
        Ok(())
    }

    fn push_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| RunError::Io(format!("cannot render {name}: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| RunError::Io(format!("cannot render {name}: {e}")))?;
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes,
        });
        Ok(())
    }

    fn require(&mut self, what: &str, measured: f64, ok: bool, bound: &str) {
        if !ok {
            self.violations.push(format!("{what} = {measured:e} (required {bound})"));
        }
    }
}

/// Executes a scenario without touching the file system.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome, RunError> {
    scenario.validate()?;
    match scenario {
        Scenario::Evolve(s) => run_evolve(s),
        Scenario::Ensemble(s) => run_ensemble_scenario(s),
        Scenario::Gravastar(s) => run_gravastar(s),
        Scenario::Check(s) => run_check(s),
    }
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    serde_json::to_value(MatrixSpec::from_matrix(m)).expect("plain numbers")
}

fn run_evolve(s: &EvolveScenario) -> Result<RunOutcome, RunError> {
    let model = s.model.build()?;
    let state = random_state(s.seed, model.dofs(), model.dim(), s.initial.scale);
    let opts = EvolveOptions::new(s.t_end, s.dt, s.integrator.into()).with_stride(s.sample_every);
    let tr = evolve(&state, &model, &opts)?;
    let rep = &tr.report;

    let mut out = RunOutcome::default();
    let mut header: Vec<String> = ["t", "re_tr_h", "im_tr_h", "re_tr_c2", "tilde_c_drift"]
        .iter()
        .map(|h| h.to_string())
        .collect();
    header.extend((1..=model.dofs()).map(|r| format!("pair_drift_{r}")));
    let rows: Vec<Vec<String>> = tr
        .samples
        .iter()
        .map(|x| {
            let mut row = vec![
                x.t.to_string(),
                x.tr_h.re.to_string(),
                x.tr_h.im.to_string(),
                x.re_tr_c2.to_string(),
                x.tilde_c_drift.to_string(),
            ];
            row.extend(x.dof_drift.iter().map(f64::to_string));
            row
        })
        .collect();
    out.push_csv(&s.outputs.series, &header, &rows)?;

    let tol = &s.tolerances;
    if let Some(b) = tol.energy_drift {
        out.require("relative TrH drift", rep.max_relative_energy_drift, rep.max_relative_energy_drift <= b, &format!("<= {b:e}"));
    }
    if let Some(b) = tol.tilde_c_drift {
        out.require("C̃ drift", rep.max_tilde_c_drift, rep.max_tilde_c_drift <= b, &format!("<= {b:e}"));
    }
    if let Some(b) = tol.hermiticity {
        out.require("hermiticity defect", rep.max_hermiticity_defect, rep.max_hermiticity_defect <= b, &format!("<= {b:e}"));
    }
    let summary = json!({
        "kind": "evolve",
        "seed": s.seed,
        "hamiltonian": model.hamiltonian().to_string(),
        "N": model.dim(),
        "dofs": model.dofs(),
        "integrator": s.integrator,
        "t_end": s.t_end,
        "dt": s.dt,
        "steps": rep.steps,
        "final_t": tr.final_state.t,
        "energy_initial": [rep.energy_initial.re, rep.energy_initial.im],
        "max_energy_drift": rep.max_energy_drift,
        "max_relative_energy_drift": rep.max_relative_energy_drift,
        "max_tilde_c_drift": rep.max_tilde_c_drift,
        "max_pair_drift": rep.max_dof_drift,
        "max_hermiticity_defect": rep.max_hermiticity_defect,
        "unitary_invariant": rep.unitary_invariant,
        "tolerances": tol,
        "violations": out.violations,
    });
    out.push_json(&s.outputs.summary, &summary)?;
    out.log.push(format!(
        "evolved {} steps; relative TrH drift {:.3e}, C̃ drift {:.3e}",
        rep.steps, rep.max_relative_energy_drift, rep.max_tilde_c_drift
    ));
    Ok(out)
}

/// Weight check, chains in parallel, ordered merge. Identical to the sequential
/// reduction because every chain owns its random stream.
pub fn run_ensemble_parallel(model: &ModelSpec, params: &EnsembleParams) -> Result<EnsembleResult, RunError> {
    params.validate(model)?;
    check_weight(model, params)?;
    let chains = (0..params.chains)
        .into_par_iter()
        .map(|c| run_chain(model, params, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_chains(model.dim(), &chains)?)
}

fn run_ensemble_scenario(s: &EnsembleScenario) -> Result<RunOutcome, RunError> {
    let model = s.model.build()?;
    let n = model.dim();
    let mut params = EnsembleParams::new(n, s.tau, s.lambda, s.seed);
    if let Some(l) = &s.lambda_tilde {
        params.lambda_tilde = l.to_matrix(n)?;
    }
    if let Some(c) = s.chains {
        params.chains = c;
    }
    if let Some(v) = s.sweeps {
        params.sweeps = v;
    }
    if let Some(v) = s.burn_in {
        params.burn_in = v;
    }
    if let Some(v) = s.thin {
        params.thin = v;
    }
    if let Some(v) = s.proposal_scale {
        params.proposal_scale = v;
    }
    let res = run_ensemble_parallel(&model, &params)?;

    let mut out = RunOutcome::default();
    out.log.extend(res.warnings.iter().cloned());
    let mut doc = json!({
        "kind": "ensemble",
        "seed": s.seed,
        "hamiltonian": model.hamiltonian().to_string(),
        "N": n,
        "tau": params.tau,
        "lambda_tilde": matrix_json(&params.lambda_tilde),
        "chains": res.chains,
        "samples": res.samples,
        "mean_trace_h": res.mean_trace_h,
        "stderr_trace_h": res.stderr_trace_h,
        "avg_c": matrix_json(&res.avg_c),
        "avg_c_stderr": matrix_json(&res.avg_c_stderr),
        "acceptance_rate": res.acceptance_rate,
        "ess_trace_h": res.ess_trace_h,
        "max_antihermitian_sigma": res.max_antihermitian_sigma,
        "warnings": res.warnings,
    });
    if s.extract_ieff {
        let dec = extract_ieff(&res.avg_c, Some(&res.avg_c_stderr))?;
        let c = dec.checks();
        for (what, v, b) in [
            ("|i_eff² + 1|", c.square, 1e-6),
            ("|i_eff† + i_eff|", c.antihermitian, 1e-8),
            ("|[i_eff, D]|", c.commutator, 1e-8),
        ] {
            out.require(what, v, v <= b, &format!("<= {b:e}"));
        }
        if n % 2 == 0 {
            out.require("|Tr i_eff|", c.trace, c.trace <= 1e-6, "<= 1e-6");
        }
        if dec.defect > 0 {
            out.log.push(format!(
                "D has {} direction(s) below the cutoff; i_eff vanishes there",
                dec.defect
            ));
        }
        let mut eig = ieff_eigenvalues(&dec.i_eff);
        eig.sort_by(f64::total_cmp);
        doc["ieff"] = json!({
            "i_eff": matrix_json(&dec.i_eff),
            "eigenvalues_im": eig,
            "multiplicity_plus_i": dec.multiplicity.0,
            "multiplicity_minus_i": dec.multiplicity.1,
            "d": matrix_json(&dec.d),
            "d_eigenvalues": dec.d_eigenvalues,
            "d_spread": dec.d_spread,
            "hbar": dec.hbar,
            "defect": dec.defect,
            "residual": dec.residual,
            "checks": {
                "square": c.square,
                "antihermitian": c.antihermitian,
                "commutator": c.commutator,
                "trace": c.trace,
            },
        });
    }
    doc["violations"] = json!(out.violations);
    out.push_json(&s.outputs.result, &doc)?;
    out.log.push(format!(
        "{} samples over {} chains; <TrH> = {:.5} ± {:.5}",
        res.samples, res.chains, res.mean_trace_h, res.stderr_trace_h
    ));
    Ok(out)
}

fn tov_options(s: &GravastarScenario) -> TovOptions {
    TovOptions {
        rtol: s.rtol,
        r_max: s.r_max,
        ..TovOptions::default()
    }
}

fn profile_rows(sol: &TovSolution) -> Vec<Vec<String>> {
    let row = |r: f64, m: f64, nu: f64, p: f64, rho: f64| {
        [r, m, nu, p, rho, 1.0 - 2.0 * m / r].iter().map(f64::to_string).collect()
    };
    let mut rows: Vec<Vec<String>> = (0..sol.r.len())
        .map(|i| row(sol.r[i], sol.m[i], sol.nu[i], sol.p[i], sol.rho[i]))
        .collect();
    // the first exterior point repeats the surface
    for (r, nu) in sol.exterior.r.iter().zip(&sol.exterior.nu).skip(1) {
        rows.push(row(*r, sol.m_total, *nu, 0.0, 0.0));
    }
    rows
}

fn run_gravastar(s: &GravastarScenario) -> Result<RunOutcome, RunError> {
    let mut out = RunOutcome::default();
    let opts = tov_options(s);
    let eos = s.eos.spec();
    if let Some(sweep) = &s.sweep {
        let eps: Vec<f64> = if sweep.epsilon.is_empty() {
            vec![eos.epsilon]
        } else {
            sweep.epsilon.clone()
        };
        let variants: Vec<_> = eps
            .iter()
            .map(|&e| tracedyn_core::gravastar::EosSpec { epsilon: e, ..eos })
            .collect();
        let points = sweep_grid(&sweep.p_center, &variants);
        let rows: Vec<SweepRow> = points.par_iter().map(|&p| sweep_point(p, &opts)).collect();
        let header: Vec<String> = [
            "p_center", "p_jump", "epsilon", "p_surface", "status", "m_total", "r_surface",
            "min_compactness", "r_jump", "exterior_deviation", "error",
        ]
        .iter()
        .map(|h| h.to_string())
        .collect();
        let mut failed = 0;
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|row| {
                let p = row.point;
                let mut cells = vec![
                    p.p_center.to_string(),
                    p.eos.p_jump.to_string(),
                    p.eos.epsilon.to_string(),
                    p.eos.p_surface.to_string(),
                ];
                match &row.outcome {
                    Ok(sum) => cells.extend([
                        "ok".to_string(),
                        sum.m_total.to_string(),
                        sum.r_surface.to_string(),
                        sum.min_compactness.to_string(),
                        sum.r_jump.map_or(String::new(), |r| r.to_string()),
                        sum.exterior_deviation.to_string(),
                        String::new(),
                    ]),
                    Err(e) => {
                        failed += 1;
                        cells.extend(["failed".to_string()]);
                        cells.extend(std::iter::repeat_n(String::new(), 5));
                        cells.push(e.to_string());
                    }
                }
                cells
            })
            .collect();
        out.push_csv(s.outputs.sweep.as_deref().expect("validated"), &header, &table)?;
        if let Some(name) = &s.outputs.summary {
            out.push_json(
                name,
                &json!({
                    "kind": "gravastar_sweep",
                    "seed": s.seed,
                    "points": rows.len(),
                    "failed": failed,
                    "cosmological_constant": s.cosmological_constant,
                }),
            )?;
        }
        out.log.push(format!("sweep of {} points, {failed} flagged", rows.len()));
        return Ok(out);
    }

    let p_center = s.p_center.expect("validated");
    let sol = integrate_star(p_center, &eos, &opts)?;
    out.require("min(1 - 2m/r)", sol.min_compactness, sol.min_compactness > 0.0, "> 0");
    let dev = sol.exterior.max_relative_deviation;
    out.require("exterior Schwarzschild deviation", dev, dev <= 1e-6, "<= 1e-6");
    let mut doc = json!({
        "kind": "gravastar",
        "seed": s.seed,
        "eos": s.eos,
        "p_center": p_center,
        "rtol": s.rtol,
        "cosmological_constant": s.cosmological_constant,
        "r_surface": sol.r_surface,
        "m_total": sol.m_total,
        "min_compactness": sol.min_compactness,
        "exterior_max_relative_deviation": dev,
        "exterior_r_max": sol.exterior.r.last(),
        "accepted_steps": sol.accepted_steps,
        "rejected_steps": sol.rejected_steps,
        "jump": sol.jump.map(|j| json!({
            "r": j.r,
            "m": j.m,
            "p_residual": j.p_residual,
            "rho_inside": j.rho_inside,
            "rho_outside": j.rho_outside,
        })),
    });
    if s.convergence_check {
        let half = TovOptions {
            rtol: opts.rtol / 2.0,
            ..opts
        };
        let h = integrate_star(p_center, &eos, &half)?;
        let rel = (h.m_total - sol.m_total).abs() / sol.m_total.abs();
        out.require("M_total change under rtol/2", rel, rel < 1e-8, "< 1e-8");
        doc["m_total_rtol_half_change"] = json!(rel);
    }
    if let Some(w) = &s.weyl {
        let run = weyl_run(&sol, w.samples, w.lambda_min, w.lambda_max, s.seed)?;
        out.require("Weyl integrand deviation", run.deviation, run.deviation <= 1e-12, "<= 1e-12");
        out.require("control density deviation", run.control, run.control > 1e-3, "> 1e-3");
        doc["weyl"] = json!({
            "samples": run.samples,
            "lambda_min": w.lambda_min,
            "lambda_max": w.lambda_max,
            "identity_deviation": run.identity,
            "max_relative_deviation": run.deviation,
            "control_max_relative_deviation": run.control,
        });
    }
    doc["violations"] = json!(out.violations);
    if let Some(name) = &s.outputs.profile {
        let header: Vec<String> = ["r", "m", "nu", "p", "rho", "one_minus_2m_over_r"]
            .iter()
            .map(|h| h.to_string())
            .collect();
        out.push_csv(name, &header, &profile_rows(&sol))?;
    }
    out.push_json(s.outputs.summary.as_deref().expect("validated"), &doc)?;
    out.log.push(format!(
        "R = {:.6}, M = {:.6}, min(1 - 2m/r) = {:.3e}",
        sol.r_surface, sol.m_total, sol.min_compactness
    ));
    Ok(out)
}

fn run_check(s: &CheckScenario) -> Result<RunOutcome, RunError> {
    let suite = Suite::from_name(&s.suite)?;
    let report = run_suite(suite, s.seed);
    let mut out = RunOutcome::default();
    out.log.extend(report.items.iter().map(|i| i.to_string()));
    out.violations.extend(report.failures().map(|i| i.to_string()));
    if let Some(name) = &s.outputs.report {
        let value = serde_json::to_value(&report).map_err(|e| RunError::Io(e.to_string()))?;
        out.push_json(name, &value)?;
    }
    Ok(out)
}
