//! Scenario files: one JSON object per run, tagged by `kind`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tracedyn_core::dynamics::{Integrator, ModelSpec};
use tracedyn_core::gravastar::EosSpec;
use tracedyn_core::poly::{parse, SymbolTable};
use tracedyn_core::{Complex64, ComplexMatrix};

use crate::RunError;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Evolve(EvolveScenario),
    Ensemble(EnsembleScenario),
    Gravastar(GravastarScenario),
    Check(CheckScenario),
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        match self {
            Scenario::Evolve(s) => s.seed,
            Scenario::Ensemble(s) => s.seed,
            Scenario::Gravastar(s) => s.seed,
            Scenario::Check(s) => s.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Scenario::Evolve(s) => s.seed = seed,
            Scenario::Ensemble(s) => s.seed = seed,
            Scenario::Gravastar(s) => s.seed = seed,
            Scenario::Check(s) => s.seed = seed,
        }
    }

    /// Output file names declared by the scenario, in a fixed order.
    pub fn outputs(&self) -> Vec<&str> {
        match self {
            Scenario::Evolve(s) => vec![s.outputs.series.as_str(), s.outputs.summary.as_str()],
            Scenario::Ensemble(s) => vec![s.outputs.result.as_str()],
            Scenario::Gravastar(s) => [&s.outputs.summary, &s.outputs.profile, &s.outputs.sweep]
                .into_iter()
                .flatten()
                .map(String::as_str)
                .collect(),
            Scenario::Check(s) => s.outputs.report.iter().map(String::as_str).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Scenario, RunError> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| RunError::Config(format!("invalid scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let outs = self.outputs();
        for name in &outs {
            let p = Path::new(name);
            let plain = !name.is_empty()
                && p.is_relative()
                && p.components().all(|c| matches!(c, std::path::Component::Normal(_)));
            if !plain {
                return Err(RunError::Config(format!(
                    "output `{name}` must be a relative path without `..`"
                )));
            }
        }
        for (i, a) in outs.iter().enumerate() {
            if outs[..i].contains(a) {
                return Err(RunError::Config(format!("output `{a}` declared twice")));
            }
        }
        match self {
            Scenario::Evolve(s) => s.validate(),
            Scenario::Ensemble(s) => s.validate(),
            Scenario::Gravastar(s) => s.validate(),
            Scenario::Check(s) => s.validate(),
        }
    }
}

/// Row-major real and imaginary parts; `im` may be omitted for real matrices.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_matrix(&self, n: usize) -> Result<ComplexMatrix, RunError> {
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !square(&self.re) || !self.im.as_ref().is_none_or(square) {
            return Err(RunError::Config(format!("matrix must be {n}×{n}")));
        }
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
                Complex64::new(self.re[i][j], im)
            })
            .collect();
        ComplexMatrix::new(n, entries, tracedyn_core::Grading::Even).map_err(RunError::from)
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..n)
                .map(|i| (0..n).map(|j| f(m.get(i, j))).collect())
                .collect()
        };
        MatrixSpec {
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Trace Hamiltonian over `q1..qR`, `p1..pR` and the declared constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    /// Trace Lagrangian over `q1..qR`, `v1..vR`; Legendre-transformed before use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    pub dofs: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, MatrixSpec>,
}

impl ModelConfig {
    fn validate(&self) -> Result<(), RunError> {
        if self.hamiltonian.is_some() == self.lagrangian.is_some() {
            return Err(RunError::Config(
                "model needs exactly one of `hamiltonian` and `lagrangian`".into(),
            ));
        }
        if self.n == 0 || self.dofs == 0 {
            return Err(RunError::Config("`N` and `dofs` must be positive".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ModelSpec, RunError> {
        self.validate()?;
        let mut table = if self.lagrangian.is_some() {
            SymbolTable::lagrangian(self.dofs)
        } else {
            SymbolTable::bosonic(self.dofs)
        };
        let mut ids = Vec::new();
        for name in self.constants.keys() {
            ids.push(table.declare_constant(name)?);
        }
        let table = Arc::new(table);
        let mut constants = Vec::new();
        for (id, spec) in ids.into_iter().zip(self.constants.values()) {
            constants.push((id, spec.to_matrix(self.n)?));
        }
        let model = match (&self.hamiltonian, &self.lagrangian) {
            (Some(h), None) => ModelSpec::new(parse(h, table)?, self.n, constants)?,
            (None, Some(l)) => ModelSpec::from_lagrangian(&parse(l, table)?, self.n, constants)?,
            _ => unreachable!("checked in validate"),
        };
        Ok(model)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    #[default]
    Rk4,
    Leapfrog,
}

impl From<IntegratorName> for Integrator {
    fn from(i: IntegratorName) -> Self {
        match i {
            IntegratorName::Rk4 => Integrator::Rk4,
            IntegratorName::Leapfrog => Integrator::Leapfrog,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Random Hermitian initial data drawn from the scenario seed.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Frobenius norm of each initial matrix.
    #[serde(default = "one")]
    pub scale: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { scale: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct EvolveTolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilde_c_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hermiticity: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolveOutputs {
    pub series: String,
    pub summary: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolveScenario {
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub integrator: IntegratorName,
    #[serde(default = "one_usize")]
    pub sample_every: usize,
    #[serde(default)]
    pub tolerances: EvolveTolerances,
    pub outputs: EvolveOutputs,
}

impl EvolveScenario {
    fn validate(&self) -> Result<(), RunError> {
        self.model.validate()?;
        positive("t_end", self.t_end)?;
        positive("dt", self.dt)?;
        positive("initial.scale", self.initial.scale)?;
        if self.sample_every == 0 {
            return Err(RunError::Config("`sample_every` must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleOutputs {
    pub result: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleScenario {
    pub seed: u64,
    pub model: ModelConfig,
    pub tau: f64,
    /// Magnitude of the default diagonal `λ̃`; ignored when `lambda_tilde` is given.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tilde: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_scale: Option<f64>,
    #[serde(default = "yes")]
    pub extract_ieff: bool,
    pub outputs: EnsembleOutputs,
}

fn yes() -> bool {
    true
}

impl EnsembleScenario {
    fn validate(&self) -> Result<(), RunError> {
        self.model.validate()?;
        if self.model.lagrangian.is_some() {
            return Err(RunError::Config("ensemble runs need a Hamiltonian".into()));
        }
        positive("tau", self.tau)?;
        finite("lambda", self.lambda)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EosConfig {
    pub p_jump: f64,
    pub epsilon: f64,
    pub p_surface: f64,
    #[serde(default = "yes")]
    pub jump_enabled: bool,
}

impl EosConfig {
    pub fn spec(&self) -> EosSpec {
        EosSpec {
            p_jump: self.p_jump,
            epsilon: self.epsilon,
            p_surface: self.p_surface,
            jump_enabled: self.jump_enabled,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p_center: Vec<f64>,
    /// Extra interior offsets; the base `eos.epsilon` is used when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeylConfig {
    pub samples: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GravastarOutputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
}

fn default_rtol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GravastarScenario {
    pub seed: u64,
    pub eos: EosConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Carried through to the summary; the solved equations use `Λ = 0`.
    #[serde(default)]
    pub cosmological_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weyl: Option<WeylConfig>,
    #[serde(default = "yes")]
    pub convergence_check: bool,
    pub outputs: GravastarOutputs,
}

impl GravastarScenario {
    fn validate(&self) -> Result<(), RunError> {
        self.eos.spec().validate()?;
        positive("rtol", self.rtol)?;
        finite("cosmological_constant", self.cosmological_constant)?;
        match (&self.p_center, &self.sweep) {
            (Some(p), None) => {
                positive("p_center", *p)?;
                if self.outputs.summary.is_none() {
                    return Err(RunError::Config("single runs need `outputs.summary`".into()));
                }
                if self.outputs.sweep.is_some() {
                    return Err(RunError::Config("`outputs.sweep` needs a `sweep` block".into()));
                }
            }
            (None, Some(s)) => {
                if s.p_center.is_empty() {
                    return Err(RunError::Config("sweep needs at least one p_center".into()));
                }
                for &p in s.p_center.iter().chain(&s.epsilon) {
                    positive("sweep value", p)?;
                }
                if self.outputs.sweep.is_none() || self.outputs.profile.is_some() {
                    return Err(RunError::Config(
                        "sweeps write `outputs.sweep` and no profile".into(),
                    ));
                }
                if self.weyl.is_some() {
                    return Err(RunError::Config("the Weyl check runs on single stars".into()));
                }
            }
            _ => {
                return Err(RunError::Config(
                    "give exactly one of `p_center` and `sweep`".into(),
                ))
            }
        }
        if let Some(w) = &self.weyl {
            if w.samples == 0 || !(w.lambda_min > 0.0 && w.lambda_max >= w.lambda_min) {
                return Err(RunError::Config("Weyl check needs samples and 0 < λ_min ≤ λ_max".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CheckOutputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckScenario {
    pub seed: u64,
    pub suite: String,
    #[serde(default)]
    pub outputs: CheckOutputs,
}

impl CheckScenario {
    fn validate(&self) -> Result<(), RunError> {
        crate::checks::Suite::from_name(&self.suite).map(|_| ())
    }
}

fn positive(name: &str, x: f64) -> Result<(), RunError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(RunError::Config(format!("`{name}` must be positive and finite, got {x}")))
    }
}

fn finite(name: &str, x: f64) -> Result<(), RunError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(RunError::Config(format!("`{name}` must be finite")))
    }
}
