use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;
use tracedyn::checks::{run_suite, Suite, DEFAULT_SEED};
use tracedyn::{execute, run_scenario, RunError, RunOptions, Scenario};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, body).unwrap();
    p
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out_dir: dir.to_path_buf(),
        ..RunOptions::default()
    }
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

const HARMONIC_SMALL: &str = r#"{
  "kind": "evolve",
  "seed": 3,
  "model": { "hamiltonian": "0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", "dofs": 1, "N": 3 },
  "t_end": 1.0,
  "dt": 0.001,
  "integrator": "rk4",
  "sample_every": 50,
  "outputs": { "series": "s.csv", "summary": "s.json" }
}"#;

#[test]
fn every_bundled_scenario_parses() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")).unwrap() {
        let p = entry.unwrap().path();
        Scenario::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let body = HARMONIC_SMALL.replace("\"dt\"", "\"time_step\"");
    let err = Scenario::from_json(&body).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");

    let body = HARMONIC_SMALL.replace("\"seed\": 3,", "\"seed\": 3, \"colour\": 1,");
    assert!(matches!(Scenario::from_json(&body), Err(RunError::Config(_))));
}

#[test]
fn missing_dimension_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let body = HARMONIC_SMALL.replace(", \"N\": 3", "");
    let p = write_scenario(dir.path(), &body);
    let err = execute(&p, &opts(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    assert_eq!(files_in(dir.path()), vec!["scenario.json".to_string()]);
}

#[test]
fn escaping_output_paths_are_rejected() {
    let body = HARMONIC_SMALL.replace("\"s.csv\"", "\"../s.csv\"");
    assert!(matches!(Scenario::from_json(&body), Err(RunError::Config(_))));
    let body = HARMONIC_SMALL.replace("\"s.json\"", "\"s.csv\"");
    assert!(matches!(Scenario::from_json(&body), Err(RunError::Config(_))));
}

#[test]
fn harmonic_series_is_monotone_and_conserving() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(dir.path(), HARMONIC_SMALL);
    execute(&p, &opts(dir.path())).unwrap();

    let mut rdr = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "t");
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (it, ih) = (col("t"), col("re_tr_h"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 10);
    let h0: f64 = rows[0][ih].parse().unwrap();
    let mut last_t = f64::NEG_INFINITY;
    for r in &rows {
        let t: f64 = r[it].parse().unwrap();
        assert!(t > last_t);
        last_t = t;
        let h: f64 = r[ih].parse().unwrap();
        assert!(((h - h0) / h0).abs() <= 1e-8);
    }
    assert!((last_t - 1.0).abs() < 1e-9);

    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("s.json")).unwrap()).unwrap();
    assert!(summary["max_relative_energy_drift"].as_f64().unwrap() <= 1e-8);
    assert!(summary["violations"].as_array().unwrap().is_empty());
}

#[test]
fn tolerance_breach_writes_outputs_and_reports_invariant() {
    let dir = TempDir::new().unwrap();
    let body = HARMONIC_SMALL.replace(
        "\"sample_every\": 50,",
        "\"sample_every\": 50, \"tolerances\": { \"energy_drift\": 0.0 },",
    )
    .replace("\"dt\": 0.001", "\"dt\": 0.1");
    let p = write_scenario(dir.path(), &body);
    let err = execute(&p, &opts(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
    assert!(dir.path().join("s.csv").exists());
    assert!(dir.path().join("s.json").exists());
}

#[test]
fn ieff_is_a_complex_structure_with_balanced_spectrum() {
    let body = r#"{
      "kind": "ensemble",
      "seed": 5,
      "model": { "hamiltonian": "0.5*Tr(p1*p1) + 0.5*Tr(q1*q1)", "dofs": 1, "N": 4 },
      "tau": 1.0,
      "lambda": 0.2,
      "chains": 2,
      "sweeps": 4000,
      "outputs": { "result": "r.json" }
    }"#;
    let out = run_scenario(&Scenario::from_json(body).unwrap()).unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    let doc: Value = serde_json::from_slice(&out.artifacts[0].bytes).unwrap();
    let ieff = &doc["ieff"];
    for e in ieff["eigenvalues_im"].as_array().unwrap() {
        assert!((e.as_f64().unwrap().abs() - 1.0).abs() < 1e-8);
    }
    assert_eq!(ieff["multiplicity_plus_i"], 2);
    assert_eq!(ieff["multiplicity_minus_i"], 2);
    assert!(ieff["checks"]["square"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn sweep_failures_stay_in_their_rows() {
    let body = r#"{
      "kind": "gravastar",
      "seed": 1,
      "eos": { "p_jump": 1.0, "epsilon": 0.01, "p_surface": 1e-6 },
      "sweep": { "p_center": [0.5, 1000.0, 1.05] },
      "convergence_check": false,
      "outputs": { "sweep": "sw.csv" }
    }"#;
    let out = run_scenario(&Scenario::from_json(body).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_reader(&out.artifacts[0].bytes[..]);
    let status: Vec<String> = rdr.records().map(|r| r.unwrap()[4].to_string()).collect();
    assert_eq!(status, ["ok", "failed", "ok"]);
}

#[test]
fn artifacts_are_identical_across_runs_and_thread_counts() {
    for name in ["ieff_extract.json", "gravastar_sweep.json", "harmonic_evolve.json"] {
        let mut runs = Vec::new();
        for threads in [Some(1), Some(3), None] {
            let dir = TempDir::new().unwrap();
            let o = RunOptions {
                out_dir: dir.path().to_path_buf(),
                threads,
                seed_override: None,
            };
            let _ = execute(&scenario_path(name), &o);
            let files: Vec<(String, Vec<u8>)> = files_in(dir.path())
                .into_iter()
                .map(|f| {
                    let bytes = fs::read(dir.path().join(&f)).unwrap();
                    (f, bytes)
                })
                .collect();
            assert!(!files.is_empty(), "{name}");
            runs.push(files);
        }
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{name} differs between runs");
    }
}

#[test]
fn seed_override_changes_the_sample() {
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    let p = write_scenario(dir_a.path(), HARMONIC_SMALL);
    execute(&p, &opts(dir_a.path())).unwrap();
    let o = RunOptions {
        out_dir: dir_b.path().to_path_buf(),
        threads: None,
        seed_override: Some(4),
    };
    execute(&p, &o).unwrap();
    assert_ne!(
        fs::read(dir_a.path().join("s.csv")).unwrap(),
        fs::read(dir_b.path().join("s.csv")).unwrap()
    );
}

#[test]
fn fast_suites_pass() {
    for suite in [Suite::Algebra, Suite::Derivative, Suite::Equivalence, Suite::Liouville, Suite::Weyl] {
        let report = run_suite(suite, DEFAULT_SEED);
        assert!(report.passed(), "{report}");
    }
}

#[test]
fn unknown_suite_is_config() {
    assert_eq!(Suite::from_name("nope").unwrap_err().exit_code(), 2);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tracedyn"))
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();

    let ok = write_scenario(dir.path(), HARMONIC_SMALL);
    let st = bin().arg("--out-dir").arg(dir.path()).arg("run").arg(&ok).status().unwrap();
    assert_eq!(st.code(), Some(0));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"kind\": \"evolve\" ").unwrap();
    let st = bin().arg("run").arg(&bad).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let missing = dir.path().join("absent.json");
    let st = bin().arg("run").arg(&missing).status().unwrap();
    assert_ne!(st.code(), Some(0));

    let out = TempDir::new().unwrap();
    let st = bin()
        .arg("--out-dir")
        .arg(out.path())
        .arg("run")
        .arg(scenario_path("gravastar_reference.json"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
    assert!(files_in(out.path()).is_empty());

    let o = bin().args(["check", "algebra"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));

    let st = bin().args(["check", "bogus"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}
