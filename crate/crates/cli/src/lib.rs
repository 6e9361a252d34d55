//! Scenario runner and invariant suites for `tracedyn-core`.
//!
//! A run loads a JSON scenario, executes it entirely in memory, and only then
//! writes the declared outputs. Errors map to fixed exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O failure while writing outputs |
//! | 2 | configuration error (nothing written) |
//! | 3 | numerical failure (nothing written) |
//! | 4 | invariant violation (outputs written, violations on stderr) |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub mod checks;
pub mod report;
pub mod runner;
pub mod scenario;

pub use runner::{run_scenario, Artifact, RunOutcome};
pub use scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Invariant(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Invariant(_) => 4,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Invariant(m) => write!(f, "invariant violation: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<tracedyn_core::Error> for RunError {
    fn from(e: tracedyn_core::Error) -> Self {
        match e {
            tracedyn_core::Error::Asymmetric { .. } => RunError::Invariant(e.to_string()),
            e if e.is_config() => RunError::Config(e.to_string()),
            e => RunError::Numerical(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, RunError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(RunError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| RunError::Config(format!("thread pool: {e}"))),
    }
}

/// Loads, runs and writes one scenario file. Returns the outcome on success or an
/// invariant violation; on any other error nothing is written.
pub fn execute(path: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = opts.seed_override {
        scenario.set_seed(seed);
    }
    let outcome = with_threads(opts.threads, || run_scenario(&scenario))??;
    write_artifacts(&opts.out_dir, &outcome.artifacts)?;
    if !outcome.violations.is_empty() {
        return Err(RunError::Invariant(outcome.violations.join("; ")));
    }
    Ok(outcome)
}

/// Writes every artifact to a temporary sibling first and renames once all writes
/// have succeeded.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<(), RunError> {
    let io = |what: &str, p: &Path, e: std::io::Error| {
        RunError::Io(format!("{what} {}: {e}", p.display()))
    };
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for a in artifacts {
        let dest = out_dir.join(&a.name);
        if let Some(parent) = dest.parent() {
            if let Err(e) = fs::create_dir_all(parent) {
                cleanup(&staged);
                return Err(io("cannot create", parent, e));
            }
        }
        let mut tmp = dest.clone().into_os_string();
        tmp.push(format!(".partial-{}", std::process::id()));
        let tmp = PathBuf::from(tmp);
        if let Err(e) = fs::write(&tmp, &a.bytes) {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(io("cannot write", &tmp, e));
        }
        staged.push((tmp, dest));
    }
    for (tmp, dest) in &staged {
        fs::rename(tmp, dest).map_err(|e| io("cannot rename to", dest, e))?;
    }
    Ok(())
}
