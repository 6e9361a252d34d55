use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracedyn::checks::{run_suite, Suite, DEFAULT_SEED};
use tracedyn::{execute, with_threads, write_artifacts, Artifact, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "tracedyn", version, about = "Trace dynamics workbench")]
struct Cli {
    /// Directory that receives the declared outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for chains and sweep points (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replace the scenario seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario.
    Run { scenario: PathBuf },
    /// Run an invariant suite: algebra, derivative, conservation, equivalence,
    /// liouville, ensemble, gravastar or weyl.
    Check {
        suite: String,
        /// Also write the report as JSON into the output directory.
        #[arg(long)]
        json: bool,
    },
}

fn check(suite: &str, json: bool, opts: &RunOptions) -> Result<(), RunError> {
    let suite = Suite::from_name(suite)?;
    let seed = opts.seed_override.unwrap_or(DEFAULT_SEED);
    let report = with_threads(opts.threads, || run_suite(suite, seed))?;
    print!("{report}");
    if json {
        let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| RunError::Io(e.to_string()))?;
        bytes.push(b'\n');
        let name = format!("check_{}.json", suite.name());
        write_artifacts(&opts.out_dir, &[Artifact { name, bytes }])?;
    }
    if report.passed() {
        Ok(())
    } else {
        let n = report.failures().count();
        Err(RunError::Invariant(format!("{n} check(s) failed in suite {}", suite.name())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out_dir: cli.out_dir,
        threads: cli.threads,
        seed_override: cli.seed_override,
    };
    let result = match &cli.command {
        Command::Run { scenario } => execute(scenario, &opts).map(|out| {
            for line in &out.log {
                println!("{line}");
            }
            for a in &out.artifacts {
                println!("wrote {}", opts.out_dir.join(&a.name).display());
            }
        }),
        Command::Check { suite, json } => check(suite, *json, &opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
