use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entrolab_cli::config::{self, Plan};
use entrolab_cli::output::OutputDir;
use entrolab_cli::suites::{self, Suite};
use entrolab_cli::{run, CliError};

const DEFAULT_OUT: &str = "entrolab-out";

/// Entropy estimates for dynamical systems on compact and non-compact spaces.
#[derive(Parser)]
#[command(name = "entrolab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Random seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured estimators and write reports.
    Estimate { config: PathBuf },
    /// Run an invariant suite with fixed seeds.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Compare metric-based estimates across the configured metrics.
    CompareMetrics { config: PathBuf },
}

fn plan(cli: &Cli, path: &Path) -> Result<(Plan, OutputDir), CliError> {
    let mut cfg = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let root = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let plan = Plan::new(cfg)?;
    Ok((plan, OutputDir::create(root)?))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    match &cli.command {
        Command::Estimate { config } => {
            let (plan, out) = plan(cli, config)?;
            run::estimate(&plan, &out)?;
        }
        Command::CompareMetrics { config } => {
            let (plan, out) = plan(cli, config)?;
            run::compare_metrics(&plan, &out)?;
        }
        Command::Verify { suite } => {
            let report = suites::run(*suite, cli.seed.unwrap_or(0))?;
            println!(
                "{}: {} instances checked, {} checks, {} violations ({:.1} s)",
                report.suite,
                report.instances,
                report.checks,
                report.violations.len(),
                report.seconds
            );
            for v in report.violations.iter().take(20) {
                println!("  violation: {v}");
            }
            if let Some(root) = &cli.out {
                OutputDir::create(root)?.write_json(&format!("verify-{}.json", report.suite), &report)?;
            }
            if !report.passed() {
                return Err(CliError::Failed(format!("{} suite failed", report.suite)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entrolab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
