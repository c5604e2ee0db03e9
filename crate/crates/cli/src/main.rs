//! `mintime` command line.
//!
//! Exit status: 0 when every stage ran and every declared assertion held,
//! 1 on a stage failure or failed assertion, 2 when the scenario is invalid.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use mintime_cli::{run_scenario, Scenario, Stage};

#[derive(Parser)]
#[command(
    name = "mintime",
    version,
    about = "Minimum time functions of driftless control systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the minimum time function (and cross-check the schemes if requested).
    Solve(Common),
    /// Reachable sets, characteristic points and Petrov margins.
    Char(Common),
    /// Integrate the scenario's extremal and shooting jobs.
    Extremal(Common),
    /// Symplectic test of random characteristic points, plus bracket ranks.
    SymplecticScan(Common),
    /// Lipschitz quotients, refinement study and Hölder fits.
    Analyze(Common),
    /// Every stage declared by the scenario.
    Run(Common),
}

impl Command {
    fn split(&self) -> (&Common, Option<&'static [Stage]>) {
        match self {
            Command::Solve(c) => (c, Some(&[Stage::Solve, Stage::CrossCheck])),
            Command::Char(c) => (c, Some(&[Stage::Solve, Stage::Reachable, Stage::Char, Stage::Petrov])),
            Command::Extremal(c) => (c, Some(&[Stage::Extremals])),
            Command::SymplecticScan(c) => (c, Some(&[Stage::SymplecticScan, Stage::Hormander])),
            Command::Analyze(c) => (
                c,
                Some(&[Stage::Solve, Stage::Lipschitz, Stage::Refinement, Stage::Holder]),
            ),
            Command::Run(c) => (c, None),
        }
    }
}

/// Loads the scenario and restricts it to the command's stages; errors here
/// are configuration errors.
fn load(common: &Common, only: Option<&[Stage]>) -> Result<Scenario> {
    let mut scenario = Scenario::load(&common.config)?;
    if let Some(seed) = common.seed {
        scenario.set_seed(seed);
    }
    if let Some(only) = only {
        scenario.stages.retain(|s| only.contains(s));
        if scenario.stages.is_empty() {
            bail!("the scenario declares none of the stages of this command");
        }
        let kept = scenario.stages.clone();
        scenario.assertions.retain(|a| kept.contains(&a.stage()));
    }
    scenario.validate()?;
    Ok(scenario)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, only) = cli.command.split();
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let scenario = match load(common, only) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("invalid scenario: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run_scenario(&scenario, &common.out) {
        Ok((report, dir)) => {
            for s in &report.stages {
                println!(
                    "{:<16} {}",
                    s.stage.to_string(),
                    serde_json::to_string(&s.status).unwrap_or_default()
                );
            }
            for a in &report.assertions {
                println!(
                    "{} {:?}: {}",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.assertion,
                    a.detail
                );
            }
            println!("report: {}", dir.join("report.json").display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
