// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdiv_cli::{emit, parse_scenario, run, simulate, Analysis, CliError, Scenario};

/// Divisibility and information-flow analysis of qubit dynamical maps.
#[derive(Debug, Parser)]
#[command(name = "qdiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the trajectory and write trajectory.csv.
    Simulate(Common),
    /// Image profile and CP/P-divisibility classification.
    Divisibility(Common),
    /// Randomized backflow hunt.
    Backflow(Common),
    /// Two-state and projector certificates.
    Certify(Common),
    /// Every analysis listed in the scenario (all of them by default).
    All(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "qdiv-out")]
    out: PathBuf,
    /// Sampler seed; overrides QDIV_SEED and the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative singular-value cut for rank decisions.
    #[arg(long)]
    tol_rank: Option<f64>,
    /// Backflow threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

fn load(c: &Common) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(&c.scenario)
        .map_err(|e| CliError::Setting(format!("cannot read {}: {e}", c.scenario.display())))?;
    let mut s = parse_scenario(&text)?;
    let env_seed = match std::env::var("QDIV_SEED") {
        Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| CliError::Setting(format!("QDIV_SEED=`{v}` is not a u64")))?),
        Err(_) => None,
    };
    if let Some(seed) = c.seed.or(env_seed) {
        s.sampler.seed = seed;
    }
    for (flag, value, slot) in [
        ("--tol-rank", c.tol_rank, &mut s.tolerances.rank),
        ("--threshold", c.threshold, &mut s.tolerances.backflow),
    ] {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Setting(format!("{flag} must be positive, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(s)
}

fn execute(cmd: Command) -> Result<bool, CliError> {
    let (common, analyses) = match &cmd {
        Command::Simulate(c) => (c, None),
        Command::Divisibility(c) => (c, Some(&[Analysis::ImageProfile, Analysis::Divisibility][..])),
        Command::Backflow(c) => (c, Some(&[Analysis::Backflow][..])),
        Command::Certify(c) => (c, Some(&[Analysis::Certify][..])),
        Command::All(c) => (c, Some(&[][..])),
    };
    let scenario = load(common)?;
    let record = match analyses {
        None => simulate(&scenario)?,
        Some([]) => run(&scenario)?,
        Some(list) => run(&scenario.with_analyses(list))?,
    };
    let written = emit(&record, &common.out)?;
    print!("{}", qdiv_cli::emit::report_text(&record));
    eprintln!("wrote {} file(s) to {}", written.len(), common.out.display());
    Ok(record.has_error_verdict())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
