mod args;
mod commands;
mod manifest;
mod plots;
mod units;
mod validate;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use cre_core::CreError;

use args::{Cli, Command};
use manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    /// A validation check failed.
    CheckFailed,
    Infeasible,
    /// The solver, primal recovery or the oracle cross-check failed.
    SolverFailure,
    /// Bad input, I/O, or a violated contract.
    InputError,
}

impl From<ExitStatus> for ExitCode {
    fn from(s: ExitStatus) -> Self {
        ExitCode::from(match s {
            ExitStatus::Success => 0,
            ExitStatus::CheckFailed => 1,
            ExitStatus::Infeasible => 2,
            ExitStatus::SolverFailure => 3,
            ExitStatus::InputError => 4,
        })
    }
}

fn classify(e: &anyhow::Error) -> ExitStatus {
    match e.downcast_ref::<CreError>() {
        Some(CreError::Infeasible(_)) => ExitStatus::Infeasible,
        Some(CreError::SolverFailure { .. } | CreError::RecoveryFailure(_) | CreError::UnboundedDual(_)) => {
            ExitStatus::SolverFailure
        }
        // Threshold parsing, JSON and I/O errors land here too.
        Some(_) | None => ExitStatus::InputError,
    }
}

/// Runs `command` with the scenario from `embedded` when given, writing
/// outputs and a manifest into the command's output directory.
fn execute(command: &Command, embedded: Option<&str>) -> Result<ExitStatus> {
    let common = command.common().expect("replay is resolved before execution");
    fs::create_dir_all(&common.out)
        .map_err(CreError::Io)
        .with_context(|| format!("creating {}", common.out.display()))?;
    let (cfg, text) = commands::load_scenario(common, embedded)?;
    let mut manifest = RunManifest::new(command, text);
    let start = Instant::now();
    let status = match command {
        Command::Vertices(c) => commands::vertices(&cfg, c),
        Command::Edges(a) => commands::edges(&cfg, a),
        Command::Surface(a) => commands::surface(&cfg, a),
        Command::SolveP1(a) => commands::solve(&cfg, a),
        Command::BenchmarkTs(a) => commands::benchmark(&cfg, a),
        Command::Validate(a) => validate::run(&cfg, a),
        Command::Replay(_) => unreachable!(),
    };
    // Failed runs keep their manifest too, so they can be replayed.
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    manifest.write(&common.out)?;
    status
}

fn run(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Replay(r) => {
            let m = RunManifest::load(&r.manifest)?;
            let mut command = m.command;
            let Some(common) = command.common_mut() else {
                return Err(CreError::Config("manifest records a replay command".into()).into());
            };
            if let Some(out) = r.out {
                common.out = out;
            }
            // The embedded text wins over the recorded path, which may have
            // changed or moved since the original run.
            if m.scenario_toml.is_none() {
                common.scenario = None;
            }
            log::info!("replaying {} from {}", command.name(), r.manifest.display());
            execute(&command, m.scenario_toml.as_deref())
        }
        command => execute(&command, None),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(s) => s.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            classify(&e).into()
        }
    }
}
