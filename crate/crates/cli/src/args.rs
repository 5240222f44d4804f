use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "cre", version, about = "Transmit covariance design and CRB-rate-energy regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// R-max, E-max and C-min vertices with their covariances.
    Vertices(CommonArgs),
    /// Sampled C-R, R-E and C-E edges.
    Edges(EdgesArgs),
    /// Pareto surface over a grid of energy and CRB thresholds (plus edges).
    Surface(SurfaceArgs),
    /// Rate maximization under energy and CRB thresholds.
    SolveP1(SolveArgs),
    /// Optimal design against time switching.
    BenchmarkTs(BenchArgs),
    /// Invariant checks: duality gap, CRB homogeneity, subgradients, oracle.
    Validate(ValidateArgs),
    /// Re-runs the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides Rayleigh channel seeds (ID gets the seed, EH seed + 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Target duality gap relative to max(1, rate).
    #[arg(long, default_value_t = 1e-5)]
    pub tol_dual: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EdgesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Samples per edge.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Grid size as `N` or `N_EHxN_S`.
    #[arg(long, default_value = "15x15")]
    pub grid: String,
    /// Samples per edge.
    #[arg(long, default_value_t = 20)]
    pub edge_samples: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Energy threshold: `1e-4`, `1e-4W`, `-10dBm`, `0.5emax` or `none`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_eh: Option<String>,
    /// CRB threshold: `1e-5`, `1e-5rad2`, `-50dB`, `2crbmin` or `none`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_s: Option<String>,
    /// Cross-check the rate against the Frank-Wolfe oracle.
    #[arg(long)]
    pub oracle: bool,
    /// Write the ellipsoid iterations to trace.csv.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Energy thresholds to compare at (same syntax as solve-p1).
    #[arg(long, value_delimiter = ',', default_value = "0.05emax,0.5emax", allow_hyphen_values = true)]
    pub gamma_eh: Vec<String>,
    /// Number of CRB thresholds, geometric from just above CRB_min to the
    /// CRB of the R-max vertex.
    #[arg(long, default_value_t = 12)]
    pub grid: usize,
    /// Simplex step of the time-switching search.
    #[arg(long, default_value_t = 0.005)]
    pub ts_step: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Random draws per check.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// manifest.json written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Vertices(_) => "vertices",
            Command::Edges(_) => "edges",
            Command::Surface(_) => "surface",
            Command::SolveP1(_) => "solve-p1",
            Command::BenchmarkTs(_) => "benchmark-ts",
            Command::Validate(_) => "validate",
            Command::Replay(_) => "replay",
        }
    }

    pub fn common(&self) -> Option<&CommonArgs> {
        match self {
            Command::Vertices(c) => Some(c),
            Command::Edges(a) => Some(&a.common),
            Command::Surface(a) => Some(&a.common),
            Command::SolveP1(a) => Some(&a.common),
            Command::BenchmarkTs(a) => Some(&a.common),
            Command::Validate(a) => Some(&a.common),
            Command::Replay(_) => None,
        }
    }

    pub fn common_mut(&mut self) -> Option<&mut CommonArgs> {
        match self {
            Command::Vertices(c) => Some(c),
            Command::Edges(a) => Some(&mut a.common),
            Command::Surface(a) => Some(&mut a.common),
            Command::SolveP1(a) => Some(&mut a.common),
            Command::BenchmarkTs(a) => Some(&mut a.common),
            Command::Validate(a) => Some(&mut a.common),
            Command::Replay(_) => None,
        }
    }
}

/// `"12"` → (12, 12), `"8x20"` → (8, 20).
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid size '{s}': {e}"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}
