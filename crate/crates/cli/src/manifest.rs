use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command: the parsed arguments and the
/// scenario text as it was read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub scenario_path: Option<PathBuf>,
    /// `None` when the built-in Rayleigh scenario was used.
    pub scenario_toml: Option<String>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub started_unix: u64,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &Command, scenario_toml: Option<String>) -> Self {
        let common = command.common();
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            scenario_path: common.and_then(|c| c.scenario.clone()),
            scenario_toml,
            seed: common.and_then(|c| c.seed),
            out: common.map(|c| c.out.clone()).unwrap_or_default(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_s: 0.0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
