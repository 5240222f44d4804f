//! TOML scenario files.
//!
//! ```toml
//! [system]
//! tx_antennas = 10
//! sensing_antennas = 16
//! frame_length = 256
//! power_dbm = 40.0            # or power_w
//! sensing_noise_dbm = -80.0   # or sensing_noise_w
//! id_noise_dbm = -80.0        # or id_noise_w
//!
//! [target]
//! angle_deg = 60.0            # or angle_rad
//! reflection = [1e-8, 0.0]    # complex (re, im)
//!
//! [channels.id]
//! kind = "rayleigh"           # "los" | "rayleigh" | "explicit"
//! rx_antennas = 4
//! path_loss_db = 120.0
//! seed = 7
//!
//! [channels.eh]
//! kind = "los"
//! angle_deg = 12.0
//! path_loss_db = 60.0
//! ```
//!
//! Explicit channels list their rows as arrays of `[re, im]` pairs:
//! `rows = [[[1.0, 0.0], [0.0, -1.0]]]`.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::error::{CreError, Result};
use crate::linalg::CMatrix;
use crate::model::units::{dbm_to_watts, path_loss_amplitude};
use crate::model::{steering, ScenarioConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    pub target: TargetSection,
    pub channels: ChannelsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub tx_antennas: usize,
    pub sensing_antennas: usize,
    pub frame_length: usize,
    pub power_dbm: Option<f64>,
    pub power_w: Option<f64>,
    pub sensing_noise_dbm: Option<f64>,
    pub sensing_noise_w: Option<f64>,
    pub id_noise_dbm: Option<f64>,
    pub id_noise_w: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub angle_deg: Option<f64>,
    pub angle_rad: Option<f64>,
    pub reflection: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsSection {
    pub id: ChannelSpec,
    pub eh: ChannelSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Single-row line-of-sight channel `amp · a_t^T(angle)`.
    Los {
        angle_deg: Option<f64>,
        angle_rad: Option<f64>,
        #[serde(default)]
        path_loss_db: f64,
    },
    /// i.i.d. unit-variance circularly symmetric Gaussian entries.
    Rayleigh {
        rx_antennas: usize,
        seed: u64,
        #[serde(default)]
        path_loss_db: f64,
    },
    Explicit {
        rows: Vec<Vec<[f64; 2]>>,
        #[serde(default)]
        path_loss_db: f64,
    },
}

fn pick(name: &str, log: Option<f64>, lin: Option<f64>, conv: fn(f64) -> f64) -> Result<f64> {
    match (log, lin) {
        (Some(v), None) => Ok(conv(v)),
        (None, Some(v)) => Ok(v),
        (Some(_), Some(_)) => {
            Err(CreError::Config(format!("{name}: give either the dB(m) or the linear value, not both")))
        }
        (None, None) => Err(CreError::Config(format!("{name}: missing value"))),
    }
}

fn angle(name: &str, deg: Option<f64>, rad: Option<f64>) -> Result<f64> {
    pick(name, deg, rad, f64::to_radians)
}

/// Deterministic CSCG matrix with unit-variance entries, generated row-major.
pub fn rayleigh_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        entries.push(Complex64::new(s * re, s * im));
    }
    CMatrix::from_row_slice(rows, cols, &entries)
}

/// Line-of-sight row `a_t^T(angle)` scaled by `amp`.
pub fn los_channel(m: usize, angle: f64, amp: f64) -> CMatrix {
    let row = steering(m, angle) * Complex64::new(amp, 0.0);
    CMatrix::from_fn(1, m, |_, j| row[j])
}

impl ChannelSpec {
    fn build(&self, m: usize, which: &str) -> Result<CMatrix> {
        match self {
            ChannelSpec::Los { angle_deg, angle_rad, path_loss_db } => {
                let th = angle(&format!("channels.{which}.angle"), *angle_deg, *angle_rad)?;
                Ok(los_channel(m, th, path_loss_amplitude(*path_loss_db)))
            }
            ChannelSpec::Rayleigh { rx_antennas, seed, path_loss_db } => {
                if *rx_antennas == 0 {
                    return Err(CreError::Config(format!("channels.{which}.rx_antennas must be at least 1")));
                }
                let amp = path_loss_amplitude(*path_loss_db);
                Ok(rayleigh_matrix(*rx_antennas, m, *seed) * Complex64::new(amp, 0.0))
            }
            ChannelSpec::Explicit { rows, path_loss_db } => {
                if rows.is_empty() {
                    return Err(CreError::Config(format!("channels.{which}.rows is empty")));
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != m {
                        return Err(CreError::Config(format!(
                            "channels.{which}.rows[{i}] has {} entries, expected tx_antennas = {m}",
                            r.len()
                        )));
                    }
                }
                let amp = path_loss_amplitude(*path_loss_db);
                let flat: Vec<Complex64> =
                    rows.iter().flatten().map(|[re, im]| Complex64::new(re * amp, im * amp)).collect();
                Ok(CMatrix::from_row_slice(rows.len(), m, &flat))
            }
        }
    }

    /// Replaces the seed of a Rayleigh channel; other kinds are unchanged.
    pub fn reseed(&mut self, new_seed: u64) {
        if let ChannelSpec::Rayleigh { seed, .. } = self {
            *seed = new_seed;
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CreError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            CreError::Config(msg) => CreError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Overrides Rayleigh seeds: the ID channel gets `seed`, the EH channel `seed + 1`.
    pub fn override_seed(&mut self, seed: u64) {
        self.channels.id.reseed(seed);
        self.channels.eh.reseed(seed.wrapping_add(1));
    }

    pub fn to_config(&self) -> Result<ScenarioConfig> {
        let s = &self.system;
        let m = s.tx_antennas;
        let cfg = ScenarioConfig {
            tx_antennas: m,
            sensing_antennas: s.sensing_antennas,
            theta: angle("target.angle", self.target.angle_deg, self.target.angle_rad)?,
            alpha: Complex64::new(self.target.reflection[0], self.target.reflection[1]),
            frame_len: s.frame_length,
            power: pick("system.power", s.power_dbm, s.power_w, dbm_to_watts)?,
            sigma2_s: pick("system.sensing_noise", s.sensing_noise_dbm, s.sensing_noise_w, dbm_to_watts)?,
            sigma2_id: pick("system.id_noise", s.id_noise_dbm, s.id_noise_w, dbm_to_watts)?,
            h_id: self.channels.id.build(m, "id")?,
            h_eh: self.channels.eh.build(m, "eh")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
