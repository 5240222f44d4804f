//! Reference scenarios: the line-of-sight family with tunable channel
//! correlation and the Rayleigh setting used for the time-switching
//! comparison.

use num_complex::Complex64;

use crate::error::{CreError, Result};
use crate::model::scenario_file::{los_channel, rayleigh_matrix};
use crate::model::units::{dbm_to_watts, path_loss_amplitude};
use crate::model::ScenarioConfig;

/// Path loss of the ID link (dB).
pub const ID_PATH_LOSS_DB: f64 = 120.0;
/// Path loss of the EH link (dB).
pub const EH_PATH_LOSS_DB: f64 = 60.0;

fn base(m: usize, n_s: usize, theta: f64, power_dbm: f64) -> ScenarioConfig {
    ScenarioConfig {
        tx_antennas: m,
        sensing_antennas: n_s,
        theta,
        alpha: Complex64::new(1e-8, 0.0),
        frame_len: 256,
        power: dbm_to_watts(power_dbm),
        sigma2_s: dbm_to_watts(-80.0),
        sigma2_id: dbm_to_watts(-80.0),
        h_id: los_channel(m, 0.0, path_loss_amplitude(ID_PATH_LOSS_DB)),
        h_eh: los_channel(m, 0.0, path_loss_amplitude(EH_PATH_LOSS_DB)),
    }
}

/// `M = 10`, `N_S = 16`, target at broadside, `P = 50 dBm`, single-antenna
/// line-of-sight receivers (all aligned with the target until
/// [`build_fig3_scenario`] rotates them).
pub fn los_base() -> ScenarioConfig {
    base(10, 16, 0.0, 50.0)
}

/// Line-of-sight scenario with `sin θ_ID = 2γ/M` and `sin θ_EH = 4γ/M`, the
/// target at `θ = 0`. `γ = 0` makes the sensing, ID and EH channels identical
/// and `γ = 1` makes them mutually orthogonal. Array sizes, power, noise and
/// the link amplitudes (RMS entry magnitude of each channel) come from `base`.
pub fn build_fig3_scenario(gamma: f64, base: &ScenarioConfig) -> Result<ScenarioConfig> {
    let m = base.tx_antennas;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(CreError::Config(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let s_eh = 4.0 * gamma / m as f64;
    if s_eh > 1.0 {
        return Err(CreError::Config(format!("4 gamma / M = {s_eh} exceeds 1")));
    }
    let rms = |h: &crate::linalg::CMatrix| h.norm() / ((h.nrows() * h.ncols()) as f64).sqrt();
    let mut cfg = base.clone();
    cfg.theta = 0.0;
    cfg.h_id = los_channel(m, (2.0 * gamma / m as f64).asin(), rms(&base.h_id));
    cfg.h_eh = los_channel(m, s_eh.asin(), rms(&base.h_eh));
    cfg.validate()?;
    Ok(cfg)
}

/// `M = 10`, `N_S = 16`, `θ = π/3`, `P = 40 dBm`, 4-antenna ID and EH
/// receivers with Rayleigh fading (ID seeded by `seed`, EH by `seed + 1`).
pub fn rayleigh_scenario(seed: u64) -> ScenarioConfig {
    let mut cfg = base(10, 16, std::f64::consts::FRAC_PI_3, 40.0);
    cfg.h_id = rayleigh_matrix(4, 10, seed) * Complex64::new(path_loss_amplitude(ID_PATH_LOSS_DB), 0.0);
    cfg.h_eh = rayleigh_matrix(4, 10, seed.wrapping_add(1)) * Complex64::new(path_loss_amplitude(EH_PATH_LOSS_DB), 0.0);
    cfg
}
