#![allow(dead_code)]

use cre_core::model::scenario_file::rayleigh_matrix;
use cre_core::model::units::{dbm_to_watts, path_loss_amplitude};
use cre_core::region::{EH_PATH_LOSS_DB, ID_PATH_LOSS_DB};
use cre_core::vertices::Vertices;
use cre_core::{ScenarioConfig, Thresholds};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rayleigh scenario with `m` transmit antennas, 4-antenna receivers and a
/// seed-dependent target angle.
pub fn random_scenario(seed: u64, m: usize) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScenarioConfig {
        tx_antennas: m,
        sensing_antennas: 16,
        theta: rng.random_range(-1.2..1.2),
        alpha: Complex64::new(1e-8, 0.0),
        frame_len: 256,
        power: dbm_to_watts(40.0),
        sigma2_s: dbm_to_watts(-80.0),
        sigma2_id: dbm_to_watts(-80.0),
        h_id: rayleigh_matrix(4, m, 2 * seed) * Complex64::new(path_loss_amplitude(ID_PATH_LOSS_DB), 0.0),
        h_eh: rayleigh_matrix(4, m, 2 * seed + 1) * Complex64::new(path_loss_amplitude(EH_PATH_LOSS_DB), 0.0),
    }
}

/// Energy threshold uniform in `[0.05, 0.9]·E_max`, CRB threshold
/// log-uniform in `[1.05, 100]·CRB_min`.
pub fn random_thresholds(rng: &mut ChaCha8Rng, v: &Vertices) -> Thresholds {
    let fe = rng.random_range(0.05..0.9);
    let fs = (rng.random_range(1.05f64.ln()..100f64.ln())).exp();
    Thresholds::new(fe * v.e_max.point.energy, fs * v.c_min.point.crb).unwrap()
}
