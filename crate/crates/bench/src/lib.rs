//! Fixtures shared by the benchmarks.

use cre_core::region::{build_fig3_scenario, los_base, rayleigh_scenario};
use cre_core::vertices::all_vertices;
use cre_core::{ScenarioConfig, Thresholds, Vertices};

/// Rayleigh scenario with mid-range thresholds: half of `E_max` and three
/// times `CRB_min`.
pub fn rayleigh_fixture() -> (ScenarioConfig, Vertices, Thresholds) {
    let cfg = rayleigh_scenario(1);
    let v = all_vertices(&cfg).expect("reference scenario has vertices");
    let th = Thresholds::new(0.5 * v.e_max.point.energy, 3.0 * v.c_min.point.crb).expect("valid thresholds");
    (cfg, v, th)
}

/// Line-of-sight scenario with orthogonal channels, where the solver needs
/// the completion step.
pub fn orthogonal_fixture() -> (ScenarioConfig, Thresholds) {
    let cfg = build_fig3_scenario(1.0, &los_base()).expect("valid correlation");
    let v = all_vertices(&cfg).expect("reference scenario has vertices");
    let th = Thresholds::new(0.5 * v.e_max.point.energy, 2.0 * v.c_min.point.crb).expect("valid thresholds");
    (cfg, th)
}
