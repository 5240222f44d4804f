//! Energy and CRB thresholds of the rate-maximization problem and the
//! slack bookkeeping used to certify and repair candidate covariances.

use serde::Serialize;

use crate::error::{CreError, Result};
use crate::linalg::Hermitian;
use crate::model::{crb, energy, NormalizedProblem, ScenarioConfig, TransmitCovariance};

/// Relative slack allowed when checking a covariance against the thresholds
/// in physical units.
pub const THRESHOLD_SLACK: f64 = 1e-6;

/// `gamma_eh` in Watts (0 drops the energy constraint) and `gamma_s` in rad²
/// (`+∞` drops the CRB constraint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub gamma_eh: f64,
    pub gamma_s: f64,
}

impl Thresholds {
    pub fn new(gamma_eh: f64, gamma_s: f64) -> Result<Self> {
        if !(gamma_eh.is_finite() && gamma_eh >= 0.0) {
            return Err(CreError::Config(format!("energy threshold must be finite and nonnegative, got {gamma_eh}")));
        }
        if gamma_s.is_nan() || gamma_s <= 0.0 {
            return Err(CreError::Config(format!("CRB threshold must be positive, got {gamma_s}")));
        }
        Ok(Thresholds { gamma_eh, gamma_s })
    }

    /// Both constraints dropped.
    pub fn none() -> Self {
        Thresholds { gamma_eh: 0.0, gamma_s: f64::INFINITY }
    }

    pub fn energy_active(&self) -> bool {
        self.gamma_eh > 0.0
    }

    pub fn crb_active(&self) -> bool {
        self.gamma_s.is_finite()
    }

    pub(crate) fn normalized(&self, np: &NormalizedProblem) -> NormThresholds {
        NormThresholds {
            gamma: np.energy_threshold(self.gamma_eh),
            tau: self.crb_active().then(|| np.crb_threshold(self.gamma_s)),
        }
    }

    /// Physical feasibility of `s` with [`THRESHOLD_SLACK`] on the thresholds
    /// and `1e-9` relative on the power budget.
    pub fn admits(&self, s: &TransmitCovariance, cfg: &ScenarioConfig) -> bool {
        if !s.satisfies_budget(cfg.power) {
            return false;
        }
        if self.energy_active() && energy(s, cfg) < self.gamma_eh * (1.0 - THRESHOLD_SLACK) {
            return false;
        }
        if self.crb_active() {
            match crb(s, &cfg.sensing(), cfg) {
                Ok(v) => v <= self.gamma_s * (1.0 + THRESHOLD_SLACK),
                Err(_) => false,
            }
        } else {
            true
        }
    }
}

/// Thresholds in the units of [`NormalizedProblem`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct NormThresholds {
    pub gamma: f64,
    /// `None` when the CRB constraint is dropped.
    pub tau: Option<f64>,
}

/// Constraint slacks of a normalized candidate `X`; each is concave in `X`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Slacks {
    pub power: f64,
    pub energy: f64,
    /// Smallest eigenvalue of the Schur block.
    pub schur: f64,
    pub cone: f64,
}

impl Slacks {
    pub fn of(np: &NormalizedProblem, th: &NormThresholds, x: &Hermitian) -> Self {
        Slacks {
            power: 1.0 - x.trace(),
            energy: if th.gamma > 0.0 { np.energy(x) - th.gamma } else { f64::INFINITY },
            schur: match th.tau {
                Some(tau) => np.schur_block(x, tau).min_eigenvalue(),
                None => f64::INFINITY,
            },
            cone: x.min_eigenvalue(),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.power, self.energy, self.schur, self.cone]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Violations this small (normalized units) are left alone; the anchor's own
/// slack on a nearly tight constraint can be of the same order.
const MIX_TOL: f64 = 1e-12;

/// Moves `x` toward a strictly feasible `anchor` just far enough to clear
/// every violated constraint. Valid because all slacks are concave, so the
/// slack of the mixture is at least the mixture of slacks.
/// Returns the repaired point and the weight placed on the anchor, or `None`
/// if the anchor does not have positive slack where `x` is violated.
pub(crate) fn mix_to_feasible(
    np: &NormalizedProblem,
    th: &NormThresholds,
    x: &Hermitian,
    anchor: &Hermitian,
) -> Option<(Hermitian, f64)> {
    let sx = Slacks::of(np, th, x).as_array();
    let sa = Slacks::of(np, th, anchor).as_array();
    let mut t: f64 = 0.0;
    for (v, a) in sx.iter().zip(sa.iter()) {
        if *v >= -MIX_TOL {
            continue;
        }
        if *a <= 0.0 {
            return None;
        }
        t = t.max(-v / (a - v));
    }
    if t == 0.0 {
        return Some((x.clone(), 0.0));
    }
    // Clear rounding in the slack evaluation.
    let t = (t * (1.0 + 1e-9) + 1e-15).min(1.0);
    let mixed = x.scale(1.0 - t).add(&anchor.scale(t));
    Some((mixed, t))
}
