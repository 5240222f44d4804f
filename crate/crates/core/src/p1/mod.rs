//! Rate maximization under energy and CRB thresholds, solved through its
//! Lagrange dual: closed-form dual function, ellipsoid method over the six
//! real dual coordinates, then recovery of a feasible primal covariance.

mod dual;
mod ellipsoid;
mod recovery;

pub use dual::{eval_dual, schur_block, CutKind, DualEvaluation, DualPoint};
pub use ellipsoid::{ellipsoid_solve, write_trace_csv, EllipsoidRun, IterateRecord};
pub use recovery::{feasibility_check, solve_p1, FeasibilityVerdict, P1Solution};

use crate::linalg::RANK_EPS;
use crate::sdp::SdpOptions;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target on the duality gap, relative to `max(1, rate)`.
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Relative threshold for null eigenvalues of `D`.
    pub null_tol: f64,
    /// Initial ellipsoid radius; derived from the channel when `None`.
    pub radius: Option<f64>,
    pub record_trace: bool,
    /// Backend settings for the feasibility and completion programs.
    pub sdp: SdpOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_dual: 1e-5,
            max_iter: 20_000,
            null_tol: RANK_EPS,
            radius: None,
            record_trace: false,
            sdp: SdpOptions::default(),
        }
    }
}
