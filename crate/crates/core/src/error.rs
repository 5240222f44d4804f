use thiserror::Error;

/// Which threshold made a problem instance infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The energy threshold exceeds what any feasible covariance can deliver.
    Energy,
    /// The CRB threshold is below the minimum achievable CRB.
    Crb,
    /// Each threshold is individually reachable but not both at once.
    Joint,
}

impl std::fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InfeasibleReason::Energy => "energy",
            InfeasibleReason::Crb => "crb",
            InfeasibleReason::Joint => "joint",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum CreError {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible thresholds ({0})")]
    Infeasible(InfeasibleReason),

    #[error("dual function unbounded at this point: {0}")]
    UnboundedDual(String),

    #[error("solver failure after {iterations} iterations: {message}")]
    SolverFailure { message: String, iterations: usize },

    #[error("primal recovery failed: {0}")]
    RecoveryFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CreError>;
