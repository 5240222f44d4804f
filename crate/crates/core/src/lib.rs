//! Transmit covariance design for a MIMO transmitter that simultaneously
//! communicates, transfers power, and senses a point target.
//!
//! The crate characterizes the CRB-rate-energy region of such a system:
//! its three single-objective vertices, the three pairwise tradeoff edges,
//! and the full Pareto surface obtained by maximizing rate under energy and
//! CRB constraints.

pub mod constraints;
pub mod error;
pub mod linalg;
pub mod model;
pub mod p1;
pub mod region;
pub mod sdp;
pub mod vertices;

pub use constraints::Thresholds;
pub use error::{CreError, InfeasibleReason, Result};
pub use linalg::{CMatrix, CVector, Hermitian};
pub use model::{CrePoint, ScenarioConfig, SensingMatrices, TransmitCovariance};
pub use vertices::{Vertex, VertexKind, Vertices};
