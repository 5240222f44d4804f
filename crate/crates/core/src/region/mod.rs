//! The C-R-E region: edges between the vertices, the Pareto surface over a
//! grid of energy and CRB thresholds, and the time-switching benchmark.

mod output;
mod scenarios;
mod sweep;
mod time_switching;

pub use output::{write_benchmark_csv, write_edge_csv, write_surface_csv, write_ts_csv, write_vertices_csv};
pub use scenarios::{build_fig3_scenario, los_base, rayleigh_scenario, EH_PATH_LOSS_DB, ID_PATH_LOSS_DB};
pub use sweep::{
    compare_time_switching, compute_edges, compute_region, compute_surface, geomspace, linspace, CreRegion, Edge,
    EdgeKind, EdgeSample, Edges, RegionOptions, SampleStatus, Surface, SurfaceRecord, TsComparison,
};
pub use time_switching::{best_time_switching, time_switching_frontier, TimeSwitching, TimeSwitchingPoint, TsFrontier};

use crate::vertices::Vertices;

/// Stand-in for an infinite CRB when a sweep range needs a finite end.
pub const CRB_CAP_FACTOR: f64 = 1e6;

/// Finite CRB of a vertex, capped at `CRB_CAP_FACTOR · CRB_min`.
pub(crate) fn finite_crb(v: &Vertices, crb: f64) -> f64 {
    let cap = v.c_min.point.crb * CRB_CAP_FACTOR;
    if crb.is_finite() {
        crb.min(cap)
    } else {
        cap
    }
}
