use rayon::prelude::*;
use serde::Serialize;

use super::finite_crb;
use super::time_switching::{best_time_switching, TimeSwitchingPoint};
use crate::constraints::{Thresholds, THRESHOLD_SLACK};
use crate::error::{CreError, Result};
use crate::model::{CrePoint, ScenarioConfig};
use crate::p1::{solve_p1, SolverOptions};
use crate::sdp::solve_ce_edge;
use crate::vertices::{all_vertices, Vertex, Vertices};

#[derive(Debug, Clone, Default)]
pub struct RegionOptions {
    /// Worker threads for the sweeps; 0 uses one per core.
    pub workers: usize,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleStatus {
    Ok,
    Infeasible,
    Failed,
    /// Outside the projection of the edges onto the C-E plane; not solved.
    Outside,
}

impl SampleStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::Infeasible => "infeasible",
            SampleStatus::Failed => "failed",
            SampleStatus::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    /// Rate against CRB, energy constraint dropped.
    CrbRate,
    /// Rate against energy, CRB constraint dropped.
    RateEnergy,
    /// Energy against CRB, rate ignored.
    CrbEnergy,
}

impl EdgeKind {
    pub fn label(&self) -> &'static str {
        match self {
            EdgeKind::CrbRate => "cr",
            EdgeKind::RateEnergy => "re",
            EdgeKind::CrbEnergy => "ce",
        }
    }

    /// Unit of the swept threshold.
    pub fn threshold_unit(&self) -> &'static str {
        match self {
            EdgeKind::RateEnergy => "W",
            _ => "rad^2",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EdgeSample {
    /// CRB threshold (rad²) on the C-R and C-E edges, energy threshold (W)
    /// on the R-E edge.
    pub threshold: f64,
    /// NaN coordinates unless the status is ok.
    pub point: CrePoint,
    pub status: SampleStatus,
    /// NaN where no dual certificate exists (vertices and the C-E edge).
    pub duality_gap: f64,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub kind: EdgeKind,
    pub samples: Vec<EdgeSample>,
}

#[derive(Debug, Clone)]
pub struct Edges {
    pub cr: Edge,
    pub re: Edge,
    pub ce: Edge,
}

impl Edges {
    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        [&self.cr, &self.re, &self.ce].into_iter()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfaceRecord {
    /// W
    pub gamma_eh: f64,
    /// rad²
    pub gamma_s: f64,
    /// Optimal rate (bps/Hz); NaN unless the status is ok.
    pub rate: f64,
    /// The optimal covariance's own coordinates; NaN unless ok.
    pub point: CrePoint,
    pub status: SampleStatus,
    pub duality_gap: f64,
}

/// Records are stored energy-major: index `i * gamma_s.len() + j`.
#[derive(Debug, Clone)]
pub struct Surface {
    pub gamma_eh: Vec<f64>,
    pub gamma_s: Vec<f64>,
    pub records: Vec<SurfaceRecord>,
}

impl Surface {
    pub fn at(&self, i_eh: usize, j_s: usize) -> &SurfaceRecord {
        &self.records[i_eh * self.gamma_s.len() + j_s]
    }
}

#[derive(Debug, Clone)]
pub struct CreRegion {
    pub vertices: Vertices,
    pub edges: Edges,
    pub surface: Surface,
}

const NAN_POINT: CrePoint = CrePoint { crb: f64::NAN, rate: f64::NAN, energy: f64::NAN };

/// `n` points from `lo` to `hi` inclusive, equally spaced.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// `n` points from `lo` to `hi` inclusive, equally spaced in log scale.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| match k {
                0 => lo,
                _ if k == n - 1 => hi,
                _ => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
            })
            .collect(),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CreError::Config(format!("cannot start the worker pool: {e}")))
}

/// Runs `f` over `items` on the pool; results keep the order of `items`.
fn par_map<T: Sync, R: Send>(pool: &rayon::ThreadPool, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    pool.install(|| items.par_iter().map(f).collect())
}

fn p1_sample(cfg: &ScenarioConfig, th: &Thresholds, opts: &SolverOptions) -> (CrePoint, SampleStatus, f64) {
    match solve_p1(cfg, th, opts) {
        Ok(sol) => (sol.point, SampleStatus::Ok, sol.duality_gap),
        Err(CreError::Infeasible(_)) => (NAN_POINT, SampleStatus::Infeasible, f64::NAN),
        Err(e) => {
            log::warn!("rate maximization failed at Γ_EH = {:e} W, Γ_S = {:e} rad²: {e}", th.gamma_eh, th.gamma_s);
            (NAN_POINT, SampleStatus::Failed, f64::NAN)
        }
    }
}

fn vertex_sample(threshold: f64, v: &Vertex) -> EdgeSample {
    EdgeSample { threshold, point: v.point, status: SampleStatus::Ok, duality_gap: f64::NAN }
}

/// Samples the three edges with `samples` points each. CRB thresholds are
/// spaced geometrically, energy thresholds linearly. The end of an edge
/// where a constraint pins a vertex (`CRB_min`, `E_max`) takes the vertex
/// itself: the dual optimum is not attained there.
pub fn compute_edges(cfg: &ScenarioConfig, v: &Vertices, samples: usize, opts: &RegionOptions) -> Result<Edges> {
    if samples < 2 {
        return Err(CreError::Config(format!("need at least 2 samples per edge, got {samples}")));
    }
    let pool = pool(opts.workers)?;
    let crb_min = v.c_min.point.crb;

    let cr_grid = geomspace(crb_min, finite_crb(v, v.r_max.point.crb).max(crb_min), samples);
    let cr = par_map(&pool, &cr_grid, |&gs| {
        if gs <= crb_min {
            return vertex_sample(gs, &v.c_min);
        }
        let (point, status, duality_gap) = p1_sample(cfg, &Thresholds { gamma_eh: 0.0, gamma_s: gs }, &opts.solver);
        EdgeSample { threshold: gs, point, status, duality_gap }
    });

    let e_max = v.e_max.point.energy;
    let re_grid = linspace(v.r_max.point.energy.min(e_max), e_max, samples);
    let re = par_map(&pool, &re_grid, |&ge| {
        if ge >= e_max {
            return vertex_sample(ge, &v.e_max);
        }
        let (point, status, duality_gap) =
            p1_sample(cfg, &Thresholds { gamma_eh: ge, gamma_s: f64::INFINITY }, &opts.solver);
        EdgeSample { threshold: ge, point, status, duality_gap }
    });

    let ce_end = finite_crb(v, v.e_max.point.crb).max(crb_min);
    let ce_grid = geomspace(crb_min, ce_end, samples);
    let ce = par_map(&pool, &ce_grid, |&gs| {
        if gs <= crb_min {
            return vertex_sample(gs, &v.c_min);
        }
        if gs >= ce_end && v.e_max.point.crb <= ce_end {
            return vertex_sample(gs, &v.e_max);
        }
        match solve_ce_edge(cfg, gs, &opts.solver.sdp) {
            Ok((_, point)) => EdgeSample { threshold: gs, point, status: SampleStatus::Ok, duality_gap: f64::NAN },
            Err(e) => {
                let status = match e {
                    CreError::Infeasible(_) => SampleStatus::Infeasible,
                    _ => SampleStatus::Failed,
                };
                log::warn!("C-E edge sample at Γ_S = {gs:e} rad²: {e}");
                EdgeSample { threshold: gs, point: NAN_POINT, status, duality_gap: f64::NAN }
            }
        }
    });

    Ok(Edges {
        cr: Edge { kind: EdgeKind::CrbRate, samples: cr },
        re: Edge { kind: EdgeKind::RateEnergy, samples: re },
        ce: Edge { kind: EdgeKind::CrbEnergy, samples: ce },
    })
}

/// Largest energy compatible with `CRB ≤ gamma_s`, or `None` if the C-E
/// subproblem could not be solved.
fn ce_energy(cfg: &ScenarioConfig, v: &Vertices, gamma_s: f64, opts: &RegionOptions) -> Option<f64> {
    if gamma_s >= v.e_max.point.crb {
        return Some(v.e_max.point.energy);
    }
    match solve_ce_edge(cfg, gamma_s, &opts.solver.sdp) {
        Ok((_, p)) => Some(p.energy),
        Err(CreError::Infeasible(_)) => Some(f64::NEG_INFINITY),
        Err(e) => {
            log::warn!("footprint at Γ_S = {gamma_s:e} rad² unknown: {e}");
            None
        }
    }
}

/// Grid points where one threshold sits at its vertex value leave only that
/// vertex's covariance feasible, so no dual optimum is attained. The
/// vertex answers them directly.
fn pinned(v: &Vertices, ge: f64, gs: f64) -> Option<(CrePoint, SampleStatus)> {
    let pick =
        |x: &Vertex, ok: bool| if ok { (x.point, SampleStatus::Ok) } else { (NAN_POINT, SampleStatus::Infeasible) };
    if gs <= v.c_min.point.crb {
        let c = &v.c_min;
        return Some(pick(c, ge <= c.point.energy * (1.0 + THRESHOLD_SLACK)));
    }
    if ge >= v.e_max.point.energy {
        let e = &v.e_max;
        return Some(pick(e, e.point.crb <= gs * (1.0 + THRESHOLD_SLACK)));
    }
    None
}

/// Solves the rate maximization on a `grid_eh × grid_s` grid of thresholds
/// spanning the region's projection on the C-E plane: `Γ_S` from `CRB_min`
/// to the largest finite vertex CRB, `Γ_EH` from the smaller of the R-max
/// and C-min energies to `E_max`. Grid points above the C-E edge are
/// marked outside without solving, and the `CRB_min` column and `E_max` row
/// take the pinned vertex.
pub fn compute_surface(
    cfg: &ScenarioConfig,
    v: &Vertices,
    grid_eh: usize,
    grid_s: usize,
    opts: &RegionOptions,
) -> Result<Surface> {
    if grid_eh == 0 || grid_s == 0 {
        return Err(CreError::Config("surface grid needs at least one point per axis".into()));
    }
    let pool = pool(opts.workers)?;
    let crb_min = v.c_min.point.crb;
    let finite_max =
        [v.r_max.point.crb, v.e_max.point.crb].into_iter().filter(|c| c.is_finite()).fold(f64::NAN, f64::max);
    let s_hi = if finite_max.is_nan() { finite_crb(v, f64::INFINITY) } else { finite_crb(v, finite_max) };
    let gamma_s = geomspace(crb_min, s_hi.max(crb_min), grid_s);
    let e_max = v.e_max.point.energy;
    let e_lo = v.r_max.point.energy.min(v.c_min.point.energy).min(e_max);
    let gamma_eh = linspace(e_lo, e_max, grid_eh);

    let footprint = par_map(&pool, &gamma_s, |&gs| ce_energy(cfg, v, gs, opts));

    let cells: Vec<(f64, f64, Option<f64>)> =
        gamma_eh.iter().flat_map(|&ge| gamma_s.iter().zip(&footprint).map(move |(&gs, &f)| (ge, gs, f))).collect();
    let records = par_map(&pool, &cells, |&(ge, gs, reach)| {
        if reach.is_some_and(|e| ge > e * (1.0 + 1e-6)) {
            return SurfaceRecord {
                gamma_eh: ge,
                gamma_s: gs,
                rate: f64::NAN,
                point: NAN_POINT,
                status: SampleStatus::Outside,
                duality_gap: f64::NAN,
            };
        }
        let (point, status, duality_gap) = match pinned(v, ge, gs) {
            Some((point, status)) => (point, status, f64::NAN),
            None => p1_sample(cfg, &Thresholds { gamma_eh: ge, gamma_s: gs }, &opts.solver),
        };
        SurfaceRecord { gamma_eh: ge, gamma_s: gs, rate: point.rate, point, status, duality_gap }
    });
    Ok(Surface { gamma_eh, gamma_s, records })
}

/// Vertices, edges and surface in one call.
pub fn compute_region(
    cfg: &ScenarioConfig,
    samples_per_edge: usize,
    grid_eh: usize,
    grid_s: usize,
    opts: &RegionOptions,
) -> Result<CreRegion> {
    let vertices = all_vertices(cfg)?;
    let edges = compute_edges(cfg, &vertices, samples_per_edge, opts)?;
    let surface = compute_surface(cfg, &vertices, grid_eh, grid_s, opts)?;
    Ok(CreRegion { vertices, edges, surface })
}

/// Optimal and best time-switching rate at one threshold pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TsComparison {
    pub gamma_eh: f64,
    pub gamma_s: f64,
    /// NaN unless the status is ok.
    pub optimal_rate: f64,
    pub status: SampleStatus,
    pub duality_gap: f64,
    /// `None` when no time split meets both thresholds.
    pub time_switching: Option<TimeSwitchingPoint>,
}

/// Compares the optimal design with time switching on every pair of
/// `gamma_eh × gamma_s` (energy-major order).
pub fn compare_time_switching(
    cfg: &ScenarioConfig,
    v: &Vertices,
    gamma_eh: &[f64],
    gamma_s: &[f64],
    ts_step: f64,
    opts: &RegionOptions,
) -> Result<Vec<TsComparison>> {
    let pool = pool(opts.workers)?;
    let cells: Vec<(f64, f64)> = gamma_eh.iter().flat_map(|&ge| gamma_s.iter().map(move |&gs| (ge, gs))).collect();
    let rows = par_map(&pool, &cells, |&(ge, gs)| -> Result<TsComparison> {
        let th = Thresholds::new(ge, gs)?;
        let (point, status, duality_gap) = p1_sample(cfg, &th, &opts.solver);
        let time_switching = best_time_switching(cfg, v, &th, ts_step)?;
        Ok(TsComparison { gamma_eh: ge, gamma_s: gs, optimal_rate: point.rate, status, duality_gap, time_switching })
    });
    rows.into_iter().collect()
}
