//! Time-switching benchmark: the frame is split into ID, EH and sensing
//! portions, each using the corresponding vertex covariance.

use num_complex::Complex64;
use serde::Serialize;

use crate::constraints::Thresholds;
use crate::error::{CreError, Result};
use crate::model::{crb_from_terms, CrePoint, ScenarioConfig};
use crate::vertices::Vertices;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeSwitchingPoint {
    pub t_id: f64,
    pub t_eh: f64,
    pub t_s: f64,
    pub point: CrePoint,
}

/// Precomputed metrics of the three portions. The rate is earned only in
/// the ID portion, energy adds up linearly, and the CRB is that of the
/// time-averaged covariance, whose Fisher terms are linear in the weights.
#[derive(Debug, Clone)]
pub struct TimeSwitching {
    rate_id: f64,
    energy: [f64; 3],
    fisher: [(f64, f64, Complex64); 3],
    trace: [f64; 3],
    norm_product: f64,
    crb_scale: f64,
}

impl TimeSwitching {
    pub fn new(cfg: &ScenarioConfig, v: &Vertices) -> Self {
        let sm = cfg.sensing();
        let f = |c: &crate::TransmitCovariance| sm.fisher_terms(c.matrix());
        TimeSwitching {
            rate_id: v.r_max.point.rate,
            energy: [v.r_max.point.energy, v.e_max.point.energy, v.c_min.point.energy],
            fisher: [f(&v.r_max.covariance), f(&v.e_max.covariance), f(&v.c_min.covariance)],
            trace: [v.r_max.covariance.trace(), v.e_max.covariance.trace(), v.c_min.covariance.trace()],
            norm_product: sm.norm_aa * sm.norm_dd,
            crb_scale: cfg.crb_scale(),
        }
    }

    pub fn evaluate(&self, t_id: f64, t_eh: f64, t_s: f64) -> TimeSwitchingPoint {
        let t = [t_id, t_eh, t_s];
        let (mut taa, mut tdd, mut tda) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for (w, (a, d, x)) in t.iter().zip(&self.fisher) {
            taa += w * a;
            tdd += w * d;
            tda += x * w;
        }
        // Convex combinations of PSD matrices stay PSD.
        let tr: f64 = t.iter().zip(&self.trace).map(|(w, x)| w * x).sum();
        let crb = crb_from_terms(self.crb_scale, taa, tdd, tda, self.norm_product * tr * tr).unwrap_or(f64::INFINITY);
        let energy = t.iter().zip(&self.energy).map(|(w, e)| w * e).sum();
        TimeSwitchingPoint { t_id, t_eh, t_s, point: CrePoint { crb, rate: t_id * self.rate_id, energy } }
    }

    fn grid(&self, n: usize) -> Vec<TimeSwitchingPoint> {
        let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for i in 0..=n {
            for j in 0..=n - i {
                let k = n - i - j;
                out.push(self.evaluate(i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TsFrontier {
    pub points: Vec<TimeSwitchingPoint>,
    /// `dominated[k]` is set when some other point has CRB no larger, rate
    /// and energy no smaller, and is strictly better in one of the three.
    pub dominated: Vec<bool>,
}

impl TsFrontier {
    pub fn non_dominated(&self) -> impl Iterator<Item = &TimeSwitchingPoint> {
        self.points.iter().zip(&self.dominated).filter(|(_, d)| !**d).map(|(p, _)| p)
    }
}

fn steps(grid_step: f64) -> Result<usize> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(CreError::Config(format!("time-switching grid step must lie in (0, 1], got {grid_step}")));
    }
    let n = (1.0 / grid_step).round();
    if (n * grid_step - 1.0).abs() > 1e-9 {
        return Err(CreError::Config(format!("time-switching grid step {grid_step} does not divide 1")));
    }
    Ok(n as usize)
}

/// Flags Pareto-dominated points. Points are grouped by rate; within a group
/// dominance is checked pairwise, and against all strictly higher rates by a
/// staircase of the best CRB available at each energy level.
fn dominance(points: &[CrePoint]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].rate.total_cmp(&points[a].rate));
    let mut dominated = vec![false; points.len()];
    // (energy, crb) of every point with a strictly higher rate than the
    // current group, sorted by decreasing energy, with prefix minima of crb.
    let mut above: Vec<(f64, f64)> = Vec::new();
    let mut stair: Vec<f64> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let rate = points[order[start]].rate;
        let end = start + order[start..].iter().take_while(|&&k| points[k].rate == rate).count();
        let group = &order[start..end];
        for &p in group {
            let pp = points[p];
            // Points above with energy ≥ pp.energy form a prefix of `above`.
            let reach = above.partition_point(|(e, _)| *e >= pp.energy);
            if reach > 0 && stair[reach - 1] <= pp.crb {
                dominated[p] = true;
                continue;
            }
            dominated[p] = group.iter().any(|&q| {
                let qq = points[q];
                q != p && qq.crb <= pp.crb && qq.energy >= pp.energy && (qq.crb < pp.crb || qq.energy > pp.energy)
            });
        }
        above.extend(group.iter().map(|&k| (points[k].energy, points[k].crb)));
        above.sort_by(|a, b| b.0.total_cmp(&a.0));
        stair.clear();
        let mut best = f64::INFINITY;
        for &(_, c) in &above {
            best = best.min(c);
            stair.push(best);
        }
        start = end;
    }
    dominated
}

/// Evaluates the time-switching scheme on the simplex with the given step
/// and flags the dominated points.
pub fn time_switching_frontier(cfg: &ScenarioConfig, v: &Vertices, grid_step: f64) -> Result<TsFrontier> {
    let n = steps(grid_step)?;
    let points = TimeSwitching::new(cfg, v).grid(n);
    let dominated = dominance(&points.iter().map(|p| p.point).collect::<Vec<_>>());
    Ok(TsFrontier { points, dominated })
}

fn meets(p: &CrePoint, th: &Thresholds) -> bool {
    (!th.energy_active() || p.energy >= th.gamma_eh) && (!th.crb_active() || p.crb <= th.gamma_s)
}

/// Highest time-switching rate meeting both thresholds: grid search at
/// `grid_step`, then one pass at `grid_step / 10` around the incumbent.
/// `None` if no grid point is feasible.
pub fn best_time_switching(
    cfg: &ScenarioConfig,
    v: &Vertices,
    th: &Thresholds,
    grid_step: f64,
) -> Result<Option<TimeSwitchingPoint>> {
    let n = steps(grid_step)?;
    let ts = TimeSwitching::new(cfg, v);
    let better = |a: &TimeSwitchingPoint, b: &Option<TimeSwitchingPoint>| b.is_none_or(|b| a.point.rate > b.point.rate);
    let mut best: Option<TimeSwitchingPoint> = None;
    for p in ts.grid(n) {
        if meets(&p.point, th) && better(&p, &best) {
            best = Some(p);
        }
    }
    let Some(centre) = best else { return Ok(None) };
    let fine = 10 * n;
    let (ci, cj) = ((centre.t_id * fine as f64).round() as i64, (centre.t_eh * fine as f64).round() as i64);
    for di in -10..=10 {
        for dj in -10..=10 {
            let (i, j) = (ci + di, cj + dj);
            if i < 0 || j < 0 || i + j > fine as i64 {
                continue;
            }
            let k = fine as i64 - i - j;
            let p = ts.evaluate(i as f64 / fine as f64, j as f64 / fine as f64, k as f64 / fine as f64);
            if meets(&p.point, th) && better(&p, &best) {
                best = Some(p);
            }
        }
    }
    Ok(best)
}
