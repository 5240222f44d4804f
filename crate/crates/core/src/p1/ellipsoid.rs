use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::dual::{CutKind, DualEvaluation, DualPoint, DualProblem, Probe};
use super::SolverOptions;
use crate::constraints::Thresholds;
use crate::error::{CreError, Result};
use crate::model::ScenarioConfig;
use crate::vertices::water_filling;

/// One ellipsoid iteration. `g` is NaN unless the cut was an objective cut.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub cut: CutKind,
    pub g: f64,
    /// Best dual value so far.
    pub upper: f64,
    /// Best certified lower bound on the dual optimum so far.
    pub lower: f64,
}

#[derive(Debug, Clone)]
pub struct EllipsoidRun {
    /// Dual-feasible point with the smallest dual value seen.
    pub dual: DualPoint,
    pub value: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Empty unless requested in the options.
    pub trace: Vec<IterateRecord>,
}

pub fn write_trace_csv<W: Write>(trace: &[IterateRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iteration,cut,g,upper,lower")?;
    for r in trace {
        writeln!(w, "{},{},{:e},{:e},{:e}", r.iteration, r.cut.label(), r.g, r.upper, r.lower)?;
    }
    Ok(())
}

/// Stopping floor on the relative dual uncertainty, reached only when the
/// primal side cannot close the gap from the iterates alone.
const DUAL_FLOOR: f64 = 1e-12;

struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    /// Neutral cut keeping `{y : s·(y − center) ≤ 0}`. Returns `sqrt(s^T P s)`,
    /// or `None` once the shape has degenerated numerically.
    fn cut(&mut self, s: &DVector<f64>) -> Option<f64> {
        let n = self.center.len() as f64;
        let ps = &self.shape * s;
        let q = s.dot(&ps);
        if q.is_nan() || q <= 0.0 || !q.is_finite() {
            return None;
        }
        let width = q.sqrt();
        let b = ps / width;
        if self.center.len() == 1 {
            self.center -= &b * 0.5;
            self.shape *= 0.25;
        } else {
            self.center -= &b / (n + 1.0);
            self.shape = (&self.shape - &b * b.transpose() * (2.0 / (n + 1.0))) * (n * n / (n * n - 1.0));
            self.shape = (&self.shape + self.shape.transpose()) * 0.5;
        }
        Some(width)
    }
}

/// Callback on every objective evaluation; returns the best primal value
/// found so far (or `-∞`).
pub(crate) type PrimalHook<'h> = dyn FnMut(&DualPoint, &DualEvaluation) -> f64 + 'h;

/// Price of power in the unconstrained problem, used to centre the first
/// ellipsoid.
fn initial_nu(problem: &DualProblem) -> f64 {
    let gains: Vec<f64> = problem.np.w_id.eig().values.iter().map(|&w| w.max(0.0)).collect();
    let p = water_filling(&gains, 1.0);
    let level =
        gains.iter().zip(&p).filter(|(g, p)| **g > 0.0 && **p > 0.0).map(|(g, p)| p + 1.0 / g).fold(0.0, f64::max);
    if level > 0.0 {
        1.0 / (level * std::f64::consts::LN_2)
    } else {
        1.0
    }
}

pub(crate) fn run<'h>(
    problem: &DualProblem,
    opts: &SolverOptions,
    mut hook: Option<&mut PrimalHook<'h>>,
) -> Result<EllipsoidRun> {
    let nu0 = initial_nu(problem);
    let mut radius = opts.radius.unwrap_or(1e3 * nu0.max(1.0));
    let mut total = 0;
    let mut trace = Vec::new();
    // The dual optimum is unbounded a priori; grow the ellipsoid if the best
    // point ends up near its initial boundary.
    for attempt in 0..4 {
        let out =
            run_once(problem, opts, nu0, radius, opts.max_iter.saturating_sub(total), hook.as_deref_mut(), &mut trace)?;
        total += out.iterations;
        let shift = {
            let y = out.dual.to_vec();
            let y0 = [0.0, nu0, 0.0, 0.0, 0.0, 0.0];
            y.iter().zip(y0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        };
        if shift < 0.5 * radius || attempt == 3 || opts.radius.is_some() || total >= opts.max_iter {
            return Ok(EllipsoidRun { iterations: total, trace, ..out });
        }
        log::debug!("dual optimum near the initial ellipsoid boundary; radius {radius:.3e} -> {:.3e}", radius * 100.0);
        radius *= 100.0;
    }
    unreachable!()
}

fn run_once<'h>(
    problem: &DualProblem,
    opts: &SolverOptions,
    nu0: f64,
    radius: f64,
    max_iter: usize,
    mut hook: Option<&mut PrimalHook<'h>>,
    trace: &mut Vec<IterateRecord>,
) -> Result<EllipsoidRun> {
    let idx: Vec<usize> = (0..6).filter(|&i| problem.active[i]).collect();
    let n = idx.len();
    let mut base = [0.0; 6];
    base[1] = nu0;
    let mut ell = Ellipsoid {
        center: DVector::from_iterator(n, idx.iter().map(|&i| base[i])),
        shape: DMatrix::identity(n, n) * (radius * radius),
    };
    let full = |c: &DVector<f64>| {
        let mut y = [0.0; 6];
        for (k, &i) in idx.iter().enumerate() {
            y[i] = c[k];
        }
        DualPoint::from_vec(y)
    };
    let restrict = |s: [f64; 6]| DVector::from_iterator(n, idx.iter().map(|&i| s[i]));

    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<DualPoint> = None;
    let mut primal = f64::NEG_INFINITY;
    let mut converged = false;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let dp = full(&ell.center);
        let (kind, s, g) = if problem.active[0] && dp.lambda < 0.0 {
            (CutKind::Lambda, [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0], f64::NAN)
        } else if dp.nu < 0.0 {
            (CutKind::Nu, [0.0, -1.0, 0.0, 0.0, 0.0, 0.0], f64::NAN)
        } else if let Some(s) = problem.active[2].then(|| DualProblem::z_cut(&dp)).flatten() {
            (CutKind::Z, s, f64::NAN)
        } else {
            match problem.probe(&dp, opts.null_tol) {
                Probe::Unbounded { q, kind } => (kind, problem.d_cut(&q), f64::NAN),
                Probe::Value(ev) => {
                    if ev.g < upper {
                        upper = ev.g;
                        best = Some(dp);
                    }
                    if let Some(h) = hook.as_deref_mut() {
                        primal = h(&dp, &ev);
                    }
                    (CutKind::Objective, ev.subgradient, ev.g)
                }
            }
        };
        let width = ell.cut(&restrict(s));
        if kind == CutKind::Objective {
            if let Some(w) = width {
                lower = lower.max(g - w);
            }
        }
        if opts.record_trace {
            trace.push(IterateRecord { iteration: trace.len() + 1, cut: kind, g, upper, lower });
        }
        if width.is_none() {
            log::debug!("ellipsoid degenerated after {it} iterations");
            break;
        }
        if kind != CutKind::Objective {
            continue;
        }
        let scale = upper.abs().max(1.0);
        let dual_gap = upper - lower;
        if hook.is_some() {
            if upper - primal <= opts.tol_dual * scale {
                converged = true;
                break;
            }
            if dual_gap <= DUAL_FLOOR * scale {
                break;
            }
        } else if dual_gap <= opts.tol_dual * scale {
            converged = true;
            break;
        }
    }
    let dual = best
        .ok_or_else(|| CreError::SolverFailure { message: "no dual-feasible point visited".into(), iterations: it })?;
    if hook.is_none() && !converged {
        return Err(CreError::SolverFailure {
            message: format!("ellipsoid stopped with dual uncertainty {:.3e} (best value {upper})", upper - lower),
            iterations: it,
        });
    }
    Ok(EllipsoidRun { dual, value: upper, lower_bound: lower, iterations: it, converged, trace: Vec::new() })
}

/// Minimizes the dual function; stops once the certified uncertainty on the
/// dual optimum is below `tol_dual · max(1, |g|)`.
pub fn ellipsoid_solve(cfg: &ScenarioConfig, th: &Thresholds, opts: &SolverOptions) -> Result<EllipsoidRun> {
    cfg.validate()?;
    run(&DualProblem::new(cfg, th), opts, None)
}
