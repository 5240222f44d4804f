use super::dual::{DualEvaluation, DualPoint, DualProblem, Probe};
use super::ellipsoid::{self, IterateRecord};
use super::SolverOptions;
use crate::constraints::{mix_to_feasible, NormThresholds, Slacks, Thresholds, THRESHOLD_SLACK};
use crate::error::{CreError, InfeasibleReason, Result};
use crate::linalg::Hermitian;
use crate::model::{evaluate, CrePoint, NormalizedProblem, ScenarioConfig, TransmitCovariance};
use crate::sdp::{
    completion_program, p1_program, solve_feasibility, solve_linear_sdp, Feasibility, P1Program, SdpOptions, SdpOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibilityVerdict {
    /// `margin` is the uniform slack of the best interior point found
    /// (normalized units); zero or slightly negative on the boundary.
    Feasible {
        margin: f64,
    },
    Infeasible(InfeasibleReason),
}

#[derive(Debug, Clone)]
pub struct P1Solution {
    pub s_opt: TransmitCovariance,
    /// bps/Hz
    pub rate: f64,
    pub point: CrePoint,
    pub dual_opt: DualPoint,
    /// Dual value at `dual_opt`, an upper bound on the optimal rate.
    pub dual_value: f64,
    pub duality_gap: f64,
    /// Whether the null-space blocks were found by the completion program.
    pub used_completion: bool,
    pub iterations: usize,
    pub trace: Vec<IterateRecord>,
}

/// Verdict plus a strictly feasible normalized point when one was found.
fn check(
    cfg: &ScenarioConfig,
    np: &NormalizedProblem,
    th: &Thresholds,
    nth: &NormThresholds,
    opts: &SdpOptions,
) -> Result<(FeasibilityVerdict, Option<Hermitian>)> {
    if th.energy_active() && nth.gamma > 1.0 + 1e-9 {
        return Ok((FeasibilityVerdict::Infeasible(InfeasibleReason::Energy), None));
    }
    if th.crb_active() {
        let cm = crate::vertices::c_min(cfg)?;
        if th.gamma_s < cm.point.crb * (1.0 - 1e-9) {
            return Ok((FeasibilityVerdict::Infeasible(InfeasibleReason::Crb), None));
        }
    }
    if !th.energy_active() && !th.crb_active() {
        let x = Hermitian::identity(np.m).scale(0.5 / np.m as f64);
        let margin = Slacks::of(np, nth, &x).min();
        return Ok((FeasibilityVerdict::Feasible { margin }, Some(x)));
    }
    let prog = p1_program(np, nth).program;
    let strict = vec![true; prog.blocks.len()];
    match solve_feasibility(&prog, &strict, opts)? {
        Feasibility::Feasible { blocks, margin } => {
            let x = &blocks[P1Program::X];
            let x = x.scale(1.0 / x.trace().max(1.0));
            let anchor = (Slacks::of(np, nth, &x).min() > 0.0).then_some(x);
            Ok((FeasibilityVerdict::Feasible { margin }, anchor))
        }
        Feasibility::Infeasible { .. } if th.energy_active() && th.crb_active() => {
            Ok((FeasibilityVerdict::Infeasible(InfeasibleReason::Joint), None))
        }
        // A single threshold inside its vertex range is feasible; the
        // backend only failed to certify a boundary case.
        Feasibility::Infeasible { .. } => Ok((FeasibilityVerdict::Feasible { margin: 0.0 }, None)),
    }
}

/// Decides whether the thresholds admit a covariance: vertex bounds first,
/// then a phase-1 conic solve when both constraints are active.
pub fn feasibility_check(cfg: &ScenarioConfig, th: &Thresholds, opts: &SdpOptions) -> Result<FeasibilityVerdict> {
    cfg.validate()?;
    let np = NormalizedProblem::new(cfg);
    Ok(check(cfg, &np, th, &th.normalized(&np), opts)?.0)
}

/// Makes a candidate feasible: mixing toward the anchor when there is one,
/// otherwise accepting it only within the reporting slack.
fn repair(np: &NormalizedProblem, th: &NormThresholds, anchor: Option<&Hermitian>, x: &Hermitian) -> Option<Hermitian> {
    let x = x.scale(1.0 / x.trace().max(1.0));
    match anchor {
        Some(a) => mix_to_feasible(np, th, &x, a).map(|(y, _)| y),
        None => {
            let relaxed = NormThresholds {
                gamma: th.gamma * (1.0 - THRESHOLD_SLACK),
                tau: th.tau.map(|t| t / (1.0 + THRESHOLD_SLACK)),
            };
            (Slacks::of(np, &relaxed, &x).min() >= -1e-12).then_some(x)
        }
    }
}

/// Splits of the spectrum of `D` worth trying as its null space: positions
/// below `1e-3 ‖D‖`, largest relative eigenvalue gap first.
fn null_splits(values: &[f64]) -> Vec<usize> {
    let dn = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut splits: Vec<(f64, usize)> = (1..values.len())
        .filter(|&r| values[r..].iter().all(|v| v.abs() <= 1e-3 * dn))
        .map(|r| {
            let tail = values[r..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (values[r - 1] / tail.max(1e-300), r)
        })
        .collect();
    splits.sort_by(|a, b| b.0.total_cmp(&a.0));
    splits.into_iter().map(|(_, r)| r).collect()
}

/// Fills the blocks of the covariance that live in the null space of `D`,
/// keeping (a scaled copy of) the leading block from the dual solution.
fn complete(
    problem: &DualProblem,
    dual: &DualPoint,
    anchor: Option<&Hermitian>,
    opts: &SolverOptions,
) -> Option<(Hermitian, f64)> {
    let np = &problem.np;
    let d = problem.d_matrix(dual);
    let values: Vec<f64> = d.eig().values.iter().cloned().collect();
    let dn = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sdp = SdpOptions { best_effort: true, max_iter: opts.sdp.max_iter.min(20_000), ..opts.sdp.clone() };
    let mut best: Option<(Hermitian, f64)> = None;
    for r in null_splits(&values).into_iter().take(2) {
        // Threshold halfway (geometrically) across the chosen gap.
        let tail = values[r..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let thr = (values[r - 1] * tail).sqrt().max(values[r - 1] * 1e-12) / dn;
        let Probe::Value(ev) = problem.probe(dual, thr) else { continue };
        let q = &ev.d_eig.vectors;
        let prog = completion_program(np, &problem.th, q, &ev.s11.scale(1.0 / np.power));
        let blocks = match solve_linear_sdp(&prog, &sdp) {
            Ok(SdpOutcome::Optimal(sol)) => sol.blocks,
            Ok(other) => {
                log::debug!("completion with {} null directions: {other:?}", values.len() - r);
                continue;
            }
            Err(e) => {
                log::debug!("completion with {} null directions failed: {e}", values.len() - r);
                continue;
            }
        };
        if let Some(x) = repair(np, &problem.th, anchor, &blocks[0].congruence(q)) {
            let rate = np.rate(&x);
            if best.as_ref().is_none_or(|b| rate > b.1) {
                best = Some((x, rate));
            }
        }
    }
    best
}

/// Maximizes the rate subject to the power budget, `energy ≥ gamma_eh` and
/// `CRB ≤ gamma_s` (either threshold may be dropped, see [`Thresholds`]).
pub fn solve_p1(cfg: &ScenarioConfig, th: &Thresholds, opts: &SolverOptions) -> Result<P1Solution> {
    cfg.validate()?;
    let problem = DualProblem::new(cfg, th);
    let np = &problem.np;
    let nth = &problem.th;
    let (verdict, anchor) = check(cfg, np, th, nth, &opts.sdp)?;
    if let FeasibilityVerdict::Infeasible(reason) = verdict {
        return Err(CreError::Infeasible(reason));
    }

    let mut best: Option<(Hermitian, f64)> = None;
    let run = {
        let mut hook = |_: &DualPoint, ev: &DualEvaluation| -> f64 {
            if let Some(x) = repair(np, nth, anchor.as_ref(), &ev.x_star) {
                let r = np.rate(&x);
                if best.as_ref().is_none_or(|b| r > b.1) {
                    best = Some((x, r));
                }
            }
            best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1)
        };
        ellipsoid::run(&problem, opts, Some(&mut hook))?
    };

    let target = opts.tol_dual * run.value.abs().max(1.0);
    let mut used_completion = false;
    let current = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1);
    if run.value - current > target {
        if let Some((x, r)) = complete(&problem, &run.dual, anchor.as_ref(), opts) {
            if r > current {
                best = Some((x, r));
                used_completion = true;
            }
        }
    }
    let (x, _) =
        best.ok_or_else(|| CreError::RecoveryFailure("no feasible covariance near the dual optimum".into()))?;
    let s = np.to_physical(&x);
    let point = evaluate(&s, &cfg.sensing(), cfg)?;
    let loose = 1e-5;
    if !s.satisfies_budget(cfg.power)
        || (th.energy_active() && point.energy < th.gamma_eh * (1.0 - loose))
        || (th.crb_active() && point.crb > th.gamma_s * (1.0 + loose))
    {
        return Err(CreError::RecoveryFailure(format!(
            "recovered covariance violates the thresholds (energy {:.6e} W, CRB {:.6e} rad²)",
            point.energy, point.crb
        )));
    }
    let gap = run.value - point.rate;
    if gap > target {
        if !run.converged && run.iterations >= opts.max_iter {
            return Err(CreError::SolverFailure {
                message: format!("duality gap {gap:.3e} at the iteration cap"),
                iterations: run.iterations,
            });
        }
        log::warn!("duality gap {gap:.3e} above target {target:.3e}");
    }
    Ok(P1Solution {
        s_opt: s,
        rate: point.rate,
        point,
        dual_opt: run.dual,
        dual_value: run.value,
        duality_gap: gap,
        used_completion,
        iterations: run.iterations,
        trace: run.trace,
    })
}
