//! Independent oracle for rate maximization under the energy and CRB
//! constraints: Frank-Wolfe over the convex feasible set, with the linear
//! subproblem solved by the conic backend.

use super::{solve_feasibility, solve_linear_sdp_warm, Feasibility, LinearFunctional, SdpOptions, SdpOutcome};
use crate::constraints::{mix_to_feasible, Thresholds};
use crate::error::{CreError, InfeasibleReason, Result};
use crate::linalg::Hermitian;
use crate::model::{NormalizedProblem, ScenarioConfig, TransmitCovariance};
use crate::sdp::{p1_program, P1Program};

#[derive(Debug, Clone)]
pub struct FrankWolfeOptions {
    /// Stop when the Frank-Wolfe gap is below `tol · max(1, rate)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Settings for the linear subproblems; these become degenerate near the
    /// optimum, so a capped best-effort solve is the default.
    pub sdp: SdpOptions,
}

impl Default for FrankWolfeOptions {
    fn default() -> Self {
        FrankWolfeOptions {
            tol: 1e-4,
            max_iter: 5000,
            sdp: SdpOptions { tol: 1e-6, max_iter: 20_000, best_effort: true, ..SdpOptions::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrankWolfeResult {
    pub covariance: TransmitCovariance,
    /// bps/Hz
    pub rate: f64,
    /// Last Frank-Wolfe gap, an upper bound on the suboptimality (bps/Hz).
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Rate after every iteration.
    pub history: Vec<f64>,
}

/// Maximizes `φ(η) = R(X + η D)` over `[0, eta_max]` by bisection on `φ'`.
fn line_search(np: &NormalizedProblem, x: &Hermitian, d: &Hermitian, eta_max: f64) -> f64 {
    let slope = |eta: f64| np.rate_gradient(&x.add(&d.scale(eta))).inner(d);
    if slope(eta_max) >= 0.0 {
        return eta_max;
    }
    let (mut lo, mut hi) = (0.0, eta_max);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Convex combination of atoms returned by the linear subproblem.
struct ActiveSet {
    atoms: Vec<Hermitian>,
    weights: Vec<f64>,
}

impl ActiveSet {
    fn point(&self) -> Hermitian {
        let m = self.atoms[0].dim();
        self.atoms.iter().zip(&self.weights).fold(Hermitian::zeros(m), |acc, (a, w)| acc.add(&a.scale(*w)))
    }

    fn prune(&mut self) {
        let keep: Vec<bool> = self.weights.iter().map(|&w| w > 1e-14).collect();
        let mut k = keep.iter();
        self.atoms.retain(|_| *k.next().unwrap());
        self.weights.retain(|&w| w > 1e-14);
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
    }

    /// Away-step Frank-Wolfe over the simplex of atom weights. Cheap: the
    /// linear subproblem over a simplex is a maximum over the atoms.
    fn correct(&mut self, np: &NormalizedProblem, tol: f64, max_iter: usize) {
        for _ in 0..max_iter {
            let x = self.point();
            let grad = np.rate_gradient(&x);
            let scores: Vec<f64> = self.atoms.iter().map(|a| grad.inner(a)).collect();
            let here: f64 = scores.iter().zip(&self.weights).map(|(s, w)| s * w).sum();
            let (best, &s_best) = scores.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let (worst, &s_worst) = scores
                .iter()
                .enumerate()
                .filter(|(i, _)| self.weights[*i] > 0.0)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            let fw_gap = s_best - here;
            if fw_gap <= tol {
                break;
            }
            if fw_gap >= here - s_worst {
                let d = self.atoms[best].sub(&x);
                let eta = line_search(np, &x, &d, 1.0);
                self.weights.iter_mut().for_each(|w| *w *= 1.0 - eta);
                self.weights[best] += eta;
            } else {
                let aw = self.weights[worst];
                if aw >= 1.0 {
                    break;
                }
                let eta_max = aw / (1.0 - aw);
                let d = x.sub(&self.atoms[worst]);
                let eta = line_search(np, &x, &d, eta_max);
                self.weights.iter_mut().for_each(|w| *w *= 1.0 + eta);
                self.weights[worst] -= eta;
                if eta >= eta_max {
                    self.weights[worst] = 0.0;
                }
            }
        }
        self.prune();
    }
}

/// Fully corrective Frank-Wolfe: every outer step adds the solution of the
/// linear subproblem (a warm-started SDP over the feasible set) as an atom,
/// then re-optimizes the weights over all atoms kept so far.
pub fn frank_wolfe_rate_max(
    cfg: &ScenarioConfig,
    th: &Thresholds,
    opts: &FrankWolfeOptions,
) -> Result<FrankWolfeResult> {
    let np = NormalizedProblem::new(cfg);
    let nth = th.normalized(&np);
    if nth.gamma > 1.0 + 1e-9 {
        return Err(CreError::Infeasible(InfeasibleReason::Energy));
    }
    let prog = p1_program(&np, &nth);
    let strict: Vec<bool> = prog.program.blocks.iter().map(|_| true).collect();
    let phase1 = SdpOptions { best_effort: false, ..opts.sdp.clone() };
    let start = match solve_feasibility(&prog.program, &strict, &phase1)? {
        Feasibility::Feasible { blocks, .. } => blocks[P1Program::X].clone(),
        Feasibility::Infeasible { .. } => return Err(CreError::Infeasible(InfeasibleReason::Joint)),
    };
    let mut x = start.scale(1.0 / start.trace().max(1.0));

    // Starting from the unconstrained optimum, when it is feasible, saves
    // iterations on loose thresholds.
    let rmax = crate::vertices::r_max(cfg)?;
    let xr = np.from_physical(&rmax.covariance);
    if let Some((xr, _)) = mix_to_feasible(&np, &nth, &xr, &x) {
        if np.rate(&xr) > np.rate(&x) {
            x = xr;
        }
    }

    let mut active = ActiveSet { atoms: vec![x.clone()], weights: vec![1.0] };
    let mut program = prog.program;
    let mut warm = None;
    let mut rate = np.rate(&x);
    let mut history = vec![rate];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let grad = np.rate_gradient(&x);
        program.objective = LinearFunctional::single(P1Program::X, grad.clone());
        let s = match solve_linear_sdp_warm(&program, &opts.sdp, &mut warm)? {
            SdpOutcome::Optimal(sol) => sol.blocks[P1Program::X].clone(),
            other => {
                return Err(CreError::SolverFailure {
                    message: format!("linear subproblem returned {other:?}"),
                    iterations: it,
                })
            }
        };
        let s = s.scale(1.0 / s.trace().max(1.0));
        gap = grad.inner(&s.sub(&x));
        let target = opts.tol * rate.max(1.0);
        if gap <= target {
            converged = true;
            break;
        }
        active.atoms.push(s);
        active.weights.push(0.0);
        active.correct(&np, 0.1 * target, 10_000);
        let next = active.point();
        let next_rate = np.rate(&next);
        if next_rate >= rate {
            x = next;
            rate = next_rate;
        }
        history.push(rate);
    }
    if !converged {
        log::warn!("Frank-Wolfe stopped at the iteration cap with gap {gap:.3e}");
    }
    Ok(FrankWolfeResult { covariance: np.to_physical(&x), rate, gap, iterations, converged, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::random_config;
    use crate::vertices::{e_max, r_max};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unconstrained_matches_water_filling() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let cfg = random_config(&mut rng, 4, 5, 3, 2);
        let res = frank_wolfe_rate_max(&cfg, &Thresholds::none(), &FrankWolfeOptions::default()).unwrap();
        let rm = r_max(&cfg).unwrap();
        assert!((res.rate - rm.point.rate).abs() <= 1e-4 * rm.point.rate);
    }

    #[test]
    fn rate_sequence_is_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let cfg = random_config(&mut rng, 4, 5, 2, 2);
        let em = e_max(&cfg).unwrap();
        let th = Thresholds::new(0.6 * em.point.energy, f64::INFINITY).unwrap();
        let res = frank_wolfe_rate_max(&cfg, &th, &FrankWolfeOptions::default()).unwrap();
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert!(res.converged, "gap {}", res.gap);
        assert!(th.admits(&res.covariance, &cfg));
    }

    #[test]
    fn infeasible_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let cfg = random_config(&mut rng, 4, 5, 2, 2);
        let em = e_max(&cfg).unwrap();
        let th = Thresholds::new(2.0 * em.point.energy, f64::INFINITY).unwrap();
        assert!(matches!(
            frank_wolfe_rate_max(&cfg, &th, &FrankWolfeOptions::default()),
            Err(CreError::Infeasible(InfeasibleReason::Energy))
        ));
    }
}
