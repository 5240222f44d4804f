//! Conic programs over the normalized rate-maximization feasible set.

use super::{
    entry_im, entry_re, solve_linear_sdp, split_functional, ConicProgram, LinearFunctional, SdpOptions, SdpOutcome,
    Sense,
};
use crate::constraints::NormThresholds;
use crate::error::{CreError, InfeasibleReason, Result};
use crate::linalg::{CMatrix, Hermitian};
use crate::model::{evaluate, CrePoint, NormalizedProblem, ScenarioConfig, TransmitCovariance};

/// `{X ⪰ 0 : tr X ≤ 1, tr(W_eh X) ≥ γ, Schur(X, τ) ⪰ 0}` with the Schur block
/// carried as an auxiliary 2x2 block `Y` tied to `X` by equalities.
pub(crate) struct P1Program {
    pub program: ConicProgram,
}

impl P1Program {
    pub const X: usize = 0;
    pub const Y: usize = 1;
}

/// Adds `Y = Schur(C(X), τ)` where the Fisher terms are read through the
/// congruence `X = Q B Qᴴ` (`q = None` means `X = B`).
fn tie_schur(
    p: &mut ConicProgram,
    np: &NormalizedProblem,
    q: Option<&CMatrix>,
    xb: usize,
    yb: usize,
    tau: f64,
    t_block: Option<usize>,
) {
    let pull = |h: &Hermitian| -> Hermitian {
        match q {
            Some(q) => h.congruence(&q.adjoint()),
            None => h.clone(),
        }
    };
    let (da_re, da_im) = split_functional(&np.w_da);
    let w_dd = pull(&np.w_dd);
    let w_aa = pull(&np.w_aa);
    let da_re = pull(&da_re);
    let da_im = pull(&da_im);

    // Y11 = tr(W_dd X) − τ (− t when the threshold itself is a variable)
    let mut f = LinearFunctional::single(yb, entry_re(2, 0, 0)).with(xb, w_dd.scale(-1.0));
    if let Some(t) = t_block {
        f = f.with(t, Hermitian::identity(1));
    }
    p.constrain(f, Sense::Eq, -tau);
    p.constrain(LinearFunctional::single(yb, entry_re(2, 1, 1)).with(xb, w_aa.scale(-1.0)), Sense::Eq, 0.0);
    p.constrain(LinearFunctional::single(yb, entry_re(2, 1, 0)).with(xb, da_re.scale(-1.0)), Sense::Eq, 0.0);
    p.constrain(LinearFunctional::single(yb, entry_im(2, 1, 0)).with(xb, da_im.scale(-1.0)), Sense::Eq, 0.0);
}

pub(crate) fn p1_program(np: &NormalizedProblem, th: &NormThresholds) -> P1Program {
    let m = np.m;
    let mut blocks = vec![m];
    if th.tau.is_some() {
        blocks.push(2);
    }
    let mut p = ConicProgram::new(blocks);
    p.constrain(LinearFunctional::single(P1Program::X, Hermitian::identity(m)), Sense::Le, 1.0);
    if th.gamma > 0.0 {
        p.constrain(LinearFunctional::single(P1Program::X, np.w_eh.clone()), Sense::Ge, th.gamma);
    }
    if let Some(tau) = th.tau {
        tie_schur(&mut p, np, None, P1Program::X, P1Program::Y, tau, None);
    }
    P1Program { program: p }
}

/// Completion of a given leading block: variables `B = [[B11, B10], [B10ᴴ, B00]]`
/// in the basis `q = [Q1 Q0]`, maximizing `t` subject to `B11 ⪰ t s11` and
/// the feasible-set constraints on `X = q B qᴴ`. Dominating `t s11` instead of
/// pinning `B11 = s11` keeps the program feasible when `s11` comes from an
/// inexact dual point. Block 0 is `B`; the last two blocks are the slack of
/// the dominance and `t`.
pub(crate) fn completion_program(
    np: &NormalizedProblem,
    th: &NormThresholds,
    q: &CMatrix,
    s11: &Hermitian,
) -> ConicProgram {
    let m = np.m;
    let r = s11.dim();
    let mut blocks = vec![m];
    if th.tau.is_some() {
        blocks.push(2);
    }
    let slack = blocks.len();
    let t = slack + 1;
    blocks.extend([r, 1]);
    let mut p = ConicProgram::new(blocks);
    p.constrain(LinearFunctional::single(0, Hermitian::identity(m)), Sense::Le, 1.0);
    if th.gamma > 0.0 {
        p.constrain(LinearFunctional::single(0, np.w_eh.congruence(&q.adjoint())), Sense::Ge, th.gamma);
    }
    if let Some(tau) = th.tau {
        tie_schur(&mut p, np, Some(q), 0, 1, tau, None);
    }
    let s = s11.as_matrix();
    let one = |v: f64| Hermitian::from_real_diagonal(&[v]);
    for j in 0..r {
        for i in j..r {
            let re = LinearFunctional::single(0, entry_re(m, i, j))
                .with(slack, entry_re(r, i, j).scale(-1.0))
                .with(t, one(-s[(i, j)].re));
            p.constrain(re, Sense::Eq, 0.0);
            if i != j {
                let im = LinearFunctional::single(0, entry_im(m, i, j))
                    .with(slack, entry_im(r, i, j).scale(-1.0))
                    .with(t, one(-s[(i, j)].im));
                p.constrain(im, Sense::Eq, 0.0);
            }
        }
    }
    p.constrain(LinearFunctional::single(t, one(1.0)), Sense::Le, 1.0);
    p.objective = LinearFunctional::single(t, one(1.0));
    p
}

/// Minimum-CRB covariance by SDP: maximize `t` subject to the Schur block
/// with `1/Γ_S,1` replaced by `t`.
pub fn c_min_sdp(cfg: &ScenarioConfig, opts: &SdpOptions) -> Result<TransmitCovariance> {
    let np = NormalizedProblem::new(cfg);
    let m = np.m;
    let mut p = ConicProgram::new(vec![m, 2, 1]);
    p.constrain(LinearFunctional::single(0, Hermitian::identity(m)), Sense::Le, 1.0);
    tie_schur(&mut p, &np, None, 0, 1, 0.0, Some(2));
    p.objective = LinearFunctional::single(2, Hermitian::identity(1));
    match solve_linear_sdp(&p, opts)? {
        SdpOutcome::Optimal(sol) => {
            let x = &sol.blocks[0];
            let x = x.scale(1.0 / x.trace().max(1.0));
            Ok(np.to_physical(&x))
        }
        other => Err(CreError::SolverFailure { message: format!("C-min SDP returned {other:?}"), iterations: 0 }),
    }
}

/// Maximum harvested energy subject to `CRB ≤ gamma_s` and the power budget.
pub fn solve_ce_edge(cfg: &ScenarioConfig, gamma_s: f64, opts: &SdpOptions) -> Result<(TransmitCovariance, CrePoint)> {
    let sm = cfg.sensing();
    if gamma_s.is_infinite() {
        let v = crate::vertices::e_max(cfg)?;
        return Ok((v.covariance, v.point));
    }
    let cmin = crate::vertices::c_min(cfg)?;
    if gamma_s < cmin.point.crb * (1.0 - 1e-9) {
        return Err(CreError::Infeasible(InfeasibleReason::Crb));
    }
    // At the threshold itself the feasible set collapses to the minimizer.
    if gamma_s <= cmin.point.crb * (1.0 + 1e-9) {
        return Ok((cmin.covariance, cmin.point));
    }
    let np = NormalizedProblem::new(cfg);
    let th = NormThresholds { gamma: 0.0, tau: Some(np.crb_threshold(gamma_s)) };
    let mut prog = p1_program(&np, &th).program;
    prog.objective = LinearFunctional::single(P1Program::X, np.w_eh.clone());
    let sol = match solve_linear_sdp(&prog, opts)? {
        SdpOutcome::Optimal(s) => s,
        SdpOutcome::Infeasible => return Err(CreError::Infeasible(InfeasibleReason::Crb)),
        SdpOutcome::Unbounded => unreachable!("trace-bounded program"),
    };
    let mut x = sol.blocks[P1Program::X].clone();
    x = x.scale(1.0 / x.trace().max(1.0));
    // Pull the solver's residual violation of the CRB constraint back inside
    // by mixing in the minimizer, which has slack whenever gamma_s > CRB_min.
    let anchor = np.from_physical(&cmin.covariance);
    if let Some((fixed, _)) = crate::constraints::mix_to_feasible(&np, &th, &x, &anchor) {
        x = fixed;
    }
    let s = np.to_physical(&x);
    let point = evaluate(&s, &sm, cfg)?;
    Ok((s, point))
}
