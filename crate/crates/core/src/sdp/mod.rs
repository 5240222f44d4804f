//! Small dense conic solver over products of Hermitian PSD blocks, plus the
//! Frank-Wolfe rate oracle built on top of it.
//!
//! Programs are stated in terms of real-linear functionals
//! `f(X) = Σ_b tr(C_b X_b)` with Hermitian `C_b`, so every constraint is
//! real-valued on Hermitian inputs.

mod admm;
mod frank_wolfe;
mod programs;

pub use admm::{SdpOptions, WarmStart};
pub use frank_wolfe::{frank_wolfe_rate_max, FrankWolfeOptions, FrankWolfeResult};
pub use programs::{c_min_sdp, solve_ce_edge};
pub(crate) use programs::{completion_program, p1_program, P1Program};

use crate::error::Result;
use crate::linalg::{c, CMatrix, Hermitian};

/// `Σ_b tr(C_b X_b)` over a subset of the program's blocks.
#[derive(Debug, Clone, Default)]
pub struct LinearFunctional {
    pub terms: Vec<(usize, Hermitian)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(block: usize, coeff: Hermitian) -> Self {
        LinearFunctional { terms: vec![(block, coeff)] }
    }

    pub fn with(mut self, block: usize, coeff: Hermitian) -> Self {
        self.terms.push((block, coeff));
        self
    }

    pub fn eval(&self, blocks: &[Hermitian]) -> f64 {
        self.terms.iter().map(|(b, coeff)| coeff.inner(&blocks[*b])).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        LinearFunctional { terms: self.terms.iter().map(|(b, m)| (*b, m.scale(s))).collect() }
    }
}

/// Hermitian coefficient `C` with `tr(C X) = Re X[i][j]` for Hermitian `X`.
pub fn entry_re(n: usize, i: usize, j: usize) -> Hermitian {
    let mut m = CMatrix::zeros(n, n);
    if i == j {
        m[(i, i)] = c(1.0);
    } else {
        m[(i, j)] = c(0.5);
        m[(j, i)] = c(0.5);
    }
    Hermitian::symmetrize(m)
}

/// Hermitian coefficient `C` with `tr(C X) = Im X[i][j]` for Hermitian `X`, `i != j`.
pub fn entry_im(n: usize, i: usize, j: usize) -> Hermitian {
    let mut m = CMatrix::zeros(n, n);
    m[(j, i)] = num_complex::Complex64::new(0.0, -0.5);
    m[(i, j)] = num_complex::Complex64::new(0.0, 0.5);
    Hermitian::symmetrize(m)
}

/// Hermitian and skew parts of a general `B`: `tr(B X) = tr(B_h X) + j tr(B_k X)`.
pub fn split_functional(b: &CMatrix) -> (Hermitian, Hermitian) {
    let adj = b.adjoint();
    let h = Hermitian::symmetrize((b + &adj) * c(0.5));
    let k = Hermitian::symmetrize((b - &adj) * num_complex::Complex64::new(0.0, -0.5));
    (h, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub functional: LinearFunctional,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize (or minimize) objective s.t. constraints, X_b ⪰ 0 for every block`.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub blocks: Vec<usize>,
    pub objective: LinearFunctional,
    pub maximize: bool,
    pub constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(blocks: Vec<usize>) -> Self {
        ConicProgram { blocks, objective: LinearFunctional::new(), maximize: true, constraints: Vec::new() }
    }

    pub fn constrain(&mut self, functional: LinearFunctional, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { functional, sense, rhs });
    }

    /// Largest constraint violation of `blocks` (ignores the cone).
    pub fn max_violation(&self, blocks: &[Hermitian]) -> f64 {
        self.constraints
            .iter()
            .map(|k| {
                let v = k.functional.eval(blocks) - k.rhs;
                match k.sense {
                    Sense::Le => v.max(0.0),
                    Sense::Ge => (-v).max(0.0),
                    Sense::Eq => v.abs(),
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub blocks: Vec<Hermitian>,
    pub value: f64,
    /// `‖A z − b‖` over row-normalized constraints.
    pub primal_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum SdpOutcome {
    Optimal(SdpSolution),
    Infeasible,
    Unbounded,
}

impl SdpOutcome {
    pub fn optimal(self) -> Option<SdpSolution> {
        match self {
            SdpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Solves a linear conic program by operator splitting.
pub fn solve_linear_sdp(p: &ConicProgram, opts: &SdpOptions) -> Result<SdpOutcome> {
    admm::solve(p, opts, None)
}

/// As [`solve_linear_sdp`], reusing and updating the splitting state in `warm`.
/// The warm state is only valid across programs with identical structure.
pub fn solve_linear_sdp_warm(p: &ConicProgram, opts: &SdpOptions, warm: &mut Option<WarmStart>) -> Result<SdpOutcome> {
    admm::solve(p, opts, Some(warm))
}

#[derive(Debug, Clone)]
pub enum Feasibility {
    /// `margin` is the largest uniform slack found (negative values within
    /// tolerance are reported as feasible on the boundary).
    Feasible {
        blocks: Vec<Hermitian>,
        margin: f64,
    },
    Infeasible {
        margin: Option<f64>,
    },
}

/// Phase-1 search: maximizes a uniform slack `s` by which every inequality
/// holds strictly and every block marked in `strict` exceeds `s I`.
/// The slack is capped at 1.
pub fn solve_feasibility(p: &ConicProgram, strict: &[bool], opts: &SdpOptions) -> Result<Feasibility> {
    assert_eq!(strict.len(), p.blocks.len());
    let t = p.blocks.len();
    let mut q = ConicProgram::new(p.blocks.iter().cloned().chain([1]).collect());
    q.objective = LinearFunctional::single(t, Hermitian::identity(1));
    let one = |v: f64| Hermitian::from_real_diagonal(&[v]);
    // s = t − 1, so s ≥ −1 is implied by t ⪰ 0.
    for k in &p.constraints {
        let mut f = k.functional.clone();
        let mut shift: f64 =
            k.functional.terms.iter().filter(|(b, _)| strict[*b]).map(|(_, coeff)| coeff.trace()).sum();
        let mut rhs = k.rhs;
        match k.sense {
            Sense::Le => shift += 1.0,
            Sense::Ge => shift -= 1.0,
            Sense::Eq => {}
        }
        if shift != 0.0 {
            f = f.with(t, one(shift));
            rhs += shift;
        }
        q.constrain(f, k.sense, rhs);
    }
    q.constrain(LinearFunctional::single(t, one(1.0)), Sense::Le, 2.0);
    match admm::solve(&q, opts, None)? {
        SdpOutcome::Optimal(sol) => {
            let s = sol.blocks[t].trace() - 1.0;
            let blocks: Vec<Hermitian> = sol.blocks[..t]
                .iter()
                .zip(strict)
                .map(|(b, &st)| if st { b.add(&Hermitian::identity(b.dim()).scale(s)) } else { b.clone() })
                .collect();
            if s >= -feasibility_slack(opts) {
                Ok(Feasibility::Feasible { blocks, margin: s })
            } else {
                Ok(Feasibility::Infeasible { margin: Some(s) })
            }
        }
        SdpOutcome::Infeasible => Ok(Feasibility::Infeasible { margin: None }),
        SdpOutcome::Unbounded => unreachable!("phase-1 slack is bounded above"),
    }
}

/// Margin below zero still treated as (boundary) feasible.
pub(crate) fn feasibility_slack(opts: &SdpOptions) -> f64 {
    100.0 * opts.tol
}
