//! Douglas-Rachford splitting between the affine set `{x : A x = b}` and the
//! cone `K` (PSD blocks × nonnegative slacks), with over-relaxation.
//!
//! Hermitian blocks are vectorized isometrically (diagonal, then `√2 Re` and
//! `√2 Im` of the strictly lower triangle) so that `⟨svec C, svec X⟩ = tr(C X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{ConicProgram, SdpOutcome, SdpSolution, Sense};
use crate::error::{CreError, Result};
use crate::linalg::{psd_project, CMatrix, Hermitian};

#[derive(Debug, Clone)]
pub struct SdpOptions {
    /// Residual tolerance on the row-normalized problem.
    pub tol: f64,
    pub max_iter: usize,
    /// Penalty parameter.
    pub rho: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub alpha: f64,
    /// Iterations without progress before declaring infeasibility.
    pub stall_window: usize,
    /// Rebalance `rho` from the residual ratio every this many iterations
    /// (0 keeps it fixed).
    pub adapt_every: usize,
    /// Return the last iterate instead of failing when `max_iter` is hit.
    pub best_effort: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-8,
            max_iter: 100_000,
            rho: 1.0,
            alpha: 1.6,
            stall_window: 500,
            adapt_every: 50,
            best_effort: false,
        }
    }
}

/// Splitting state carried between solves of structurally identical programs.
#[derive(Debug, Clone)]
pub struct WarmStart {
    z: DVector<f64>,
    u: DVector<f64>,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn svec_write(h: &CMatrix, out: &mut [f64]) {
    let n = h.nrows();
    let mut k = 0;
    for i in 0..n {
        out[k] = h[(i, i)].re;
        k += 1;
    }
    for j in 0..n {
        for i in j + 1..n {
            out[k] = SQRT2 * h[(i, j)].re;
            out[k + 1] = SQRT2 * h[(i, j)].im;
            k += 2;
        }
    }
}

fn smat(v: &[f64], n: usize) -> Hermitian {
    let mut m = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = Complex64::new(v[i], 0.0);
        k += 1;
    }
    for j in 0..n {
        for i in j + 1..n {
            let z = Complex64::new(v[k], v[k + 1]) / SQRT2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    Hermitian::symmetrize(m)
}

struct Layout {
    offsets: Vec<usize>,
    dims: Vec<usize>,
    /// Index of the first slack variable.
    slack_start: usize,
    n: usize,
}

impl Layout {
    fn project_cone(&self, v: &mut DVector<f64>) {
        for (b, &d) in self.dims.iter().enumerate() {
            let o = self.offsets[b];
            let seg = &mut v.as_mut_slice()[o..o + d * d];
            if d == 1 {
                seg[0] = seg[0].max(0.0);
                continue;
            }
            let p = psd_project(&smat(seg, d));
            svec_write(p.as_matrix(), seg);
        }
        for x in v.as_mut_slice()[self.slack_start..].iter_mut() {
            *x = x.max(0.0);
        }
    }

    fn blocks(&self, v: &DVector<f64>) -> Vec<Hermitian> {
        self.dims
            .iter()
            .enumerate()
            .map(|(b, &d)| smat(&v.as_slice()[self.offsets[b]..self.offsets[b] + d * d], d))
            .collect()
    }
}

struct Standardized {
    layout: Layout,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    /// `(A A^T)^+ A` and `(A A^T)^+ b` for the affine projection.
    pinv_a: DMatrix<f64>,
    pinv_b: DVector<f64>,
}

fn standardize(p: &ConicProgram) -> std::result::Result<Standardized, SdpOutcome> {
    let mut offsets = Vec::with_capacity(p.blocks.len());
    let mut n = 0;
    for &d in &p.blocks {
        offsets.push(n);
        n += d * d;
    }
    let slack_start = n;
    let n_slack = p.constraints.iter().filter(|k| k.sense != Sense::Eq).count();
    n += n_slack;
    let layout = Layout { offsets, dims: p.blocks.clone(), slack_start, n };

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p.constraints.len());
    let mut slack = slack_start;
    let mut buf = vec![0.0; n];
    for k in &p.constraints {
        let mut row = vec![0.0; n];
        for (blk, coeff) in &k.functional.terms {
            let d = p.blocks[*blk];
            let o = layout.offsets[*blk];
            svec_write(coeff.as_matrix(), &mut buf[..d * d]);
            for (r, v) in row[o..o + d * d].iter_mut().zip(&buf[..d * d]) {
                *r += v;
            }
        }
        match k.sense {
            Sense::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            Sense::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Sense::Eq => {}
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            if k.rhs.abs() > 0.0 {
                return Err(SdpOutcome::Infeasible);
            }
            continue;
        }
        rows.push((row.iter().map(|v| v / norm).collect(), k.rhs / norm));
    }
    let m = rows.len();
    let a = DMatrix::from_fn(m, n, |i, j| rows[i].0[j]);
    let b = DVector::from_fn(m, |i, _| rows[i].1);

    let mut c = DVector::zeros(n);
    for (blk, coeff) in &p.objective.terms {
        let d = p.blocks[*blk];
        let o = layout.offsets[*blk];
        svec_write(coeff.as_matrix(), &mut buf[..d * d]);
        for (r, v) in c.as_mut_slice()[o..o + d * d].iter_mut().zip(&buf[..d * d]) {
            *r += v;
        }
    }
    // The splitting minimizes.
    if p.maximize {
        c.neg_mut();
    }
    let c_norm = c.norm();
    if c_norm > 0.0 {
        c /= c_norm;
    }

    let (pinv_a, pinv_b) = if m == 0 {
        (DMatrix::zeros(0, n), DVector::zeros(0))
    } else {
        let gram = &a * a.transpose();
        let eig = SymmetricEigen::new(gram);
        let wmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let inv = eig.eigenvalues.map(|w| if w > 1e-12 * wmax { 1.0 / w } else { 0.0 });
        let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
        // Inconsistent equalities: b must lie in range(A).
        let resid = &a * a.transpose() * (&pinv * &b) - &b;
        if resid.norm() > 1e-9 * (1.0 + b.norm()) {
            return Err(SdpOutcome::Infeasible);
        }
        (&pinv * &a, &pinv * &b)
    };
    Ok(Standardized { layout, a, b, c, pinv_a, pinv_b })
}

pub(super) fn solve(p: &ConicProgram, opts: &SdpOptions, warm: Option<&mut Option<WarmStart>>) -> Result<SdpOutcome> {
    let st = match standardize(p) {
        Ok(s) => s,
        Err(outcome) => return Ok(outcome),
    };
    let n = st.layout.n;
    let mut rho = opts.rho;
    let alpha = opts.alpha;

    let (mut z, mut u) = match warm.as_ref().and_then(|w| w.as_ref()) {
        Some(w) if w.z.len() == n => (w.z.clone(), w.u.clone()),
        _ => (DVector::zeros(n), DVector::zeros(n)),
    };

    let project_affine = |v: &DVector<f64>| -> DVector<f64> {
        if st.a.nrows() == 0 {
            return v.clone();
        }
        let corr = &st.pinv_a * v - &st.pinv_b;
        v - st.a.transpose() * corr
    };

    let unbounded_norm = 1e4 * (1.0 + st.b.norm());
    let mut stall_ref = f64::INFINITY;
    let mut stall_count = 0usize;
    let mut stall_u = u.clone();

    for it in 1..=opts.max_iter {
        let x = project_affine(&(&z - &u - &st.c / rho));
        let xh = &x * alpha + &z * (1.0 - alpha);
        let mut z_new = &xh + &u;
        st.layout.project_cone(&mut z_new);
        u += &xh - &z_new;

        let r_p = (&x - &z_new).norm();
        let r_d = rho * (&z_new - &z).norm();
        z = z_new;
        let scale = 1.0 + z.norm();
        if r_p <= opts.tol * scale && r_d <= opts.tol * scale {
            if let Some(w) = warm {
                *w = Some(WarmStart { z: z.clone(), u: u.clone() });
            }
            let blocks = st.layout.blocks(&z);
            let value = p.objective.eval(&blocks);
            let primal_residual = (&st.a * &z - &st.b).norm();
            return Ok(SdpOutcome::Optimal(SdpSolution { blocks, value, primal_residual, iterations: it }));
        }

        if opts.adapt_every > 0 && it % opts.adapt_every == 0 && r_p > 0.0 && r_d > 0.0 {
            let ratio = (r_p / r_d).sqrt();
            if !(0.2..=5.0).contains(&ratio) {
                let next = (rho * ratio).clamp(1e-6, 1e6);
                if next != rho {
                    // `u` is the dual variable scaled by 1/rho.
                    u *= rho / next;
                    rho = next;
                    stall_ref = f64::INFINITY;
                    stall_count = 0;
                    stall_u.copy_from(&u);
                }
            }
        }

        if z.norm() > unbounded_norm {
            return Ok(SdpOutcome::Unbounded);
        }

        // Infeasible programs keep a constant gap between the two sets while
        // the scaled dual variable drifts linearly.
        if r_p < 0.99 * stall_ref {
            stall_ref = r_p;
            stall_count = 0;
            stall_u.copy_from(&u);
        } else {
            stall_count += 1;
            if stall_count >= opts.stall_window && r_p > 100.0 * opts.tol * scale {
                let drift = (&u - &stall_u).norm();
                if drift > 0.1 * stall_count as f64 * r_p {
                    return Ok(SdpOutcome::Infeasible);
                }
                stall_ref = r_p;
                stall_count = 0;
                stall_u.copy_from(&u);
            }
        }
    }
    let r_final = (&st.a * &z - &st.b).norm();
    if opts.best_effort {
        log::debug!("conic solver returning its last iterate (primal residual {r_final:.3e})");
        let blocks = st.layout.blocks(&z);
        let value = p.objective.eval(&blocks);
        return Ok(SdpOutcome::Optimal(SdpSolution {
            blocks,
            value,
            primal_residual: r_final,
            iterations: opts.max_iter,
        }));
    }
    Err(CreError::SolverFailure {
        message: format!("conic solver did not converge (primal residual {r_final:.3e})"),
        iterations: opts.max_iter,
    })
}
