use num_complex::Complex64;

use crate::constraints::{NormThresholds, Thresholds};
use crate::error::{CreError, Result};
use crate::linalg::{c, complex_svd, herm_eig, CMatrix, CVector, Hermitian, HermitianEig, RANK_EPS};
use crate::model::{NormalizedProblem, ScenarioConfig, SensingMatrices, TransmitCovariance};

/// Multipliers of the normalized problem: `lambda` for the energy constraint
/// (energy in units of `E_max`), `nu` for `tr X ≤ 1`, and the 2x2 matrix `Z`
/// for the Schur block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPoint {
    pub lambda: f64,
    pub nu: f64,
    pub z1: f64,
    pub z2: Complex64,
    pub z3: f64,
}

impl DualPoint {
    /// `(λ, ν, z1, Re z2, Im z2, z3)`
    pub fn from_vec(v: [f64; 6]) -> Self {
        DualPoint { lambda: v[0], nu: v[1], z1: v[2], z2: Complex64::new(v[3], v[4]), z3: v[5] }
    }

    pub fn to_vec(&self) -> [f64; 6] {
        [self.lambda, self.nu, self.z1, self.z2.re, self.z2.im, self.z3]
    }

    pub fn z_matrix(&self) -> Hermitian {
        Hermitian::symmetrize(CMatrix::from_row_slice(2, 2, &[c(self.z1), self.z2, self.z2.conj(), c(self.z3)]))
    }

    pub fn z_is_psd(&self) -> bool {
        self.z1 >= -1e-12 && self.z3 >= -1e-12 && self.z1 * self.z3 - self.z2.norm_sqr() >= -1e-12
    }
}

/// Physical Schur block of the CRB constraint,
/// `[[tr(Ȧ^H Ȧ S) − 1/Γ_S,1, conj(tr(Ȧ^H A S))], [tr(Ȧ^H A S), tr(A^H A S)]]`.
pub fn schur_block(s: &TransmitCovariance, sm: &SensingMatrices, gamma_s1: f64) -> Hermitian {
    let (taa, tdd, tda) = sm.fisher_terms(s.matrix());
    Hermitian::symmetrize(CMatrix::from_row_slice(2, 2, &[c(tdd - 1.0 / gamma_s1), tda.conj(), tda, c(taa)]))
}

/// Dual function value and the maximizer of the Lagrangian at one dual point.
#[derive(Debug, Clone)]
pub struct DualEvaluation {
    /// bps/Hz
    pub g: f64,
    /// Leading block of the maximizer in the basis of the non-null
    /// eigenvectors of `D` (Watts).
    pub s11: Hermitian,
    /// Normalized `D`.
    pub d: Hermitian,
    pub d_eig: HermitianEig,
    /// Number of eigenvalues of `D` treated as zero.
    pub null_dim: usize,
    /// In the `(λ, ν, z1, Re z2, Im z2, z3)` embedding; inactive coordinates are 0.
    pub subgradient: [f64; 6],
    /// Maximizer with the off-diagonal and null blocks set to zero.
    pub s_star: TransmitCovariance,
    pub(crate) x_star: Hermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CutKind {
    Lambda,
    Nu,
    Z,
    D,
    Range,
    Objective,
}

impl CutKind {
    pub fn label(&self) -> &'static str {
        match self {
            CutKind::Lambda => "lambda",
            CutKind::Nu => "nu",
            CutKind::Z => "z",
            CutKind::D => "d",
            CutKind::Range => "range",
            CutKind::Objective => "objective",
        }
    }
}

pub(crate) enum Probe {
    Value(Box<DualEvaluation>),
    /// The dual function is `+∞` here; `q` certifies it through `q^H D q`.
    Unbounded {
        q: CVector,
        kind: CutKind,
    },
}

/// Null directions of `D` the ID channel sees beyond this fraction of `‖G‖`
/// make the dual function unbounded.
const RANGE_TOL: f64 = 1e-6;

pub(crate) struct DualProblem {
    pub np: NormalizedProblem,
    pub th: NormThresholds,
    /// Which of the six coordinates are free; the rest stay at zero.
    pub active: [bool; 6],
    g_norm: f64,
}

impl DualProblem {
    pub fn new(cfg: &ScenarioConfig, th: &Thresholds) -> Self {
        let np = NormalizedProblem::new(cfg);
        let nth = th.normalized(&np);
        let e = nth.gamma > 0.0;
        let z = nth.tau.is_some();
        let g_norm = np.w_id.spectral_norm().sqrt();
        DualProblem { np, th: nth, active: [e, true, z, z, z, z], g_norm }
    }

    pub fn d_matrix(&self, dp: &DualPoint) -> Hermitian {
        let np = &self.np;
        let cross = &np.w_da * dp.z2;
        let cross = Hermitian::symmetrize(&cross + cross.adjoint());
        Hermitian::identity(np.m)
            .scale(dp.nu)
            .sub(&np.w_eh.scale(dp.lambda))
            .sub(&np.w_dd.scale(dp.z1))
            .sub(&cross)
            .sub(&np.w_aa.scale(dp.z3))
    }

    /// Evaluates the dual function, treating eigenvalues of `D` at or below
    /// `null_tol · ‖D‖` as zero.
    pub fn probe(&self, dp: &DualPoint, null_tol: f64) -> Probe {
        let np = &self.np;
        let m = np.m;
        let d = self.d_matrix(dp);
        let eig = herm_eig(&d);
        let dn = eig.max_abs();
        if eig.values[m - 1] < -null_tol * dn {
            return Probe::Unbounded { q: eig.min_vector(), kind: CutKind::D };
        }
        let r = eig.values.iter().filter(|&&w| w > null_tol * dn).count();
        let mut worst: Option<(f64, usize)> = None;
        for j in r..m {
            let leak = (&np.g_id * eig.vectors.column(j)).norm();
            if leak > RANGE_TOL * self.g_norm && worst.is_none_or(|(w, _)| leak > w) {
                worst = Some((leak, j));
            }
        }
        if let Some((_, j)) = worst {
            return Probe::Unbounded { q: eig.vectors.column(j).into_owned(), kind: CutKind::Range };
        }

        let q1 = eig.vectors.columns(0, r).into_owned();
        let inv_sqrt: Vec<f64> = (0..r).map(|k| 1.0 / eig.values[k].sqrt()).collect();
        let mut h = &np.g_id * &q1;
        for (k, s) in inv_sqrt.iter().enumerate() {
            h.column_mut(k).scale_mut(*s);
        }
        let mut s11 = CMatrix::zeros(r, r);
        let mut value = 0.0;
        if r > 0 && h.nrows() > 0 {
            let svd = complex_svd(&h).expect("SVD of a small dense matrix");
            for (k, &sv) in svd.singular_values.iter().enumerate() {
                let l2 = sv * sv;
                if l2 <= 0.0 {
                    continue;
                }
                let p = (1.0 / std::f64::consts::LN_2 - 1.0 / l2).max(0.0);
                if p == 0.0 {
                    continue;
                }
                value += (1.0 + l2 * p).log2() - p;
                let v = svd.v.column(k);
                s11 += v * v.adjoint() * c(p);
            }
            for i in 0..r {
                for j in 0..r {
                    s11[(i, j)] *= c(inv_sqrt[i] * inv_sqrt[j]);
                }
            }
        }
        let s11 = Hermitian::symmetrize(s11);
        let x = s11.congruence(&q1);

        let tau = self.th.tau.unwrap_or(0.0);
        let g = value - dp.lambda * self.th.gamma + dp.nu - dp.z1 * tau;
        let (taa, tdd, tda) = np.fisher_terms(&x);
        let mut sub = [np.energy(&x) - self.th.gamma, 1.0 - x.trace(), tdd - tau, 2.0 * tda.re, -2.0 * tda.im, taa];
        for (s, a) in sub.iter_mut().zip(self.active) {
            if !a {
                *s = 0.0;
            }
        }
        Probe::Value(Box::new(DualEvaluation {
            g,
            s11: s11.scale(np.power),
            d,
            d_eig: eig,
            null_dim: m - r,
            subgradient: sub,
            s_star: np.to_physical(&x),
            x_star: x,
        }))
    }

    /// Cut direction for a violated `q^H D q ≥ 0`.
    pub fn d_cut(&self, q: &CVector) -> [f64; 6] {
        let np = &self.np;
        let quad = |w: &Hermitian| (q.adjoint() * w.as_matrix() * q)[(0, 0)].re;
        let s = (q.adjoint() * &np.w_da * q)[(0, 0)];
        [quad(&np.w_eh), -1.0, quad(&np.w_dd), 2.0 * s.re, -2.0 * s.im, quad(&np.w_aa)]
    }

    /// Cut direction for a violated `Z ⪰ 0`, or `None` if `Z` is PSD.
    pub fn z_cut(dp: &DualPoint) -> Option<[f64; 6]> {
        if dp.z_is_psd() {
            return None;
        }
        let e = dp.z_matrix().eig();
        let q = e.min_vector();
        let w = q[0].conj() * q[1];
        Some([0.0, 0.0, -q[0].norm_sqr(), -2.0 * w.re, 2.0 * w.im, -q[1].norm_sqr()])
    }
}

/// Evaluates the dual function at `dp` (normalized multipliers).
///
/// Fails with [`CreError::UnboundedDual`] where `D` is indefinite or has a
/// null direction the ID channel sees; the dual function is `+∞` there.
pub fn eval_dual(dp: &DualPoint, cfg: &ScenarioConfig, th: &Thresholds) -> Result<DualEvaluation> {
    let problem = DualProblem::new(cfg, th);
    match problem.probe(dp, RANK_EPS) {
        Probe::Value(ev) => Ok(*ev),
        Probe::Unbounded { kind: CutKind::D, .. } => Err(CreError::UnboundedDual("D is indefinite".into())),
        Probe::Unbounded { .. } => Err(CreError::UnboundedDual("ID channel leaks into the null space of D".into())),
    }
}
