//! Physical model of the system: one transmitter with an `M`-element array
//! that simultaneously sends data to an ID receiver, power to an EH receiver,
//! and senses a point target through its `N_S`-element receive array.

mod array;
mod normalized;
pub mod scenario_file;
pub mod units;

pub use array::{steering, steering_derivative};
pub use normalized::NormalizedProblem;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CreError, Result};
use crate::linalg::{logdet_psd, trace_product, CMatrix, Hermitian};

/// Relative threshold below which the Fisher determinant counts as zero.
pub const FIM_EPS: f64 = 1e-12;

/// Full physical description of one scenario, in SI units (Watts, radians).
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// Transmit antennas `M`.
    pub tx_antennas: usize,
    /// Sensing receive antennas `N_S`.
    pub sensing_antennas: usize,
    /// Target angle in radians.
    pub theta: f64,
    /// Complex reflection coefficient of the target.
    pub alpha: Complex64,
    /// Symbols per frame `L`.
    pub frame_len: usize,
    /// Transmit power budget in Watts.
    pub power: f64,
    pub sigma2_s: f64,
    pub sigma2_id: f64,
    /// `N_ID x M` channel to the information receiver.
    pub h_id: CMatrix,
    /// `N_EH x M` channel to the energy receiver.
    pub h_eh: CMatrix,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CreError::Config(msg));
        if self.tx_antennas < 2 {
            return bad(format!("tx_antennas must exceed 1, got {}", self.tx_antennas));
        }
        if self.sensing_antennas < 2 {
            return bad(format!("sensing_antennas must exceed 1, got {}", self.sensing_antennas));
        }
        if self.frame_len == 0 {
            return bad("frame_len must be at least 1".into());
        }
        for (name, v) in [("power", self.power), ("sigma2_s", self.sigma2_s), ("sigma2_id", self.sigma2_id)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.alpha.norm() == 0.0 || !self.alpha.norm().is_finite() {
            return bad("reflection coefficient must be nonzero".into());
        }
        if !self.theta.is_finite() {
            return bad("target angle must be finite".into());
        }
        if self.h_id.ncols() != self.tx_antennas || self.h_id.nrows() == 0 {
            return bad(format!(
                "ID channel must be N_ID x {}, got {}x{}",
                self.tx_antennas,
                self.h_id.nrows(),
                self.h_id.ncols()
            ));
        }
        if self.h_eh.ncols() != self.tx_antennas || self.h_eh.nrows() == 0 {
            return bad(format!(
                "EH channel must be N_EH x {}, got {}x{}",
                self.tx_antennas,
                self.h_eh.nrows(),
                self.h_eh.ncols()
            ));
        }
        if self.h_id.iter().chain(self.h_eh.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return bad("channel entries must be finite".into());
        }
        Ok(())
    }

    pub fn n_id(&self) -> usize {
        self.h_id.nrows()
    }

    pub fn n_eh(&self) -> usize {
        self.h_eh.nrows()
    }

    /// `σ_S² / (2 |α|² L)`, the constant in front of the CRB.
    pub fn crb_scale(&self) -> f64 {
        self.sigma2_s / (2.0 * self.alpha.norm_sqr() * self.frame_len as f64)
    }

    /// `Γ_S,1 = 2|α|²L Γ_S / σ_S²`.
    pub fn gamma_s1(&self, gamma_s: f64) -> f64 {
        gamma_s / self.crb_scale()
    }

    pub fn sensing(&self) -> SensingMatrices {
        SensingMatrices::new(self.tx_antennas, self.sensing_antennas, self.theta)
    }
}

/// Target response `A = a_r a_t^T`, its angle derivative and the Gram
/// matrices that enter the CRB.
#[derive(Debug, Clone)]
pub struct SensingMatrices {
    pub a: CMatrix,
    pub a_dot: CMatrix,
    /// `A^H A`
    pub gram_aa: Hermitian,
    /// `Ȧ^H Ȧ`
    pub gram_dd: Hermitian,
    /// `Ȧ^H A` (not Hermitian in general)
    pub cross_da: CMatrix,
    /// Spectral norms of `A^H A` and `Ȧ^H Ȧ`.
    pub norm_aa: f64,
    pub norm_dd: f64,
}

impl SensingMatrices {
    pub fn new(m: usize, n_s: usize, theta: f64) -> Self {
        let at = steering(m, theta);
        let ar = steering(n_s, theta);
        let dat = steering_derivative(m, theta);
        let dar = steering_derivative(n_s, theta);
        let a = &ar * at.transpose();
        let a_dot = &dar * at.transpose() + &ar * dat.transpose();
        let gram_aa = Hermitian::symmetrize(a.adjoint() * &a);
        let gram_dd = Hermitian::symmetrize(a_dot.adjoint() * &a_dot);
        let cross_da = a_dot.adjoint() * &a;
        let (norm_aa, norm_dd) = (gram_aa.spectral_norm(), gram_dd.spectral_norm());
        SensingMatrices { a, a_dot, gram_aa, gram_dd, cross_da, norm_aa, norm_dd }
    }

    /// `(tr(A^H A S), tr(Ȧ^H Ȧ S), tr(Ȧ^H A S))`.
    pub fn fisher_terms(&self, s: &Hermitian) -> (f64, f64, Complex64) {
        (self.gram_aa.inner(s), self.gram_dd.inner(s), trace_product(&self.cross_da, s.as_matrix()))
    }
}

/// A transmit covariance matrix in Watts: Hermitian and PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance(Hermitian);

impl TransmitCovariance {
    /// Accepts `m` if its smallest eigenvalue is at least `-1e-9 · tr(m)`.
    pub fn new(m: Hermitian) -> Result<Self> {
        let tr = m.trace();
        let wmin = m.min_eigenvalue();
        if wmin < -1e-9 * tr.abs().max(f64::MIN_POSITIVE) {
            return Err(CreError::ContractViolation(format!(
                "covariance is not PSD (min eigenvalue {wmin:.3e}, trace {tr:.3e})"
            )));
        }
        Ok(TransmitCovariance(m))
    }

    pub(crate) fn from_hermitian_unchecked(m: Hermitian) -> Self {
        TransmitCovariance(m)
    }

    pub fn zeros(m: usize) -> Self {
        TransmitCovariance(Hermitian::zeros(m))
    }

    pub fn matrix(&self) -> &Hermitian {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        TransmitCovariance(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        TransmitCovariance(self.0.add(&other.0))
    }

    /// Numerical rank at the crate-wide relative threshold.
    pub fn rank(&self) -> usize {
        let e = self.0.eig();
        let wmax = e.max_abs();
        e.values.iter().filter(|&&w| w > crate::linalg::RANK_EPS * wmax).count()
    }

    /// Checks PSD-ness and the power budget with the tolerances used
    /// throughout the crate.
    pub fn satisfies_budget(&self, power: f64) -> bool {
        self.trace() <= power * (1.0 + 1e-9) && self.0.min_eigenvalue() >= -1e-9 * self.trace().max(0.0)
    }
}

/// One achievable (CRB, rate, energy) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrePoint {
    /// rad², possibly `+∞`.
    pub crb: f64,
    /// bps/Hz
    pub rate: f64,
    /// Watts
    pub energy: f64,
}

/// Angle-estimation CRB (rad²). Returns `+∞` when the Fisher information is singular.
pub fn crb(s: &TransmitCovariance, sm: &SensingMatrices, cfg: &ScenarioConfig) -> Result<f64> {
    let (taa, tdd, tda) = sm.fisher_terms(s.matrix());
    let tr = s.trace();
    crb_from_terms(cfg.crb_scale(), taa, tdd, tda, sm.norm_aa * sm.norm_dd * tr * tr)
}

/// `bound` is the largest value `tdd · taa` can take at this trace,
/// `‖A^H A‖ ‖Ȧ^H Ȧ‖ tr(S)²`. The Fisher determinant is compared against it
/// rather than against the computed terms, which are pure rounding noise
/// when `S` is orthogonal to the target response.
pub(crate) fn crb_from_terms(scale: f64, taa: f64, tdd: f64, tda: Complex64, bound: f64) -> Result<f64> {
    if taa.is_nan() || tdd.is_nan() || taa <= 0.0 || tdd <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let mag = tdd * taa;
    let den = mag - tda.norm_sqr();
    if den < -1e-9 * bound {
        return Err(CreError::ContractViolation(format!(
            "negative Fisher determinant {den:.3e}; covariance is not PSD"
        )));
    }
    if den <= FIM_EPS * bound {
        return Ok(f64::INFINITY);
    }
    Ok(scale * taa / den)
}

/// Achievable rate `log2 det(I + H_ID S H_ID^H / σ_ID²)` in bps/Hz.
pub fn rate(s: &TransmitCovariance, cfg: &ScenarioConfig) -> f64 {
    let n = cfg.n_id();
    let k = s.matrix().congruence(&cfg.h_id).scale(1.0 / cfg.sigma2_id);
    let m = Hermitian::identity(n).add(&k);
    // I + PSD is positive definite; failure means S was not PSD.
    logdet_psd(&m).unwrap_or(f64::NAN).max(0.0)
}

/// Received RF power `tr(H_EH S H_EH^H)` in Watts.
pub fn energy(s: &TransmitCovariance, cfg: &ScenarioConfig) -> f64 {
    let g = Hermitian::symmetrize(cfg.h_eh.adjoint() * &cfg.h_eh);
    g.inner(s.matrix()).max(0.0)
}

pub fn evaluate(s: &TransmitCovariance, sm: &SensingMatrices, cfg: &ScenarioConfig) -> Result<CrePoint> {
    Ok(CrePoint { crb: crb(s, sm, cfg)?, rate: rate(s, cfg), energy: energy(s, cfg) })
}

/// `(P/M) I`, the isotropic covariance.
pub fn isotropic(cfg: &ScenarioConfig) -> TransmitCovariance {
    TransmitCovariance(Hermitian::identity(cfg.tx_antennas).scale(cfg.power / cfg.tx_antennas as f64))
}

pub(crate) fn gram(h: &CMatrix) -> Hermitian {
    Hermitian::symmetrize(h.adjoint() * h)
}
