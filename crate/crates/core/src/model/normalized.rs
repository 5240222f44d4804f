use num_complex::Complex64;

use crate::linalg::{c, complex_svd, logdet_psd, trace_product, CMatrix, Hermitian};
use crate::model::{gram, ScenarioConfig, TransmitCovariance};

/// A scenario rescaled so every quantity the solvers touch is O(1).
///
/// The decision variable is `X = S / P` (so `tr X <= 1`), the ID noise is
/// folded into the channel, energy is measured in units of `E_max`, and the
/// two sensing Gram matrices are scaled independently to unit spectral norm.
/// Scaling `A` by `a` and `Ȧ` by `d` is a congruence `diag(d, a)` on the
/// 2x2 Schur block, so PSD-ness (and hence the CRB constraint) is preserved
/// once the threshold is scaled by `d²`.
#[derive(Debug, Clone)]
pub struct NormalizedProblem {
    pub m: usize,
    /// `sqrt(P / σ_ID²) H_ID`
    pub g_id: CMatrix,
    pub w_id: Hermitian,
    pub w_eh: Hermitian,
    pub w_aa: Hermitian,
    pub w_dd: Hermitian,
    pub w_da: CMatrix,
    pub power: f64,
    /// Watts per normalized energy unit.
    pub energy_scale: f64,
    pub crb_scale: f64,
    pub a_scale2: f64,
    pub d_scale2: f64,
}

impl NormalizedProblem {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let m = cfg.tx_antennas;
        let p = cfg.power;
        let g_id = &cfg.h_id * c((p / cfg.sigma2_id).sqrt());
        let w_id = gram(&g_id);

        let smax_eh = complex_svd(&cfg.h_eh).map(|s| s.singular_values[0]).unwrap_or(0.0);
        let energy_scale = if smax_eh > 0.0 { p * smax_eh * smax_eh } else { 1.0 };
        let w_eh = gram(&cfg.h_eh).scale(p / energy_scale);

        let sm = cfg.sensing();
        let aa_norm = sm.gram_aa.spectral_norm();
        let dd_norm = sm.gram_dd.spectral_norm();
        let a_scale2 = if aa_norm > 0.0 { 1.0 / aa_norm } else { 1.0 };
        let d_scale2 = if dd_norm > 0.0 { 1.0 / dd_norm } else { 1.0 };
        NormalizedProblem {
            m,
            g_id,
            w_id,
            w_eh,
            w_aa: sm.gram_aa.scale(a_scale2),
            w_dd: sm.gram_dd.scale(d_scale2),
            w_da: &sm.cross_da * c((a_scale2 * d_scale2).sqrt()),
            power: p,
            energy_scale,
            crb_scale: cfg.crb_scale(),
            a_scale2,
            d_scale2,
        }
    }

    pub fn energy_threshold(&self, gamma_eh: f64) -> f64 {
        gamma_eh / self.energy_scale
    }

    /// Normalized counterpart of `1/Γ_S,1`; zero for an infinite CRB threshold.
    pub fn crb_threshold(&self, gamma_s: f64) -> f64 {
        if gamma_s.is_infinite() {
            0.0
        } else {
            self.d_scale2 * self.crb_scale / (gamma_s * self.power)
        }
    }

    pub fn to_physical(&self, x: &Hermitian) -> TransmitCovariance {
        TransmitCovariance::from_hermitian_unchecked(x.scale(self.power))
    }

    pub fn from_physical(&self, s: &TransmitCovariance) -> Hermitian {
        s.matrix().scale(1.0 / self.power)
    }

    pub fn rate(&self, x: &Hermitian) -> f64 {
        let k = x.congruence(&self.g_id);
        let n = k.dim();
        logdet_psd(&Hermitian::identity(n).add(&k)).unwrap_or(f64::NAN).max(0.0)
    }

    /// `∇ R(X) = G^H (I + G X G^H)^{-1} G / ln 2`.
    pub fn rate_gradient(&self, x: &Hermitian) -> Hermitian {
        let n = self.g_id.nrows();
        let k = Hermitian::identity(n).add(&x.congruence(&self.g_id));
        let inv = k
            .as_matrix()
            .clone()
            .cholesky()
            .map(|ch| ch.inverse())
            .unwrap_or_else(|| k.as_matrix().clone().try_inverse().expect("I + PSD is invertible"));
        Hermitian::symmetrize(self.g_id.adjoint() * inv * &self.g_id).scale(1.0 / std::f64::consts::LN_2)
    }

    pub fn energy(&self, x: &Hermitian) -> f64 {
        self.w_eh.inner(x)
    }

    /// `(tr(W_aa X), tr(W_dd X), tr(W_da X))` in normalized units.
    pub fn fisher_terms(&self, x: &Hermitian) -> (f64, f64, Complex64) {
        (self.w_aa.inner(x), self.w_dd.inner(x), trace_product(&self.w_da, x.as_matrix()))
    }

    /// Normalized Schur block; PSD iff the CRB constraint holds at threshold `tau`.
    pub fn schur_block(&self, x: &Hermitian, tau: f64) -> Hermitian {
        let (taa, tdd, tda) = self.fisher_terms(x);
        Hermitian::symmetrize(CMatrix::from_row_slice(2, 2, &[c(tdd - tau), tda.conj(), tda, c(taa)]))
    }

    pub fn crb(&self, x: &Hermitian) -> crate::error::Result<f64> {
        let (taa, tdd, tda) = self.fisher_terms(x);
        // W_aa and W_dd have unit spectral norm.
        let tr = x.trace();
        let physical = crate::model::crb_from_terms(1.0, taa, tdd, tda, tr * tr)?;
        // Undo the d² scaling of the Fisher terms and the P scaling of X.
        Ok(physical * self.crb_scale * self.d_scale2 / self.power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tests::random_psd;
    use crate::model::tests::random_config;
    use crate::model::{crb, energy, rate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalized_metrics_match_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = random_config(&mut rng, 5, 7, 3, 2);
        let np = NormalizedProblem::new(&cfg);
        let sm = cfg.sensing();
        assert!((np.w_eh.spectral_norm() - 1.0).abs() < 1e-12);
        assert!((np.w_aa.spectral_norm() - 1.0).abs() < 1e-12);
        for _ in 0..20 {
            let x = random_psd(&mut rng, 5, 3);
            let x = x.scale(1.0 / x.trace());
            let s = np.to_physical(&x);
            assert!((np.rate(&x) - rate(&s, &cfg)).abs() < 1e-10);
            assert!((np.energy(&x) * np.energy_scale - energy(&s, &cfg)).abs() < 1e-10 * energy(&s, &cfg));
            let cp = crb(&s, &sm, &cfg).unwrap();
            assert!((np.crb(&x).unwrap() - cp).abs() < 1e-10 * cp);
            // Schur block PSD iff CRB below threshold.
            for f in [0.5, 0.999, 1.001, 2.0] {
                let tau = np.crb_threshold(cp * f);
                let psd = np.schur_block(&x, tau).min_eigenvalue() >= 0.0;
                assert_eq!(psd, f >= 1.0, "f = {f}");
            }
        }
    }

    #[test]
    fn rate_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = random_config(&mut rng, 4, 5, 3, 2);
        let np = NormalizedProblem::new(&cfg);
        let x = random_psd(&mut rng, 4, 4).scale(0.1);
        let g = np.rate_gradient(&x);
        for _ in 0..10 {
            let d = crate::linalg::tests::random_hermitian(&mut rng, 4);
            let h = 1e-5;
            let fd = (np.rate(&x.add(&d.scale(h))) - np.rate(&x.sub(&d.scale(h)))) / (2.0 * h);
            let an = g.inner(&d);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "fd {fd} an {an}");
        }
    }
}
