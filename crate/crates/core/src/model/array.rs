//! Uniform linear array steering vectors, referenced to the array center
//! with half-wavelength spacing.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::CVector;

/// Position of element `k` (0-based) in half-wavelength units from the center.
#[inline]
fn offset(k: usize, n: usize) -> f64 {
    (2.0 * k as f64 + 1.0 - n as f64) / 2.0
}

/// Steering vector of an `n`-element array toward `theta` (radians).
/// Entry `k` is `exp(j π offset_k sin θ)`.
pub fn steering(n: usize, theta: f64) -> CVector {
    let s = theta.sin();
    CVector::from_fn(n, |k, _| Complex64::from_polar(1.0, PI * offset(k, n) * s))
}

/// Analytic derivative of [`steering`] with respect to `theta`.
pub fn steering_derivative(n: usize, theta: f64) -> CVector {
    let (s, cth) = theta.sin_cos();
    CVector::from_fn(n, |k, _| {
        let o = offset(k, n);
        Complex64::new(0.0, PI * o * cth) * Complex64::from_polar(1.0, PI * o * s)
    })
}
