//! Dense complex linear algebra used by every solver in the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Hermitian
//! matrices get their own newtype so that symmetry is established once, at
//! construction, instead of being re-checked by every consumer.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{CreError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative threshold below which eigen/singular values count as zero.
pub const RANK_EPS: f64 = 1e-9;

/// Relative asymmetry accepted by [`Hermitian::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Validates symmetry (relative tolerance [`HERMITIAN_TOL`]) and stores
    /// the symmetrized matrix `(M + M^H) / 2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(CreError::ContractViolation(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm())).max(1.0);
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOL * scale {
            return Err(CreError::ContractViolation(format!("matrix is not Hermitian (asymmetry {worst:.3e})")));
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without checking. Used for matrices assembled internally
    /// from Hermitian pieces.
    pub fn symmetrize(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Hermitian((m + adj) * c(0.5))
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Hermitian(CMatrix::from_fn(n, n, |i, j| if i == j { c(d[i]) } else { c(0.0) }))
    }

    /// `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        Hermitian::symmetrize(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// `tr(self · other)`, real for two Hermitian matrices.
    pub fn inner(&self, other: &Hermitian) -> f64 {
        trace_product(&self.0, &other.0).re
    }

    pub fn scale(&self, s: f64) -> Hermitian {
        Hermitian(&self.0 * c(s))
    }

    pub fn add(&self, other: &Hermitian) -> Hermitian {
        Hermitian(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Hermitian) -> Hermitian {
        Hermitian(&self.0 - &other.0)
    }

    /// `B self B^H` for a (possibly rectangular) `B`.
    pub fn congruence(&self, b: &CMatrix) -> Hermitian {
        Hermitian::symmetrize(b * &self.0 * b.adjoint())
    }

    pub fn eig(&self) -> HermitianEig {
        herm_eig(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let e = self.eig();
        e.values[e.values.len() - 1]
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let e = self.eig();
        e.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Eigen-decomposition `M = V diag(w) V^H`, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> Hermitian {
        let d = CMatrix::from_diagonal(&self.values.map(c));
        Hermitian::symmetrize(&self.vectors * d * self.vectors.adjoint())
    }

    /// Eigenvector for the smallest eigenvalue.
    pub fn min_vector(&self) -> CVector {
        self.vectors.column(self.vectors.ncols() - 1).into_owned()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted descending.
///
/// The sort is stable, so exactly tied eigenvalues keep the order the
/// factorization produced them in.
pub fn herm_eig(m: &Hermitian) -> HermitianEig {
    let n = m.dim();
    if n == 0 {
        return HermitianEig { values: DVector::zeros(0), vectors: CMatrix::zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    HermitianEig { values, vectors }
}

/// Thin singular value decomposition `M = U diag(s) V^H`.
///
/// For an `m x n` input, `U` is `m x k` and `V` is `n x k` with
/// `k = min(m, n)`; both have orthonormal columns (unitary when square).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: DVector<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let s = CMatrix::from_diagonal(&self.singular_values.map(c));
        &self.u * s * self.v.adjoint()
    }

    /// Number of singular values above `RANK_EPS * s_max`.
    pub fn numerical_rank(&self) -> usize {
        let smax = self.singular_values.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > RANK_EPS * smax).count()
    }
}

pub fn complex_svd(m: &CMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd { u: CMatrix::zeros(rows, 0), singular_values: DVector::zeros(0), v: CMatrix::zeros(cols, 0) });
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| CreError::SolverFailure { message: "SVD did not converge".into(), iterations: 0 })?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(Svd {
        u: CMatrix::from_fn(rows, k, |r, col| u[(r, order[col])]),
        singular_values: DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i])),
        v: CMatrix::from_fn(cols, k, |r, col| v_t[(order[col], r)].conj()),
    })
}

/// Nearest positive semidefinite matrix in Frobenius norm (eigenvalue clipping).
pub fn psd_project(m: &Hermitian) -> Hermitian {
    let mut e = herm_eig(m);
    if e.values.iter().all(|&w| w >= 0.0) {
        return m.clone();
    }
    e.values.iter_mut().for_each(|w| *w = w.max(0.0));
    e.reconstruct()
}

/// Base-2 log-determinant of a positive definite matrix via Cholesky.
pub fn logdet_psd(m: &Hermitian) -> Result<f64> {
    if m.dim() == 0 {
        return Ok(0.0);
    }
    if let Some(chol) = Cholesky::new(m.0.clone()) {
        let l = chol.l_dirty();
        // nalgebra takes a complex square root of negative pivots instead of
        // failing, so an indefinite input shows up as an imaginary diagonal.
        let ok = (0..m.dim()).all(|i| {
            let d = l[(i, i)];
            d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-12 * d.re
        });
        if ok {
            let ln: f64 = (0..m.dim()).map(|i| l[(i, i)].re.ln()).sum();
            return Ok(2.0 * ln / std::f64::consts::LN_2);
        }
    }
    let e = herm_eig(m);
    let norm = e.max_abs();
    let wmin = e.values[e.values.len() - 1];
    if wmin < -1e-10 * norm {
        return Err(CreError::Domain(format!("log-determinant of an indefinite matrix (min eigenvalue {wmin:.3e})")));
    }
    if wmin <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(e.values.iter().map(|w| w.log2()).sum())
}
