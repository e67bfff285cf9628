//! Dense linear algebra used by every other module.
//!
//! Thin wrappers over `faer` that attach the conventions the tensor-network
//! code relies on: truncation with a discarded-weight account, Hermitian
//! eigendecompositions with ascending eigenvalues, and exponentials of
//! Hermitian matrices.

use faer::traits::ComplexField;
use faer::{Mat, MatRef, Side};

use crate::error::{invalid, Error, Result};

pub use faer::c64;

/// Complex dense matrix (gates, Hamiltonians, propagators).
pub type DenseMatrix = Mat<c64>;
/// Real dense matrix (MPS reshapes, folded gates, frame rotations).
pub type RealMatrix = Mat<f64>;

/// Singular values below this fraction of the largest one are numerical
/// noise and are always discarded, even with a zero cutoff.
pub const SVD_RANK_FLOOR: f64 = 1e-14;

const HERMITIAN_TOL: f64 = 1e-12;

/// Scalars the kernels accept: `f64` and `c64`.
pub trait Scalar: ComplexField<Real = f64> + Copy {
    fn is_finite_value(&self) -> bool;
    fn modulus_sq(&self) -> f64;
    fn conjugate(&self) -> Self;
    fn from_real(x: f64) -> Self;
    fn scale_real(&self, x: f64) -> Self;
    fn real_part(&self) -> f64;
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn modulus_sq(&self) -> f64 {
        self * self
    }
    fn conjugate(&self) -> Self {
        *self
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn scale_real(&self, x: f64) -> Self {
        self * x
    }
    fn real_part(&self) -> f64 {
        *self
    }
}

impl Scalar for c64 {
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn modulus_sq(&self) -> f64 {
        self.norm_sqr()
    }
    fn conjugate(&self) -> Self {
        self.conj()
    }
    fn from_real(x: f64) -> Self {
        c64::new(x, 0.0)
    }
    fn scale_real(&self, x: f64) -> Self {
        self * x
    }
    fn real_part(&self) -> f64 {
        self.re
    }
}

/// Result of a truncated singular value decomposition `m ≈ left · diag(s) · right`.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    /// `rows × k` isometry.
    pub left: Mat<T>,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `k × cols` co-isometry (already adjointed).
    pub right: Mat<T>,
    /// Sum of squared singular values that were dropped.
    pub discarded_weight: f64,
}

impl<T: Scalar> SvdResult<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn retained_weight(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }
}

/// Number of singular values kept under the truncation rule: first the
/// relative `λ² < cutoff · Σλ²` tail and the numerical floor are dropped,
/// then the count is capped at `chi_max`. At least one value survives.
pub fn truncation_rank(singular_values: &[f64], chi_max: usize, lambda2_cutoff: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let largest = singular_values.first().copied().unwrap_or(0.0);
    let kept = singular_values
        .iter()
        .take_while(|&&s| s * s >= lambda2_cutoff * total && s > SVD_RANK_FLOOR * largest)
        .count();
    kept.min(chi_max).max(1).min(singular_values.len().max(1))
}

/// Thin SVD of `m` truncated to at most `chi_max` values, see [`truncation_rank`].
pub fn svd_truncated<T: Scalar>(
    m: MatRef<'_, T>,
    chi_max: usize,
    lambda2_cutoff: f64,
) -> Result<SvdResult<T>> {
    if chi_max == 0 {
        return Err(invalid("chi_max must be at least 1"));
    }
    if !(lambda2_cutoff >= 0.0) {
        return Err(invalid(format!("lambda2 cutoff must be nonnegative, got {lambda2_cutoff}")));
    }
    check_finite(m)?;
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return Err(invalid("cannot decompose an empty matrix"));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let all: Vec<f64> = svd.S().column_vector().iter().map(|s| s.real_part()).collect();
    let k = truncation_rank(&all, chi_max, lambda2_cutoff);
    let discarded_weight = all[k..].iter().map(|s| s * s).sum();
    let u = svd.U();
    let v = svd.V();
    let left = Mat::from_fn(rows, k, |i, j| u[(i, j)]);
    let right = Mat::from_fn(k, cols, |i, j| v[(j, i)].conjugate());
    Ok(SvdResult {
        left,
        singular_values: all[..k].to_vec(),
        right,
        discarded_weight,
    })
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending and the
/// eigenvectors stored column-wise.
pub fn eigh<T: Scalar>(h: MatRef<'_, T>) -> Result<(Vec<f64>, Mat<T>)> {
    check_hermitian(h)?;
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("eigendecomposition failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|x| x.real_part()).collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh<T: Scalar>(h: MatRef<'_, T>) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("eigendecomposition failed: {e:?}")))
}

/// `exp(scale · h)` for Hermitian `h`, via `V exp(scale·Λ) V†`.
pub fn expm_hermitian(h: MatRef<'_, c64>, scale: c64) -> Result<DenseMatrix> {
    let (values, vecs) = eigh(h)?;
    let n = h.nrows();
    let phases: Vec<c64> = values.iter().map(|&l| (scale * l).exp()).collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        let mut acc = c64::new(0.0, 0.0);
        for (k, p) in phases.iter().enumerate() {
            acc += vecs[(i, k)] * p * vecs[(j, k)].conj();
        }
        acc
    }))
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Scalar>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> Mat<T> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn identity<T: Scalar>(n: usize) -> Mat<T> {
    Mat::from_fn(n, n, |i, j| T::from_real(if i == j { 1.0 } else { 0.0 }))
}

/// Largest absolute entry of `a − b`.
pub fn max_abs_diff<T: Scalar>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).modulus_sq().sqrt());
        }
    }
    worst
}

pub fn frobenius_sq<T: Scalar>(a: MatRef<'_, T>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].modulus_sq();
        }
    }
    acc
}

fn check_finite<T: Scalar>(m: MatRef<'_, T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite_value() {
                return Err(invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn check_hermitian<T: Scalar>(h: MatRef<'_, T>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(invalid(format!("matrix is {}x{}, not square", h.nrows(), h.ncols())));
    }
    check_finite(h)?;
    let n = h.nrows();
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(h[(i, j)].modulus_sq().sqrt());
            worst = worst.max((h[(i, j)] - h[(j, i)].conjugate()).modulus_sq().sqrt());
        }
    }
    if worst > HERMITIAN_TOL * scale {
        return Err(invalid(format!("matrix is not Hermitian (asymmetry {worst:e})")));
    }
    Ok(())
}
