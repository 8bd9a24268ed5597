//! Small dense helpers shared by the algebra, search and analysis modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Factorization `G = Rᵀ R` of an SPD Gram matrix.
///
/// `R` maps coordinates into a frame where the bilinear form is the
/// Euclidean dot product; columns of `R⁻¹` are a G-orthonormal basis.
#[derive(Debug, Clone)]
pub struct Whitening {
    pub r: DMatrix<f64>,
    pub r_inv: DMatrix<f64>,
}

impl Whitening {
    pub fn new(gram: &DMatrix<f64>) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(gram.clone()).ok_or(Error::NotPositiveDefinite)?;
        let r = chol.l().transpose();
        let r_inv = r
            .clone()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { r, r_inv })
    }

    /// Similarity transform `R M R⁻¹`, symmetric whenever `G M` is.
    pub fn conjugate(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.r * m * &self.r_inv
    }
}

/// Eigenvalues of a (numerically) symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Numerical rank with singular values below `rel_tol · σ_max` treated as zero.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Largest and smallest singular values.
pub fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Pseudoinverse solve for a symmetric system, eigenvalues below
/// `rel_cutoff · |λ|_max` dropped.
pub fn symmetric_pinv_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, rel_cutoff: f64) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = DVector::zeros(rhs.len());
    if max == 0.0 {
        return out;
    }
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > rel_cutoff * max {
            let v = eig.eigenvectors.column(k);
            out += v * (v.dot(rhs) / lambda);
        }
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}
