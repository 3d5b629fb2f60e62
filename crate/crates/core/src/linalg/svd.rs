use nalgebra::SVD;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Leading `r` singular triplets `A ≈ left · diag(singulars) · rightᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSvd {
    /// n×r, orthonormal columns.
    pub left: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singulars: Vec<f64>,
    /// m×r, orthonormal columns.
    pub right: DenseMatrix,
}

impl PartialSvd {
    pub fn rank(&self) -> usize {
        self.singulars.len()
    }

    /// `left · diag(singulars) · rightᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let scaled = self
            .left
            .scale_columns(&self.singulars)
            .expect("consistent partial svd");
        scaled.matmul_tr(&self.right).expect("consistent partial svd")
    }
}

/// Top-`r` singular value decomposition.
///
/// Computed as a full decomposition followed by truncation, which is exact
/// and deterministic at the sizes this crate targets. Singular vectors are
/// sign-normalised so that the largest-magnitude entry of each left vector
/// is positive (first such entry on ties); the matching right vector is
/// flipped with it. Among equal singular values only the spanned subspace
/// is meaningful.
pub fn top_r_svd(a: &DenseMatrix, r: usize) -> Result<PartialSvd> {
    let (n, m) = a.shape();
    if r == 0 || r > n.min(m) {
        return Err(Error::Dimension(format!(
            "rank {r} requested from a {n}x{m} matrix"
        )));
    }
    if !a.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }

    let svd = SVD::new(a.to_nalgebra(), true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let v_t = svd.v_t.as_ref().expect("right vectors requested");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    // Stable sort keeps the library's order among exact ties.
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));

    let mut left = DenseMatrix::zeros(n, r);
    let mut right = DenseMatrix::zeros(m, r);
    let mut singulars = Vec::with_capacity(r);
    for (k, &src) in order.iter().take(r).enumerate() {
        let mut pivot = 0;
        for i in 1..n {
            if u[(i, src)].abs() > u[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            left[(i, k)] = sign * u[(i, src)];
        }
        for j in 0..m {
            right[(j, k)] = sign * v_t[(src, j)];
        }
        singulars.push(sv[src].max(0.0));
    }
    Ok(PartialSvd {
        left,
        singulars,
        right,
    })
}

/// All singular values, nonincreasing.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Exact operator norm through a dense decomposition. Intended for the
/// thin n×r matrices that appear in error metrics; use
/// [`super::spectral_norm`] for large square operators.
pub fn operator_norm(a: &DenseMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    singular_values(a)[0]
}
