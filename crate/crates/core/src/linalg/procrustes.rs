use std::ops::Deref;

use nalgebra::SVD;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Square matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(DenseMatrix);

impl OrthogonalMatrix {
    pub fn identity(r: usize) -> Self {
        Self(DenseMatrix::identity(r))
    }

    /// Wraps `q` after checking `‖qᵀq − I‖_F ≤ tol`.
    pub fn try_from_matrix(q: DenseMatrix, tol: f64) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::Dimension(format!(
                "orthogonal matrix must be square, got {}x{}",
                q.rows(),
                q.cols()
            )));
        }
        let gap = orthogonality_gap(&q);
        if gap > tol {
            return Err(Error::Precondition(format!(
                "‖QᵀQ − I‖_F = {gap:e} exceeds {tol:e}"
            )));
        }
        Ok(Self(q))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Product of two orthogonal matrices.
    pub fn compose(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }
}

impl Deref for OrthogonalMatrix {
    type Target = DenseMatrix;
    fn deref(&self) -> &DenseMatrix {
        &self.0
    }
}

/// `‖QᵀQ − I‖_F`.
pub fn orthogonality_gap(q: &DenseMatrix) -> f64 {
    let g = q.tr_matmul(q).expect("square");
    (&g - &DenseMatrix::identity(q.cols())).frobenius_norm()
}

/// Matrix sign `sgn(C) = UVᵀ` for the SVD `C = UΛVᵀ`.
///
/// For singular `C` the SVD factors are not unique, and neither is the
/// result; it is still orthogonal.
pub fn sign_matrix(c: &DenseMatrix) -> Result<OrthogonalMatrix> {
    if c.rows() != c.cols() {
        return Err(Error::Dimension(format!(
            "sign matrix of a non-square {}x{} matrix",
            c.rows(),
            c.cols()
        )));
    }
    if c.rows() == 0 {
        return Ok(OrthogonalMatrix(DenseMatrix::zeros(0, 0)));
    }
    let svd = SVD::new(c.to_nalgebra(), true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    Ok(OrthogonalMatrix(DenseMatrix::from_nalgebra(&(u * v_t))))
}

/// Orthogonal Procrustes: `argmin_{R ∈ O(r)} ‖AR − B‖_F = sgn(AᵀB)`.
///
/// When `A = B` bitwise the minimiser is the identity and it is returned
/// exactly. When `AᵀB` is singular the minimiser set is not a single
/// point; one member of it is returned.
pub fn procrustes(a: &DenseMatrix, b: &DenseMatrix) -> Result<OrthogonalMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "procrustes between {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.cols() == 0 {
        return Err(Error::Dimension("procrustes needs r >= 1".into()));
    }
    if a == b {
        return Ok(OrthogonalMatrix::identity(a.cols()));
    }
    sign_matrix(&a.tr_matmul(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_orthogonal(seed: u64, r: usize) -> OrthogonalMatrix {
        let g = rng::gaussian_matrix(&mut rng::seeded(seed), r, r);
        sign_matrix(&g).unwrap()
    }

    fn close(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    #[test]
    fn sign_of_spd_is_identity() {
        let c = DenseMatrix::from_rows(&[[4.0, 1.0], [1.0, 3.0]]);
        assert!(close(&sign_matrix(&c).unwrap(), &DenseMatrix::identity(2), 1e-12));
    }

    #[test]
    fn sign_of_orthogonal_is_itself() {
        let q = random_orthogonal(2, 4);
        assert!(close(&sign_matrix(&q).unwrap(), &q, 1e-12));
    }

    #[test]
    fn sign_of_signed_diagonal() {
        let c = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, -3.0]]);
        let expected = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        assert!(close(&sign_matrix(&c).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn sign_of_singular_is_orthogonal() {
        let c = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(orthogonality_gap(&sign_matrix(&c).unwrap()) < 1e-10);
        assert!(sign_matrix(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn self_alignment_and_rotation_recovery() {
        let a = rng::gaussian_matrix(&mut rng::seeded(9), 10, 3);
        assert_eq!(procrustes(&a, &a).unwrap(), OrthogonalMatrix::identity(3));
        let q = random_orthogonal(4, 3);
        let r = procrustes(&(&a * &q), &a).unwrap();
        assert!(close(&r, &q.transpose(), 1e-10));
    }

    #[test]
    fn shape_mismatch() {
        let a = DenseMatrix::zeros(4, 2);
        let b = DenseMatrix::zeros(3, 2);
        assert!(matches!(procrustes(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn checked_wrapper() {
        assert!(OrthogonalMatrix::try_from_matrix(DenseMatrix::identity(3), 1e-12).is_ok());
        let bad = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]);
        assert!(OrthogonalMatrix::try_from_matrix(bad, 1e-6).is_err());
    }
}
