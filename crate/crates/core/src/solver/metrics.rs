//! Error measures against the planted truth, modulo the orthogonal
//! ambiguity `(X, Y) ~ (XR, YR)`.

use super::FactorPair;
use crate::error::Result;
use crate::linalg::{operator_norm, procrustes, DenseMatrix, OrthogonalMatrix};
use crate::problem::GroundTruth;

/// `[X;Y]R − [U;V]` for the Procrustes-optimal `R`.
#[derive(Debug, Clone)]
pub struct AlignedDifference {
    pub rotation: OrthogonalMatrix,
    pub difference: DenseMatrix,
}

impl AlignedDifference {
    pub fn frobenius(&self) -> f64 {
        self.difference.frobenius_norm()
    }

    pub fn spectral(&self) -> f64 {
        operator_norm(&self.difference)
    }

    pub fn two_inf(&self) -> f64 {
        self.difference.norm_2inf()
    }
}

pub fn aligned_difference(fp: &FactorPair, truth_stacked: &DenseMatrix) -> Result<AlignedDifference> {
    let stacked = fp.stacked();
    let rotation = procrustes(&stacked, truth_stacked)?;
    let difference = stacked.matmul(&rotation)?.try_sub(truth_stacked)?;
    Ok(AlignedDifference {
        rotation,
        difference,
    })
}

/// `min_R ‖[X;Y]R − [U;V]‖_F`.
pub fn aligned_frobenius_error(fp: &FactorPair, gt: &GroundTruth) -> Result<f64> {
    Ok(aligned_difference(fp, &gt.stacked())?.frobenius())
}

/// `‖XYᵀ − M‖_F / ‖M‖_F`.
pub fn relative_recovery_error(fp: &FactorPair, m: &DenseMatrix) -> Result<f64> {
    Ok(fp.product().try_sub(m)?.frobenius_norm() / m.frobenius_norm())
}

/// `‖XᵀX − YᵀY‖_F`.
pub fn balance_gap(fp: &FactorPair) -> f64 {
    fp.balance().frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sign_matrix;
    use crate::problem::generate_ground_truth;
    use crate::rng;

    #[test]
    fn rotation_invariant() {
        let gt = generate_ground_truth(12, 9, 3, 2.0, 1).unwrap();
        let q = sign_matrix(&rng::gaussian_matrix(&mut rng::seeded(2), 3, 3)).unwrap();
        let fp = FactorPair::new(&gt.u * &q, &gt.v * &q).unwrap();
        let d = aligned_difference(&fp, &gt.stacked()).unwrap();
        assert!(d.frobenius() < 1e-12);
        assert!(d.spectral() < 1e-12);
        assert!(relative_recovery_error(&fp, &gt.matrix()).unwrap() < 1e-14);
        assert!(balance_gap(&fp) < 1e-12);
    }

    #[test]
    fn norm_ordering() {
        let gt = generate_ground_truth(12, 9, 2, 2.0, 1).unwrap();
        let mut g = rng::seeded(8);
        let fp = FactorPair::new(
            &gt.u + &rng::gaussian_matrix(&mut g, 12, 2).scale(0.1),
            &gt.v + &rng::gaussian_matrix(&mut g, 9, 2).scale(0.1),
        )
        .unwrap();
        let d = aligned_difference(&fp, &gt.stacked()).unwrap();
        assert!(d.two_inf() <= d.spectral() + 1e-15);
        assert!(d.spectral() <= d.frobenius() + 1e-15);
    }
}
