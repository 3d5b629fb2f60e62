use super::FactorPair;
use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::problem::{ObservationSet, SamplingMask};

/// `f(X, Y) = (1/2p)‖P_Ω(XYᵀ − M)‖_F² + (1/8)‖XᵀX − YᵀY‖_F²`.
///
/// `observed_m` is `P_Ω(M)`; entries outside Ω are never read.
pub fn objective(fp: &FactorPair, observed_m: &DenseMatrix, mask: &SamplingMask) -> Result<f64> {
    objective_with(&ObservationSet::from_projected(observed_m, mask)?, fp)
}

/// `(∇_X f, ∇_Y f)` with
/// `∇_X f = (1/p)P_Ω(XYᵀ − M)Y + ½X(XᵀX − YᵀY)` and
/// `∇_Y f = (1/p)[P_Ω(XYᵀ − M)]ᵀX + ½Y(YᵀY − XᵀX)`.
pub fn gradient(fp: &FactorPair, observed_m: &DenseMatrix, mask: &SamplingMask) -> Result<FactorPair> {
    gradient_with(&ObservationSet::from_projected(observed_m, mask)?, fp)
}

/// Objective for an arbitrary weighted sampling operator.
pub fn objective_with(obs: &ObservationSet, fp: &FactorPair) -> Result<f64> {
    let misfit = obs.misfit(&fp.x, &fp.y)?;
    Ok(misfit + 0.125 * fp.balance().frobenius_norm_sq())
}

/// Gradient for an arbitrary weighted sampling operator; the balance term
/// is the same for every operator.
pub fn gradient_with(obs: &ObservationSet, fp: &FactorPair) -> Result<FactorPair> {
    let (n1, n2, r) = (fp.n1(), fp.n2(), fp.rank());
    let mut gx = DenseMatrix::zeros(n1, r);
    let mut gy = DenseMatrix::zeros(n2, r);
    obs.accumulate_gradient(&fp.x, &fp.y, &mut gx, &mut gy)?;
    let half_balance = fp.balance().scale(0.5);
    gx.axpy(1.0, &fp.x.matmul(&half_balance)?)?;
    gy.axpy(-1.0, &fp.y.matmul(&half_balance)?)?;
    Ok(FactorPair { x: gx, y: gy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_ground_truth, project_omega, sample_mask};
    use crate::rng;

    #[test]
    fn zero_at_truth() {
        let gt = generate_ground_truth(20, 15, 3, 3.0, 1).unwrap();
        let m = gt.matrix();
        for p in [0.3, 1.0] {
            let mask = sample_mask(20, 15, p, 2).unwrap();
            let obs = project_omega(&m, &mask).unwrap();
            let fp = FactorPair::new(gt.u.clone(), gt.v.clone()).unwrap();
            assert!(objective(&fp, &obs, &mask).unwrap() < 1e-24);
            let g = gradient(&fp, &obs, &mask).unwrap();
            assert!(g.norm_sq().sqrt() <= 1e-12 * gt.sigma_max());
        }
    }

    #[test]
    fn origin() {
        let gt = generate_ground_truth(10, 8, 2, 2.0, 5).unwrap();
        let m = gt.matrix();
        let mask = SamplingMask::full(10, 8);
        let fp = FactorPair::zeros(10, 8, 2);
        let f = objective(&fp, &m, &mask).unwrap();
        assert!((f - 0.5 * m.frobenius_norm_sq()).abs() < 1e-14);
        let g = gradient(&fp, &m, &mask).unwrap();
        assert_eq!(g.norm_sq(), 0.0);
    }

    #[test]
    fn naive_double_loop() {
        let mut g = rng::seeded(12);
        let (n1, n2, r) = (9, 7, 2);
        let m = rng::gaussian_matrix(&mut g, n1, n2);
        let x = rng::gaussian_matrix(&mut g, n1, r);
        let y = rng::gaussian_matrix(&mut g, n2, r);
        let mask = SamplingMask::full(n1, n2);
        let fp = FactorPair::new(x.clone(), y.clone()).unwrap();
        let mut misfit = 0.0;
        for i in 0..n1 {
            for j in 0..n2 {
                let mut v = -m[(i, j)];
                for k in 0..r {
                    v += x[(i, k)] * y[(j, k)];
                }
                misfit += v * v;
            }
        }
        let mut bal = 0.0;
        for a in 0..r {
            for b in 0..r {
                let mut v = 0.0;
                for i in 0..n1 {
                    v += x[(i, a)] * x[(i, b)];
                }
                for j in 0..n2 {
                    v -= y[(j, a)] * y[(j, b)];
                }
                bal += v * v;
            }
        }
        let expected = misfit / 2.0 + bal / 8.0;
        let got = objective(&fp, &m, &mask).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn shape_errors() {
        let mask = SamplingMask::full(4, 3);
        let m = DenseMatrix::zeros(4, 3);
        let fp = FactorPair::zeros(3, 3, 1);
        assert!(objective(&fp, &m, &mask).is_err());
        assert!(gradient(&fp, &m, &mask).is_err());
        assert!(objective(&FactorPair::zeros(4, 3, 1), &DenseMatrix::zeros(3, 3), &mask).is_err());
    }
}
