use crate::error::{Error, Result};
use crate::linalg::{dot, spectral_norm, DenseMatrix};
use crate::problem::SamplingMask;

/// Relative residual tolerance used for the mask spectral norm.
pub const GAP_REL_TOL: f64 = 1e-8;

/// `‖Ω − pJ‖`, the spectral norm of the centred 0/1 mask matrix.
pub fn spectral_gap(mask: &SamplingMask) -> f64 {
    let p = mask.p();
    let centred = mask.indicator().map(|w| w - p);
    spectral_norm(&centred, GAP_REL_TOL).value
}

fn check_pair(a: &DenseMatrix, c: &DenseMatrix, mask: &SamplingMask, which: &str) -> Result<()> {
    if a.rows() != mask.n1() || c.rows() != mask.n2() {
        return Err(Error::Dimension(format!(
            "{which}: factors have {} and {} rows, mask is {}x{}",
            a.rows(),
            c.rows(),
            mask.n1(),
            mask.n2()
        )));
    }
    if a.cols() != c.cols() {
        return Err(Error::Dimension(format!(
            "{which}: inner dimensions {} and {} differ",
            a.cols(),
            c.cols()
        )));
    }
    Ok(())
}

/// `D(ACᵀ, BDᵀ) = (1/p)⟨P_Ω(ACᵀ), P_Ω(BDᵀ)⟩ − ⟨ACᵀ, BDᵀ⟩`.
pub fn sampling_deviation(
    a: &DenseMatrix,
    c: &DenseMatrix,
    b: &DenseMatrix,
    d: &DenseMatrix,
    mask: &SamplingMask,
) -> Result<f64> {
    check_pair(a, c, mask, "(A, C)")?;
    check_pair(b, d, mask, "(B, D)")?;
    let empirical: f64 = mask
        .observed()
        .iter()
        .map(|&(i, j)| dot(a.row(i), c.row(j)) * dot(b.row(i), d.row(j)))
        .sum::<f64>()
        / mask.p();
    let population = a.tr_matmul(b)?.inner(&c.tr_matmul(d)?)?;
    Ok(empirical - population)
}

/// Right-hand side of the deviation inequality:
/// `(‖Ω−pJ‖/p)·min(‖A‖_{2,∞}‖B‖_F, ‖A‖_F‖B‖_{2,∞})·min(‖C‖_{2,∞}‖D‖_F, ‖C‖_F‖D‖_{2,∞})`.
pub fn deviation_bound(
    a: &DenseMatrix,
    c: &DenseMatrix,
    b: &DenseMatrix,
    d: &DenseMatrix,
    mask: &SamplingMask,
) -> Result<f64> {
    check_pair(a, c, mask, "(A, C)")?;
    check_pair(b, d, mask, "(B, D)")?;
    let left = (a.norm_2inf() * b.frobenius_norm()).min(a.frobenius_norm() * b.norm_2inf());
    let right = (c.norm_2inf() * d.frobenius_norm()).min(c.frobenius_norm() * d.norm_2inf());
    Ok(spectral_gap(mask) / mask.p() * left * right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::sample_mask;
    use crate::rng;

    #[test]
    fn gap_trivial_cases() {
        assert_eq!(spectral_gap(&SamplingMask::full(7, 5)), 0.0);
        let single = SamplingMask::from_pairs(1, 1, 0.5, vec![(0, 0)]).unwrap();
        assert!((spectral_gap(&single) - 0.5).abs() < 1e-12);
        let empty = SamplingMask::from_pairs(1, 1, 0.5, Vec::new()).unwrap();
        assert!((spectral_gap(&empty) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deviation_trivial_cases() {
        let mut g = rng::seeded(1);
        let (a, b) = (rng::gaussian_matrix(&mut g, 9, 2), rng::gaussian_matrix(&mut g, 9, 3));
        let (c, d) = (rng::gaussian_matrix(&mut g, 6, 2), rng::gaussian_matrix(&mut g, 6, 3));
        let full = SamplingMask::full(9, 6);
        assert!(sampling_deviation(&a, &c, &b, &d, &full).unwrap().abs() < 1e-12);
        let mask = sample_mask(9, 6, 0.4, 2).unwrap();
        let z = DenseMatrix::zeros(9, 2);
        assert_eq!(sampling_deviation(&z, &c, &b, &d, &mask).unwrap(), 0.0);
        assert!(sampling_deviation(&a, &d, &b, &d, &mask).is_err());
    }

    #[test]
    fn deviation_matches_dense_formula() {
        let mut g = rng::seeded(4);
        let (a, b) = (rng::gaussian_matrix(&mut g, 8, 2), rng::gaussian_matrix(&mut g, 8, 2));
        let (c, d) = (rng::gaussian_matrix(&mut g, 7, 2), rng::gaussian_matrix(&mut g, 7, 2));
        let mask = sample_mask(8, 7, 0.3, 5).unwrap();
        let (acf, bdf) = (a.matmul_tr(&c).unwrap(), b.matmul_tr(&d).unwrap());
        let mut emp = 0.0;
        for i in 0..8 {
            for j in 0..7 {
                if mask.contains(i, j) {
                    emp += acf[(i, j)] * bdf[(i, j)];
                }
            }
        }
        let dense = emp / 0.3 - acf.inner(&bdf).unwrap();
        let fast = sampling_deviation(&a, &c, &b, &d, &mask).unwrap();
        assert!((dense - fast).abs() < 1e-10 * dense.abs().max(1.0));
        assert!(fast.abs() <= deviation_bound(&a, &c, &b, &d, &mask).unwrap());
    }
}
