use super::FactorPair;
use crate::error::{Error, Result};
use crate::linalg::{top_r_svd, DenseMatrix};
use crate::problem::{ObservationSet, SamplingMask};

/// A spectral initialisation and the spectrum `Σ⁰` it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub pair: FactorPair,
    pub singulars: Vec<f64>,
}

/// Square-root split of the top-`r` SVD of `m0`:
/// `X⁰ = X̃⁰(Σ⁰)^{1/2}`, `Y⁰ = Ỹ⁰(Σ⁰)^{1/2}`.
pub fn split_top_r(m0: &DenseMatrix, r: usize) -> Result<SpectralInit> {
    let svd = top_r_svd(m0, r)?;
    let roots: Vec<f64> = svd.singulars.iter().map(|s| s.sqrt()).collect();
    Ok(SpectralInit {
        pair: FactorPair::new(svd.left.scale_columns(&roots)?, svd.right.scale_columns(&roots)?)?,
        singulars: svd.singulars,
    })
}

/// Spectral initialisation from `M⁰ = (1/p)P_Ω(M)`.
pub fn spectral_init(observed_m: &DenseMatrix, mask: &SamplingMask, r: usize) -> Result<FactorPair> {
    Ok(spectral_init_detailed(observed_m, mask, r)?.pair)
}

pub fn spectral_init_detailed(
    observed_m: &DenseMatrix,
    mask: &SamplingMask,
    r: usize,
) -> Result<SpectralInit> {
    let (n1, n2) = mask.shape();
    if r == 0 || r > n1.min(n2) {
        return Err(Error::Dimension(format!("rank {r} for a {n1}x{n2} problem")));
    }
    let obs = ObservationSet::from_projected(observed_m, mask)?;
    split_top_r(&obs.weighted_targets(), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_ground_truth, project_omega, sample_mask};

    #[test]
    fn exact_under_full_observation() {
        let gt = generate_ground_truth(30, 25, 3, 2.0, 4).unwrap();
        let m = gt.matrix();
        let mask = sample_mask(30, 25, 1.0, 0).unwrap();
        let init = spectral_init(&m, &mask, 3).unwrap();
        assert!((&init.product() - &m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn balanced_and_best_rank_r() {
        let gt = generate_ground_truth(40, 30, 2, 3.0, 6).unwrap();
        let mask = sample_mask(40, 30, 0.4, 1).unwrap();
        let obs = project_omega(&gt.matrix(), &mask).unwrap();
        let init = spectral_init_detailed(&obs, &mask, 2).unwrap();
        let gap = init.pair.balance().frobenius_norm();
        assert!(gap <= 1e-9 * init.singulars[0]);
        let m0 = obs.scale(1.0 / 0.4);
        let best = top_r_svd(&m0, 2).unwrap().reconstruct();
        assert!((&init.pair.product() - &best).frobenius_norm() < 1e-10);
    }

    #[test]
    fn rank_errors() {
        let mask = SamplingMask::full(3, 2);
        assert!(spectral_init(&DenseMatrix::zeros(3, 2), &mask, 3).is_err());
        assert!(spectral_init(&DenseMatrix::zeros(3, 2), &mask, 0).is_err());
    }
}
