use super::objective::gradient_with;
use super::FactorPair;
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::problem::{ObservationSet, SamplingMask};

/// One vanilla step `(X − η∇_X f, Y − η∇_Y f)`.
pub fn gd_step(
    fp: &FactorPair,
    observed_m: &DenseMatrix,
    mask: &SamplingMask,
    eta: f64,
) -> Result<FactorPair> {
    check_eta(eta)?;
    gd_step_with(&ObservationSet::from_projected(observed_m, mask)?, fp, eta)
}

pub fn gd_step_with(obs: &ObservationSet, fp: &FactorPair, eta: f64) -> Result<FactorPair> {
    let grad = gradient_with(obs, fp)?;
    fp.add_scaled(-eta, &grad)
}

/// Gradient step followed by row-wise clipping onto the ℓ2,∞ balls of
/// radius `radius_x` (for `X`) and `radius_y` (for `Y`). Infinite radii
/// disable the projection.
pub fn projected_gd_step(
    fp: &FactorPair,
    observed_m: &DenseMatrix,
    mask: &SamplingMask,
    eta: f64,
    radius_x: f64,
    radius_y: f64,
) -> Result<FactorPair> {
    check_eta(eta)?;
    let obs = ObservationSet::from_projected(observed_m, mask)?;
    projected_gd_step_with(&obs, fp, eta, Radii::new(radius_x, radius_y)?)
}

/// Row-norm bounds for the projected baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radii {
    pub x: f64,
    pub y: f64,
}

impl Radii {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0) {
            return Err(Error::param("radius_x", format!("must be positive, got {x}")));
        }
        if !(y > 0.0) {
            return Err(Error::param("radius_y", format!("must be positive, got {y}")));
        }
        Ok(Self { x, y })
    }

    pub fn unbounded() -> Self {
        Self {
            x: f64::INFINITY,
            y: f64::INFINITY,
        }
    }
}

/// Result of one projected step plus how many rows were clipped.
pub(crate) struct ProjectedStep {
    pub pair: FactorPair,
    pub clipped_rows: usize,
}

pub fn projected_gd_step_with(
    obs: &ObservationSet,
    fp: &FactorPair,
    eta: f64,
    radii: Radii,
) -> Result<FactorPair> {
    Ok(projected_step_counting(obs, fp, eta, radii)?.pair)
}

pub(crate) fn projected_step_counting(
    obs: &ObservationSet,
    fp: &FactorPair,
    eta: f64,
    radii: Radii,
) -> Result<ProjectedStep> {
    let mut pair = gd_step_with(obs, fp, eta)?;
    let clipped_rows = clip_rows(&mut pair.x, radii.x) + clip_rows(&mut pair.y, radii.y);
    Ok(ProjectedStep { pair, clipped_rows })
}

/// Rescales every row whose norm exceeds `radius` onto the sphere of that
/// radius; returns how many rows changed.
pub fn clip_rows(m: &mut DenseMatrix, radius: f64) -> usize {
    let mut clipped = 0;
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let nrm = norm2(row);
        if nrm > radius {
            let s = radius / nrm;
            row.iter_mut().for_each(|v| *v *= s);
            clipped += 1;
        }
    }
    clipped
}

/// Step-size window `(σ_r/(1000σ₁²), σ_r/(200σ₁²))` of the linear
/// convergence guarantee. The upper end is the default step.
pub fn default_step_size(sigma1: f64, sigmar: f64) -> Result<(f64, f64)> {
    if !(sigmar > 0.0) || !sigmar.is_finite() {
        return Err(Error::param("sigmar", format!("must be positive, got {sigmar}")));
    }
    if !(sigma1 >= sigmar) || !sigma1.is_finite() {
        return Err(Error::param(
            "sigma1",
            format!("must be finite and at least sigmar = {sigmar}, got {sigma1}"),
        ));
    }
    let base = sigmar / (sigma1 * sigma1);
    Ok((base / 1000.0, base / 200.0))
}

/// Contraction factor `ρ = 1 − 0.05ησ_r` of the linear rate.
pub fn contraction_factor(eta: f64, sigmar: f64) -> f64 {
    1.0 - 0.05 * eta * sigmar
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::param("eta", format!("must be a finite nonnegative step, got {eta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_ground_truth, project_omega, sample_mask};
    use crate::solver::{gradient, spectral_init};

    fn instance() -> (DenseMatrix, SamplingMask, FactorPair, FactorPair) {
        let gt = generate_ground_truth(30, 20, 2, 2.0, 3).unwrap();
        let mask = sample_mask(30, 20, 0.5, 4).unwrap();
        let obs = project_omega(&gt.matrix(), &mask).unwrap();
        let init = spectral_init(&obs, &mask, 2).unwrap();
        let truth = FactorPair::new(gt.u, gt.v).unwrap();
        (obs, mask, init, truth)
    }

    #[test]
    fn zero_step_and_stationary_point() {
        let (obs, mask, init, truth) = instance();
        assert_eq!(gd_step(&init, &obs, &mask, 0.0).unwrap(), init);
        let moved = gd_step(&truth, &obs, &mask, 0.01).unwrap();
        assert!((&moved.stacked() - &truth.stacked()).max_abs() < 1e-14);
    }

    #[test]
    fn step_is_init_minus_eta_gradient() {
        let (obs, mask, init, _) = instance();
        let eta = 0.003;
        let g = gradient(&init, &obs, &mask).unwrap();
        let expected = FactorPair {
            x: &init.x - &g.x.scale(eta),
            y: &init.y - &g.y.scale(eta),
        };
        let got = gd_step(&init, &obs, &mask, eta).unwrap();
        assert!((&got.stacked() - &expected.stacked()).max_abs() < 1e-15);
    }

    #[test]
    fn unbounded_projection_is_vanilla() {
        let (obs, mask, init, _) = instance();
        let a = gd_step(&init, &obs, &mask, 0.01).unwrap();
        let b = projected_gd_step(&init, &obs, &mask, 0.01, f64::INFINITY, f64::INFINITY).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn radial_clip() {
        let mut m = DenseMatrix::from_rows(&[[1.2, 1.6], [0.3, 0.4]]);
        assert_eq!(clip_rows(&mut m, 1.0), 1);
        assert!((norm2(m.row(0)) - 1.0).abs() < 1e-15);
        assert!((m[(0, 0)] / m[(0, 1)] - 0.75).abs() < 1e-15);
        assert_eq!(m.row(1), &[0.3, 0.4]);
    }

    #[test]
    fn projected_rows_bounded() {
        let (obs, mask, init, _) = instance();
        let out = projected_gd_step(&init, &obs, &mask, 0.01, 0.2, 0.3).unwrap();
        assert!(out.x.norm_2inf() <= 0.2 * (1.0 + 1e-15));
        assert!(out.y.norm_2inf() <= 0.3 * (1.0 + 1e-15));
        assert!(projected_gd_step(&init, &obs, &mask, 0.01, 0.0, 1.0).is_err());
    }

    #[test]
    fn step_size_window() {
        let (lo, hi) = default_step_size(1.0, 1.0).unwrap();
        assert!((lo - 0.001).abs() < 1e-18);
        assert!((hi - 0.005).abs() < 1e-18);
        assert!((contraction_factor(hi, 1.0) - 0.99975).abs() < 1e-15);
        assert_eq!(default_step_size(2.0, 1.0).unwrap().1, 1.0 / 800.0);
        let c = 7.0;
        let (_, scaled) = default_step_size(2.0 * c, 1.0 * c).unwrap();
        assert!((scaled - 1.0 / 800.0 / c).abs() < 1e-18);
        assert!(default_step_size(1.0, 0.0).is_err());
        assert!(default_step_size(0.5, 1.0).is_err());
    }

    #[test]
    fn negative_step_rejected() {
        let (obs, mask, init, _) = instance();
        assert!(gd_step(&init, &obs, &mask, -1.0).is_err());
    }
}
