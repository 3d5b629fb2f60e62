#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, operator_norm, procrustes, sign_matrix, DenseMatrix};
use crate::problem::{project_omega, GroundTruth, ObservationSet, SamplingMask};
use crate::rng;
use crate::solver::FactorPair;

/// `vec(D)ᵀ ∇²f(X, Y) vec(D)` in closed form:
///
/// `(2/p)⟨P_Ω(XYᵀ−M), P_Ω(D_X D_Yᵀ)⟩ + (1/p)‖P_Ω(D_X Yᵀ + X D_Yᵀ)‖_F²
///  + ½⟨XᵀX−YᵀY, D_XᵀD_X−D_YᵀD_Y⟩ + ¼‖D_XᵀX + XᵀD_X − YᵀD_Y − D_YᵀY‖_F²`.
///
/// `m` may be the full matrix or `P_Ω(M)`; only observed entries are read.
pub fn hessian_quadratic_form(
    fp: &FactorPair,
    d: &FactorPair,
    m: &DenseMatrix,
    mask: &SamplingMask,
) -> Result<f64> {
    let observed = project_omega(m, mask)?;
    hessian_form_with(&ObservationSet::from_projected(&observed, mask)?, fp, d)
}

pub fn hessian_form_with(obs: &ObservationSet, fp: &FactorPair, d: &FactorPair) -> Result<f64> {
    obs.check_factors(&fp.x, &fp.y)?;
    obs.check_factors(&d.x, &d.y)?;
    if d.rank() != fp.rank() {
        return Err(Error::Dimension("direction rank differs from the point".into()));
    }
    let mut data = 0.0;
    for e in obs.entries() {
        let (xi, yj) = (fp.x.row(e.i), fp.y.row(e.j));
        let (dxi, dyj) = (d.x.row(e.i), d.y.row(e.j));
        let residual = dot(xi, yj) - e.target;
        let linear = dot(dxi, yj) + dot(xi, dyj);
        let bilinear = dot(dxi, dyj);
        data += e.weight * (2.0 * residual * bilinear + linear * linear);
    }
    let balance = fp.balance();
    let d_balance = d.balance();
    let xtdx = fp.x.tr_matmul(&d.x)?;
    let ytdy = fp.y.tr_matmul(&d.y)?;
    // D_XᵀX + XᵀD_X − YᵀD_Y − D_YᵀY
    let sym = &(&xtdx.transpose() + &xtdx) - &(&ytdy + &ytdy.transpose());
    Ok(data + 0.5 * balance.inner(&d_balance)? + 0.25 * sym.frobenius_norm_sq())
}

/// One evaluated (point, direction) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianSample {
    pub quad_form: f64,
    /// `‖D_X‖_F² + ‖D_Y‖_F²`.
    pub direction_norm_sq: f64,
    /// `quad_form ≥ (σ_r/5)·direction_norm_sq`.
    pub lower_ok: bool,
    /// `quad_form ≤ 5σ₁·direction_norm_sq`.
    pub upper_ok: bool,
}

impl HessianSample {
    pub fn ratio(&self) -> f64 {
        self.quad_form / self.direction_norm_sq
    }
}

#[derive(Debug, Clone)]
pub struct HessianCheck {
    pub samples: Vec<HessianSample>,
    /// Share of samples satisfying both bounds.
    pub fraction_in_bounds: f64,
    /// Smallest `quad_form / ‖D‖²` seen, in units of `σ_r`.
    pub min_ratio_over_sigma_r: f64,
    /// Largest `quad_form / ‖D‖²` seen, in units of `σ₁`.
    pub max_ratio_over_sigma_1: f64,
}

/// Radius `√σ₁ / (500κ√(n1+n2))` of the ℓ2,∞ neighbourhood of the truth
/// on which the curvature bounds hold.
pub fn point_radius(gt: &GroundTruth) -> f64 {
    gt.sigma_max().sqrt() / (500.0 * gt.kappa * ((gt.n1 + gt.n2) as f64).sqrt())
}

/// Spectral radius `√σ₁ / (500κ)` for the reference pair of a direction.
pub fn reference_radius(gt: &GroundTruth) -> f64 {
    gt.sigma_max().sqrt() / (500.0 * gt.kappa)
}

fn rescaled(mut g: DenseMatrix, current: f64, target: f64) -> DenseMatrix {
    if current > 0.0 {
        g = g.scale(target / current);
    }
    g
}

/// Draws one structured sample.
///
/// * Point: `[U;V] + Δ` with Gaussian `Δ` rescaled to
///   `‖Δ‖_{2,∞} = u₁·scale·point_radius`, `u₁ ~ U(0,1]`.
/// * Reference pair `Z₂ = [U;V] + Δ₂`, Gaussian `Δ₂` rescaled to spectral
///   norm `u₂·reference_radius`.
/// * Free pair `Z₁ = (Z₂ + Δ₁)Q` with Gaussian `Δ₁` of Frobenius norm
///   `u₃‖[U;V]‖_F` and a Haar-like orthogonal `Q`.
/// * Direction `D = Z₁R̂ − Z₂` with `R̂ = argmin_R ‖Z₁R − Z₂‖_F`.
pub fn structured_sample(gt: &GroundTruth, neighborhood_scale: f64, seed: u64) -> (FactorPair, FactorPair) {
    use rand::Rng as _;
    let mut g = rng::seeded(seed);
    let n = gt.n1 + gt.n2;
    let truth = gt.stacked();

    let u1: f64 = 1.0 - g.random::<f64>();
    let delta = rng::gaussian_matrix(&mut g, n, gt.r);
    let delta = rescaled(delta.clone(), delta.norm_2inf(), u1 * neighborhood_scale * point_radius(gt));
    let point = FactorPair::from_stacked(&(&truth + &delta), gt.n1);

    let u2: f64 = 1.0 - g.random::<f64>();
    let delta2 = rng::gaussian_matrix(&mut g, n, gt.r);
    let delta2 = rescaled(delta2.clone(), operator_norm(&delta2), u2 * reference_radius(gt));
    let z2 = &truth + &delta2;

    let u3: f64 = 1.0 - g.random::<f64>();
    let delta1 = rng::gaussian_matrix(&mut g, n, gt.r);
    let delta1 = rescaled(delta1.clone(), delta1.frobenius_norm(), u3 * truth.frobenius_norm());
    let q = sign_matrix(&rng::gaussian_matrix(&mut g, gt.r, gt.r)).expect("square");
    let z1 = (&z2 + &delta1).matmul(&q).expect("shapes");

    let r_hat = procrustes(&z1, &z2).expect("shapes");
    let d = &z1.matmul(&r_hat).expect("shapes") - &z2;
    (point, FactorPair::from_stacked(&d, gt.n1))
}

/// Fraction of structured samples on which
/// `(σ_r/5)‖D‖_F² ≤ vec(D)ᵀ∇²f vec(D) ≤ 5σ₁‖D‖_F²` holds, with `σ₁`, `σ_r`
/// of the planted matrix. `neighborhood_scale ∈ [0, 1]` shrinks the point
/// neighbourhood; 0 pins the point to `(U, V)`.
pub fn hessian_bounds_check(
    gt: &GroundTruth,
    mask: &SamplingMask,
    n_samples: usize,
    neighborhood_scale: f64,
    seed: u64,
) -> Result<HessianCheck> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&neighborhood_scale) {
        return Err(Error::param(
            "neighborhood_scale",
            format!("must lie in [0, 1], got {neighborhood_scale}"),
        ));
    }
    let observed = project_omega(&gt.matrix(), mask)?;
    let obs = ObservationSet::from_projected(&observed, mask)?;
    let (s1, sr) = (gt.sigma_max(), gt.sigma_min());

    let eval = |k: u64| -> Result<HessianSample> {
        let (point, d) = structured_sample(gt, neighborhood_scale, rng::derive_seed(seed, k));
        let quad_form = hessian_form_with(&obs, &point, &d)?;
        let direction_norm_sq = d.norm_sq();
        Ok(HessianSample {
            quad_form,
            direction_norm_sq,
            lower_ok: quad_form >= sr / 5.0 * direction_norm_sq,
            upper_ok: quad_form <= 5.0 * s1 * direction_norm_sq,
        })
    };
    let ks: Vec<u64> = (0..n_samples as u64).collect();
    #[cfg(feature = "parallel")]
    let samples = ks.into_par_iter().map(eval).collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let samples = ks.into_iter().map(eval).collect::<Result<Vec<_>>>()?;

    let ok = samples.iter().filter(|s| s.lower_ok && s.upper_ok).count();
    Ok(HessianCheck {
        fraction_in_bounds: ok as f64 / samples.len() as f64,
        min_ratio_over_sigma_r: samples.iter().map(|s| s.ratio() / sr).fold(f64::INFINITY, f64::min),
        max_ratio_over_sigma_1: samples.iter().map(|s| s.ratio() / s1).fold(0.0, f64::max),
        samples,
    })
}

/// Upper bound only, for unstructured Gaussian directions at structured
/// points. Returns the fraction with `form ≤ 5σ₁‖D‖²`.
pub fn hessian_upper_check_unstructured(
    gt: &GroundTruth,
    mask: &SamplingMask,
    n_samples: usize,
    neighborhood_scale: f64,
    seed: u64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let observed = project_omega(&gt.matrix(), mask)?;
    let obs = ObservationSet::from_projected(&observed, mask)?;
    let mut ok = 0;
    for k in 0..n_samples as u64 {
        let s = rng::derive_seed(seed, k);
        let (point, _) = structured_sample(gt, neighborhood_scale, s);
        let mut g = rng::seeded(rng::derive_seed(s, 1));
        let d = FactorPair::new(
            rng::gaussian_matrix(&mut g, gt.n1, gt.r),
            rng::gaussian_matrix(&mut g, gt.n2, gt.r),
        )?;
        if hessian_form_with(&obs, &point, &d)? <= 5.0 * gt.sigma_max() * d.norm_sq() {
            ok += 1;
        }
    }
    Ok(ok as f64 / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_ground_truth, sample_mask};
    use crate::solver::objective;

    fn random_pair(g: &mut rng::Rng, n1: usize, n2: usize, r: usize) -> FactorPair {
        FactorPair::new(rng::gaussian_matrix(g, n1, r), rng::gaussian_matrix(g, n2, r)).unwrap()
    }

    #[test]
    fn zero_direction_and_homogeneity() {
        let gt = generate_ground_truth(12, 10, 2, 2.0, 1).unwrap();
        let mask = sample_mask(12, 10, 0.5, 2).unwrap();
        let m = gt.matrix();
        let mut g = rng::seeded(3);
        let fp = random_pair(&mut g, 12, 10, 2);
        let d = random_pair(&mut g, 12, 10, 2);
        assert_eq!(hessian_quadratic_form(&fp, &FactorPair::zeros(12, 10, 2), &m, &mask).unwrap(), 0.0);
        let base = hessian_quadratic_form(&fp, &d, &m, &mask).unwrap();
        let scaled = hessian_quadratic_form(&fp, &d.scale(-2.5), &m, &mask).unwrap();
        assert!((scaled - 6.25 * base).abs() <= 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn matches_second_difference() {
        let mut g = rng::seeded(7);
        for trial in 0..5 {
            let (n1, n2, r) = (10 + trial, 8 + 2 * trial, 1 + trial % 3);
            let m = rng::gaussian_matrix(&mut g, n1, r).matmul_tr(&rng::gaussian_matrix(&mut g, n2, r)).unwrap();
            let mask = sample_mask(n1, n2, 0.6, trial as u64).unwrap();
            let observed = project_omega(&m, &mask).unwrap();
            let fp = random_pair(&mut g, n1, n2, r);
            let d = random_pair(&mut g, n1, n2, r);
            let h = 1e-4;
            let f = |p: &FactorPair| objective(p, &observed, &mask).unwrap();
            let fd = (f(&fp.add_scaled(h, &d).unwrap()) - 2.0 * f(&fp) + f(&fp.add_scaled(-h, &d).unwrap())) / (h * h);
            let form = hessian_quadratic_form(&fp, &d, &m, &mask).unwrap();
            assert!((fd - form).abs() <= 1e-5 * form.abs(), "fd {fd} form {form}");
        }
    }

    #[test]
    fn population_case_at_truth() {
        let gt = generate_ground_truth(30, 25, 2, 2.0, 4).unwrap();
        let mask = SamplingMask::full(30, 25);
        let check = hessian_bounds_check(&gt, &mask, 40, 0.0, 9).unwrap();
        assert_eq!(check.fraction_in_bounds, 1.0);
        // Scale 0 pins the point to the truth.
        let (point, _) = structured_sample(&gt, 0.0, 5);
        assert_eq!(point.x, gt.u);
        assert_eq!(point.y, gt.v);
    }

    #[test]
    fn sample_respects_neighbourhoods() {
        let gt = generate_ground_truth(30, 25, 2, 2.0, 4).unwrap();
        for s in 0..10 {
            let (point, d) = structured_sample(&gt, 1.0, s);
            let off = &point.stacked() - &gt.stacked();
            assert!(off.norm_2inf() <= point_radius(&gt) * (1.0 + 1e-12));
            assert!(d.norm_sq() > 0.0);
        }
    }

    #[test]
    fn parameter_errors() {
        let gt = generate_ground_truth(10, 10, 2, 2.0, 4).unwrap();
        let mask = SamplingMask::full(10, 10);
        assert!(hessian_bounds_check(&gt, &mask, 0, 0.5, 0).is_err());
        assert!(hessian_bounds_check(&gt, &mask, 5, 1.5, 0).is_err());
    }

    #[test]
    fn unstructured_upper_bound() {
        let gt = generate_ground_truth(40, 30, 2, 2.0, 4).unwrap();
        let mask = sample_mask(40, 30, 0.8, 1).unwrap();
        assert!(hessian_upper_check_unstructured(&gt, &mask, 20, 1.0, 3).unwrap() >= 0.95);
    }
}
