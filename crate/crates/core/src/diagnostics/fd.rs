use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problem::{ObservationSet, SamplingMask};
use crate::rng;
use crate::solver::{gradient_with, objective_with, FactorPair};

/// Denominator floor for relative discrepancies.
pub const FD_ABS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    /// `max |fd − ⟨∇f, d⟩| / max(|⟨∇f, d⟩|, |fd|, FD_ABS_FLOOR)`.
    pub max_relative_error: f64,
    pub max_abs_error: f64,
    /// Largest `|⟨∇f, d⟩|` over the directions.
    pub max_directional: f64,
}

/// `(⟨∇f, d⟩, [f(fp + hd) − f(fp − hd)] / 2h)`.
pub fn directional_pair(obs: &ObservationSet, fp: &FactorPair, d: &FactorPair, h: f64) -> Result<(f64, f64)> {
    let analytic = gradient_with(obs, fp)?.inner(d)?;
    let plus = objective_with(obs, &fp.add_scaled(h, d)?)?;
    let minus = objective_with(obs, &fp.add_scaled(-h, d)?)?;
    Ok((analytic, (plus - minus) / (2.0 * h)))
}

/// Unit direction (stacked Frobenius norm 1) with Gaussian entries.
pub fn random_unit_direction(g: &mut rng::Rng, n1: usize, n2: usize, r: usize) -> FactorPair {
    let d = FactorPair::new(rng::gaussian_matrix(g, n1, r), rng::gaussian_matrix(g, n2, r)).expect("ranks agree");
    let norm = d.norm_sq().sqrt();
    d.scale(1.0 / norm)
}

/// Compares the analytic directional derivative with central differences
/// over `n_directions` random unit directions.
pub fn gradient_fd_check(
    fp: &FactorPair,
    observed_m: &DenseMatrix,
    mask: &SamplingMask,
    n_directions: usize,
    h: f64,
    seed: u64,
) -> Result<FdReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("must be positive and finite, got {h}")));
    }
    if n_directions == 0 {
        return Err(Error::param("n_directions", "must be at least 1"));
    }
    let obs = ObservationSet::from_projected(observed_m, mask)?;
    let mut g = rng::seeded(seed);
    let mut report = FdReport { max_relative_error: 0.0, max_abs_error: 0.0, max_directional: 0.0 };
    for _ in 0..n_directions {
        let d = random_unit_direction(&mut g, fp.n1(), fp.n2(), fp.rank());
        let (analytic, fd) = directional_pair(&obs, fp, &d, h)?;
        let abs = (fd - analytic).abs();
        let rel = abs / analytic.abs().max(fd.abs()).max(FD_ABS_FLOOR);
        report.max_abs_error = report.max_abs_error.max(abs);
        report.max_relative_error = report.max_relative_error.max(rel);
        report.max_directional = report.max_directional.max(analytic.abs());
    }
    Ok(report)
}
