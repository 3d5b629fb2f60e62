use super::super::diagnostics::{
    deviation_bound, gradient_fd_check, hessian_bounds_check, hessian_form_with, sampling_deviation,
    spectral_gap, CheckSummary,
};
use crate::error::Result;
use crate::problem::{generate_ground_truth, project_omega, sample_mask, ObservationSet};
use crate::rng::{self, derive_seed};
use crate::solver::metrics::aligned_difference;
use crate::solver::{objective_with, spectral_init, FactorPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckScale {
    /// Seconds; smaller instances and fewer samples.
    Quick,
    /// The reference sizes.
    Full,
}

fn random_pair(g: &mut rng::Rng, n1: usize, n2: usize, r: usize) -> FactorPair {
    FactorPair::new(rng::gaussian_matrix(g, n1, r), rng::gaussian_matrix(g, n2, r)).expect("ranks agree")
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn gradient_check(count: usize, seed: u64) -> Result<CheckSummary> {
    let mut worst: f64 = 0.0;
    for k in 0..count as u64 {
        let mut g = rng::seeded(derive_seed(seed, k));
        let (n1, n2, r) = (8 + (k as usize * 7) % 23, 6 + (k as usize * 5) % 25, 1 + k as usize % 3);
        let p = if k % 2 == 0 { 0.5 } else { 1.0 };
        let m = rng::gaussian_matrix(&mut g, n1, r).matmul_tr(&rng::gaussian_matrix(&mut g, n2, r))?;
        let mask = sample_mask(n1, n2, p, derive_seed(seed, 1000 + k))?;
        let observed = project_omega(&m, &mask)?;
        let fp = random_pair(&mut g, n1, n2, r);
        worst = worst.max(gradient_fd_check(&fp, &observed, &mask, 5, 1e-5, derive_seed(seed, 2000 + k))?.max_relative_error);
    }
    Ok(CheckSummary::new("gradient_fd", &[("instances", count.to_string()), ("h", "1e-5".into())], worst, worst <= 1e-6))
}

fn hessian_form_check(count: usize, seed: u64) -> Result<CheckSummary> {
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for k in 0..count as u64 {
        let mut g = rng::seeded(derive_seed(seed, k));
        let (n1, n2, r) = (8 + (k as usize * 7) % 23, 6 + (k as usize * 5) % 25, 1 + k as usize % 3);
        let m = rng::gaussian_matrix(&mut g, n1, r).matmul_tr(&rng::gaussian_matrix(&mut g, n2, r))?;
        let mask = sample_mask(n1, n2, 0.6, derive_seed(seed, 1000 + k))?;
        let obs = ObservationSet::from_projected(&project_omega(&m, &mask)?, &mask)?;
        let fp = random_pair(&mut g, n1, n2, r);
        let d = random_pair(&mut g, n1, n2, r);
        let f = |q: &FactorPair| objective_with(&obs, q);
        let second = (f(&fp.add_scaled(h, &d)?)? - 2.0 * f(&fp)? + f(&fp.add_scaled(-h, &d)?)?) / (h * h);
        let form = hessian_form_with(&obs, &fp, &d)?;
        worst = worst.max((second - form).abs() / form.abs());
    }
    Ok(CheckSummary::new("hessian_form", &[("samples", count.to_string()), ("h", "1e-4".into())], worst, worst <= 1e-5))
}

fn init_scaling_check(n1: usize, n2: usize, seeds: usize, seed: u64) -> Result<CheckSummary> {
    let mut monotone = 0;
    for s in 0..seeds as u64 {
        let gt = generate_ground_truth(n1, n2, 2, 2.0, derive_seed(seed, s))?;
        let mask_seed = derive_seed(seed, 100 + s);
        let mut errs = Vec::new();
        for p in [0.3, 0.5, 0.8] {
            let mask = sample_mask(n1, n2, p, mask_seed)?;
            let init = spectral_init(&project_omega(&gt.matrix(), &mask)?, &mask, 2)?;
            errs.push(aligned_difference(&init, &gt.stacked())?.spectral());
        }
        if errs.windows(2).all(|w| w[1] < w[0]) {
            monotone += 1;
        }
    }
    let frac = monotone as f64 / seeds as f64;
    Ok(CheckSummary::new(
        "init_scaling",
        &[("n1", n1.to_string()), ("n2", n2.to_string()), ("p", "0.3|0.5|0.8".into()), ("seeds", seeds.to_string())],
        frac,
        monotone == seeds,
    ))
}

fn gap_exponent_check(sizes: &[usize], seeds: usize, seed: u64) -> Result<CheckSummary> {
    let mut points = Vec::new();
    for &n in sizes {
        for s in 0..seeds as u64 {
            let mask = sample_mask(n, n, 0.3, derive_seed(seed, (n as u64) << 8 | s))?;
            points.push((n as f64, spectral_gap(&mask)));
        }
    }
    let slope = log_log_slope(&points);
    let sizes_text = sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("|");
    Ok(CheckSummary::new(
        "spectral_gap_exponent",
        &[("n", sizes_text), ("p", "0.3".into()), ("seeds", seeds.to_string())],
        slope,
        (0.4..=0.6).contains(&slope),
    ))
}

fn deviation_check(count: usize, seed: u64) -> Result<CheckSummary> {
    let mut ok = 0;
    for k in 0..count as u64 {
        let mut g = rng::seeded(derive_seed(seed, k));
        let mask = sample_mask(60, 60, 0.3, derive_seed(seed, 1000 + k))?;
        let (ra, rb) = (1 + k as usize % 3, 1 + (k as usize / 3) % 3);
        let a = rng::gaussian_matrix(&mut g, 60, ra);
        let c = rng::gaussian_matrix(&mut g, 60, ra);
        let b = rng::gaussian_matrix(&mut g, 60, rb);
        let d = rng::gaussian_matrix(&mut g, 60, rb);
        if sampling_deviation(&a, &c, &b, &d, &mask)?.abs() <= deviation_bound(&a, &c, &b, &d, &mask)? {
            ok += 1;
        }
    }
    Ok(CheckSummary::new(
        "deviation_bound",
        &[("instances", count.to_string()), ("n", "60x60".into()), ("p", "0.3".into())],
        ok as f64 / count as f64,
        ok == count,
    ))
}

fn hessian_bounds(n1: usize, n2: usize, samples: usize, seed: u64) -> Result<CheckSummary> {
    let gt = generate_ground_truth(n1, n2, 2, 2.0, derive_seed(seed, 0))?;
    let mask = sample_mask(n1, n2, 0.6, derive_seed(seed, 1))?;
    let check = hessian_bounds_check(&gt, &mask, samples, 1.0, derive_seed(seed, 2))?;
    Ok(CheckSummary::new(
        "hessian_bounds",
        &[
            ("n1", n1.to_string()),
            ("n2", n2.to_string()),
            ("r", "2".into()),
            ("kappa", "2".into()),
            ("p", "0.6".into()),
            ("samples", samples.to_string()),
        ],
        check.fraction_in_bounds,
        check.fraction_in_bounds >= 0.95,
    ))
}

/// The diagnostics suite: gradient and Hessian finite-difference oracles,
/// initialisation scaling in `p`, spectral-gap exponent, deviation bound and
/// curvature bounds.
pub fn run_check_suite(scale: CheckScale, seed: u64) -> Result<Vec<CheckSummary>> {
    let s = |k: u64| derive_seed(seed, k);
    Ok(match scale {
        CheckScale::Full => vec![
            gradient_check(20, s(1))?,
            hessian_form_check(20, s(2))?,
            init_scaling_check(200, 180, 5, s(3))?,
            gap_exponent_check(&[50, 100, 200, 400], 5, s(4))?,
            deviation_check(100, s(5))?,
            hessian_bounds(150, 130, 200, s(6))?,
        ],
        CheckScale::Quick => vec![
            gradient_check(5, s(1))?,
            hessian_form_check(5, s(2))?,
            init_scaling_check(100, 90, 3, s(3))?,
            gap_exponent_check(&[50, 100, 200], 3, s(4))?,
            deviation_check(20, s(5))?,
            hessian_bounds(80, 70, 50, s(6))?,
        ],
    })
}
