//! Browser bindings. Each exported function returns a JSON string.
//!
//! Build with `wasm-pack build crates/wasm --target web --out-dir www/pkg`
//! and serve `crates/wasm/www/`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use lrmc_core::diagnostics::spectral_gap;
use lrmc_core::problem::{generate_ground_truth, project_omega, sample_mask};
use lrmc_core::rng::derive_seed;
use lrmc_core::solver::metrics::{aligned_difference, relative_recovery_error};
use lrmc_core::solver::{contraction_factor, run_observed, spectral_init, SolverConfig, Variant};
use lrmc_core::{Error, Result};

/// Largest dimension accepted from the page.
pub const MAX_DIM: usize = 400;
pub const MAX_ITERS: usize = 50_000;

fn check_dim(name: &'static str, v: usize) -> Result<()> {
    if v == 0 || v > MAX_DIM {
        return Err(Error::Parameter { name, reason: format!("must lie in 1..={MAX_DIM}, got {v}") });
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub eta: f64,
    pub rho: f64,
    pub iter: Vec<usize>,
    pub frob_err: Vec<f64>,
    pub rel_err: Vec<f64>,
    /// `ρ^t √σ_r` at each recorded iteration.
    pub envelope: Vec<f64>,
    pub iterations: usize,
    pub stopped_early: bool,
    pub relative_error: f64,
    pub clipped_rows: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    n1: usize,
    n2: usize,
    r: usize,
    kappa: f64,
    p: f64,
    seed: u64,
    max_iters: usize,
    record_every: usize,
    projected: bool,
) -> Result<Trajectory> {
    check_dim("n1", n1)?;
    check_dim("n2", n2)?;
    if max_iters > MAX_ITERS {
        return Err(Error::Parameter { name: "max_iters", reason: format!("at most {MAX_ITERS}") });
    }
    let gt = generate_ground_truth(n1, n2, r, kappa, derive_seed(seed, 0))?;
    let mask = sample_mask(n1, n2, p, derive_seed(seed, 1))?;
    let cfg = SolverConfig { max_iters, record_every: record_every.max(1), ..SolverConfig::default() };
    let m = gt.matrix();
    let mut rel_err = Vec::new();
    let variant = if projected { Variant::Projected } else { Variant::Vanilla };
    let out = run_observed(&gt, &mask, &cfg, variant, |t, fp| {
        if t % cfg.record_every == 0 {
            rel_err.push(relative_recovery_error(fp, &m)?);
        }
        Ok(())
    })?;
    if out.iterations % cfg.record_every != 0 {
        rel_err.push(out.relative_error);
    }
    let rho = contraction_factor(out.eta, gt.sigma_min());
    let root = gt.sigma_min().sqrt();
    Ok(Trajectory {
        eta: out.eta,
        rho,
        iter: out.records.iter().map(|r| r.iter).collect(),
        frob_err: out.records.iter().map(|r| r.aligned_frob_err).collect(),
        envelope: out.records.iter().map(|r| rho.powf(r.iter as f64) * root).collect(),
        rel_err,
        iterations: out.iterations,
        stopped_early: out.stopped_early,
        relative_error: out.relative_error,
        clipped_rows: out.clipped_rows,
    })
}

#[derive(Debug, Serialize)]
pub struct GapCurve {
    pub n: Vec<usize>,
    /// Mean of `‖Ω − pJ‖` over the seeds.
    pub gap: Vec<f64>,
    /// `2√(np(1−p))` for comparison.
    pub reference: Vec<f64>,
    /// Least-squares slope of log gap against log n.
    pub slope: f64,
}

pub fn gap_curve(p: f64, sizes: &[usize], seeds: usize, seed: u64) -> Result<GapCurve> {
    if sizes.len() < 2 {
        return Err(Error::Parameter { name: "sizes", reason: "need at least two sizes".into() });
    }
    let seeds = seeds.max(1);
    let mut gap = Vec::new();
    for &n in sizes {
        check_dim("n", n)?;
        let mut sum = 0.0;
        for s in 0..seeds as u64 {
            sum += spectral_gap(&sample_mask(n, n, p, derive_seed(derive_seed(seed, n as u64), s))?);
        }
        gap.push(sum / seeds as f64);
    }
    let lx: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = gap.iter().map(|g| g.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Ok(GapCurve {
        n: sizes.to_vec(),
        reference: sizes.iter().map(|&n| 2.0 * (n as f64 * p * (1.0 - p)).sqrt()).collect(),
        gap,
        slope,
    })
}

#[derive(Debug, Serialize)]
pub struct InitCurve {
    pub p: Vec<f64>,
    /// Aligned spectral error of the initialisation.
    pub spec_err: Vec<f64>,
    /// Aligned Frobenius error of the initialisation.
    pub frob_err: Vec<f64>,
}

/// Masks share a seed, so they are nested in `p`.
pub fn init_curve(n1: usize, n2: usize, r: usize, kappa: f64, ps: &[f64], seed: u64) -> Result<InitCurve> {
    check_dim("n1", n1)?;
    check_dim("n2", n2)?;
    let gt = generate_ground_truth(n1, n2, r, kappa, derive_seed(seed, 0))?;
    let (mut spec_err, mut frob_err) = (Vec::new(), Vec::new());
    for &p in ps {
        let mask = sample_mask(n1, n2, p, derive_seed(seed, 1))?;
        let init = spectral_init(&project_omega(&gt.matrix(), &mask)?, &mask, r)?;
        let d = aligned_difference(&init, &gt.stacked())?;
        spec_err.push(d.spectral());
        frob_err.push(d.frobenius());
    }
    Ok(InitCurve { p: ps.to_vec(), spec_err, frob_err })
}

fn to_js<T: Serialize>(v: Result<T>) -> std::result::Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Gradient descent from the spectral initialisation; JSON [`Trajectory`].
#[wasm_bindgen(js_name = gdTrajectory)]
#[allow(clippy::too_many_arguments)]
pub fn gd_trajectory(
    n1: usize,
    n2: usize,
    r: usize,
    kappa: f64,
    p: f64,
    seed: u32,
    max_iters: usize,
    record_every: usize,
    projected: bool,
) -> std::result::Result<String, JsError> {
    to_js(trajectory(n1, n2, r, kappa, p, seed as u64, max_iters, record_every, projected))
}

/// `‖Ω − pJ‖` against `n` for square masks; JSON [`GapCurve`].
#[wasm_bindgen(js_name = spectralGapCurve)]
pub fn spectral_gap_curve(p: f64, sizes: Vec<u32>, seeds: usize, seed: u32) -> std::result::Result<String, JsError> {
    let sizes: Vec<usize> = sizes.into_iter().map(|n| n as usize).collect();
    to_js(gap_curve(p, &sizes, seeds, seed as u64))
}

/// Initialisation error against `p`; JSON [`InitCurve`].
#[wasm_bindgen(js_name = initErrorCurve)]
pub fn init_error_curve(
    n1: usize,
    n2: usize,
    r: usize,
    kappa: f64,
    ps: Vec<f64>,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(init_curve(n1, n2, r, kappa, &ps, seed as u64))
}
