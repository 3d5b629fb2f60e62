use std::panic::{catch_unwind, AssertUnwindSafe};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::{Cell, ExperimentConfig, VariantSelection};
use crate::diagnostics::{gradient_fd_check, hessian_bounds_check, CheckSummary};
use crate::error::Result;
use crate::leaveoneout::{loo_diagnostics, LooDiagnostics, LooEnsemble};
use crate::problem::{generate_ground_truth, project_omega, sample_mask, GroundTruth, SamplingMask};
use crate::rng::derive_seed;
use crate::solver::{
    metrics::relative_recovery_error, run_observed, spectral_init, Problem, TrajectoryRecord, Variant,
};

/// A finished solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub eta: f64,
    /// Index of the last iterate.
    pub iterations: usize,
    /// First recorded iteration whose relative error is within the threshold.
    pub iters_to_threshold: Option<usize>,
    /// `‖XYᵀ − M‖_F / ‖M‖_F` at the last iterate.
    pub final_rel_err: f64,
    pub success: bool,
    pub clipped_rows: usize,
    pub records: Vec<TrajectoryRecord>,
    /// Empty unless leave-one-out tracking ran.
    pub loo: Vec<LooDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub cell_index: usize,
    pub seed: u64,
    pub variant: Variant,
    /// `Err` holds the failure message; the sweep carries on.
    pub outcome: std::result::Result<RunSummary, String>,
}

impl RunResult {
    pub fn succeeded(&self) -> bool {
        matches!(&self.outcome, Ok(s) if s.success)
    }
}

/// Per-variant aggregate over the seeds of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantStats {
    pub success_rate: f64,
    /// Mean of `iters_to_threshold` over successful seeds; NaN if none.
    pub mean_iters: f64,
    /// Mean final relative error over runs that finished; NaN if none.
    pub mean_final_err: f64,
}

impl VariantStats {
    fn from_runs<'a>(runs: impl Iterator<Item = &'a RunResult>) -> Self {
        let (mut n, mut wins, mut iters, mut finished, mut errs) = (0usize, 0usize, 0.0, 0usize, 0.0);
        for run in runs {
            n += 1;
            if let Ok(s) = &run.outcome {
                finished += 1;
                errs += s.final_rel_err;
                if s.success {
                    wins += 1;
                    iters += s.iters_to_threshold.unwrap_or(s.iterations) as f64;
                }
            }
        }
        let mean = |total: f64, count: usize| if count == 0 { f64::NAN } else { total / count as f64 };
        Self {
            success_rate: wins as f64 / n.max(1) as f64,
            mean_iters: mean(iters, wins),
            mean_final_err: mean(errs, finished),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cell_index: usize,
    pub cell: Cell,
    pub variant: VariantSelection,
    pub seeds: Vec<u64>,
    /// Runs of this cell ordered by seed, then variant.
    pub runs: Vec<RunResult>,
    /// Vanilla statistics when `variant` is `Both`.
    pub stats: VariantStats,
    pub vanilla: Option<VariantStats>,
    pub projected: Option<VariantStats>,
    /// Diagnostic checks of the cell (empty unless enabled).
    pub checks: Vec<CheckSummary>,
}

impl SweepResult {
    pub fn success_rate(&self) -> f64 {
        self.stats.success_rate
    }

    /// Final relative errors of `variant`, `NaN` for failed runs.
    pub fn final_errors(&self, variant: Variant) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| r.outcome.as_ref().map_or(f64::NAN, |s| s.final_rel_err))
            .collect()
    }
}

/// Ground truth and mask of one (cell, seed), from
/// `derive_seed(seed, cell_index)`.
pub fn instance(cell: &Cell, cell_index: usize, seed: u64) -> Result<(GroundTruth, SamplingMask)> {
    let base = derive_seed(seed, cell_index as u64);
    let gt = generate_ground_truth(cell.n1, cell.n2, cell.r, cell.kappa, derive_seed(base, 0))?;
    let mask = sample_mask(cell.n1, cell.n2, cell.p, derive_seed(base, 1))?;
    Ok((gt, mask))
}

fn solve(
    cfg: &ExperimentConfig,
    gt: &GroundTruth,
    mask: &SamplingMask,
    variant: Variant,
    with_loo: bool,
) -> Result<RunSummary> {
    let m = gt.matrix();
    let threshold = cfg.success_threshold;
    let every = cfg.solver.record_every;
    let mut first_hit: Option<usize> = None;
    let mut loo_rows = Vec::new();
    let mut ensemble = if with_loo { Some(LooEnsemble::new(&m, mask, gt.r)?) } else { None };
    let eta = if with_loo { Problem::new(gt, mask)?.step_size(cfg.solver.step)? } else { 0.0 };

    let out = run_observed(gt, mask, &cfg.solver, variant, |t, fp| {
        if first_hit.is_none() && t % every == 0 && relative_recovery_error(fp, &m)? <= threshold {
            first_hit = Some(t);
        }
        if let Some(ens) = ensemble.as_mut() {
            if t <= cfg.loo_iters {
                if t > 0 {
                    ens.advance(eta)?;
                }
                if t % every == 0 {
                    loo_rows.push(loo_diagnostics(fp, ens, gt)?);
                }
            }
        }
        Ok(())
    })?;
    let success = out.relative_error <= threshold;
    if success && first_hit.is_none() {
        first_hit = Some(out.iterations);
    }
    Ok(RunSummary {
        eta: out.eta,
        iterations: out.iterations,
        iters_to_threshold: first_hit,
        final_rel_err: out.relative_error,
        success,
        clipped_rows: out.clipped_rows,
        records: out.records,
        loo: loo_rows,
    })
}

fn message(e: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = e.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = e.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

fn run_one(cfg: &ExperimentConfig, cell_index: usize, cell: &Cell, seed: u64, variant: Variant) -> RunResult {
    let with_loo = cfg.loo_enabled && variant == Variant::Vanilla && cell.n1 + cell.n2 <= cfg.loo_cap;
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let (gt, mask) = instance(cell, cell_index, seed)?;
        solve(cfg, &gt, &mask, variant, with_loo)
    }));
    let outcome = match outcome {
        Ok(Ok(s)) => Ok(s),
        Ok(Err(e)) => Err(e.to_string()),
        Err(panic) => Err(message(panic)),
    };
    RunResult { cell_index, seed, variant, outcome }
}

fn cell_checks(cfg: &ExperimentConfig, cell_index: usize, cell: &Cell) -> Vec<CheckSummary> {
    let seed = cfg.seeds[0];
    let params = |extra: &[(&'static str, String)]| -> Vec<(&'static str, String)> {
        let mut v = vec![
            ("cell", cell_index.to_string()),
            ("n1", cell.n1.to_string()),
            ("n2", cell.n2.to_string()),
            ("r", cell.r.to_string()),
            ("kappa", cell.kappa.to_string()),
            ("p", cell.p.to_string()),
            ("seed", seed.to_string()),
        ];
        v.extend(extra.iter().cloned());
        v
    };
    let result = (|| -> Result<Vec<CheckSummary>> {
        let (gt, mask) = instance(cell, cell_index, seed)?;
        let base = derive_seed(derive_seed(seed, cell_index as u64), 2);
        let hess = hessian_bounds_check(&gt, &mask, cfg.hessian_samples, 1.0, base)?;
        let observed = project_omega(&gt.matrix(), &mask)?;
        let init = spectral_init(&observed, &mask, gt.r)?;
        let fd = gradient_fd_check(&init, &observed, &mask, 10, 1e-5, derive_seed(base, 1))?;
        Ok(vec![
            CheckSummary::new(
                "hessian_bounds",
                &params(&[("samples", cfg.hessian_samples.to_string())]),
                hess.fraction_in_bounds,
                hess.fraction_in_bounds >= 0.95,
            ),
            CheckSummary::new(
                "gradient_fd",
                &params(&[("h", "1e-5".into()), ("directions", "10".into())]),
                fd.max_relative_error,
                fd.max_relative_error <= 1e-6,
            ),
        ])
    })();
    result.unwrap_or_else(|e| {
        vec![CheckSummary::new("cell_checks", &params(&[("error", e.to_string().replace([',', ';'], " "))]), f64::NAN, false)]
    })
}

/// Runs every (cell, seed, variant) of the grid on a pool of `threads`
/// workers (`None`: all cores). Results are ordered by cell, seed, variant
/// whatever the completion order. `on_run` sees each run as it finishes.
pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    on_run: &(dyn Fn(&Cell, &RunResult) + Sync),
) -> Result<Vec<SweepResult>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let mut items = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for &seed in &cfg.seeds {
            for &variant in cfg.variant.variants() {
                items.push((ci, *cell, seed, variant));
            }
        }
    }
    let work = |&(ci, cell, seed, variant): &(usize, Cell, u64, Variant)| {
        let res = run_one(cfg, ci, &cell, seed, variant);
        on_run(&cell, &res);
        res
    };
    let check_work = |(ci, cell): (usize, &Cell)| {
        if cfg.hessian_check {
            cell_checks(cfg, ci, cell)
        } else {
            Vec::new()
        }
    };

    #[cfg(feature = "parallel")]
    let (runs, checks) = {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| crate::Error::Input(format!("thread pool: {e}")))?;
        pool.install(|| {
            let runs: Vec<RunResult> = items.par_iter().map(work).collect();
            let checks: Vec<Vec<CheckSummary>> = cells.par_iter().enumerate().map(check_work).collect();
            (runs, checks)
        })
    };
    #[cfg(not(feature = "parallel"))]
    let (runs, checks) = {
        let _ = threads;
        let runs: Vec<RunResult> = items.iter().map(work).collect();
        let checks: Vec<Vec<CheckSummary>> = cells.iter().enumerate().map(check_work).collect();
        (runs, checks)
    };

    let mut by_cell: Vec<Vec<RunResult>> = vec![Vec::new(); cells.len()];
    for run in runs {
        by_cell[run.cell_index].push(run);
    }
    Ok(cells
        .iter()
        .zip(by_cell)
        .zip(checks)
        .enumerate()
        .map(|(ci, ((cell, runs), checks))| {
            let of = |v: Variant| VariantStats::from_runs(runs.iter().filter(move |r| r.variant == v));
            let (stats, vanilla, projected) = match cfg.variant {
                VariantSelection::Vanilla => (of(Variant::Vanilla), None, None),
                VariantSelection::Projected => (of(Variant::Projected), None, None),
                VariantSelection::Both => {
                    let v = of(Variant::Vanilla);
                    (v, Some(v), Some(of(Variant::Projected)))
                }
            };
            SweepResult {
                cell_index: ci,
                cell: *cell,
                variant: cfg.variant,
                seeds: cfg.seeds.clone(),
                runs,
                stats,
                vanilla,
                projected,
                checks,
            }
        })
        .collect())
}

pub fn run_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<SweepResult>> {
    run_sweep_with(cfg, threads, &|_, _| {})
}
