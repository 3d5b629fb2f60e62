use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Cell, VariantSelection};
use super::sweep::{RunResult, SweepResult};
use crate::diagnostics::write_checks_csv;
use crate::error::{Error, Result};
use crate::leaveoneout::write_loo_csv;
use crate::solver::{write_trajectory_csv, Variant};

pub const SWEEP_HEADER: &str = "n1,n2,r,kappa,p,variant,seeds,success_rate,mean_iters,mean_final_err";
/// Appended to every `sweep.csv` row when both variants ran.
pub const SWEEP_PAIRED_COLUMNS: &str = "vanilla_success_rate,projected_success_rate";
pub const RUNS_HEADER: &str = "cell,n1,n2,r,kappa,p,variant,seed,status,eta,iterations,iters_to_threshold,final_rel_err,success,clipped_rows,error";

pub fn trajectory_path(dir: &Path, cell_index: usize, seed: u64, variant: Variant) -> PathBuf {
    dir.join("trajectories").join(format!("c{cell_index:03}_s{seed}_{}.csv", variant.name()))
}

pub fn loo_path(dir: &Path, cell_index: usize, seed: u64) -> PathBuf {
    dir.join("diagnostics").join(format!("loo_c{cell_index:03}_s{seed}.csv"))
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::File::create(path).map_err(io(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::write(path, text).map_err(io(path))
}

/// Writes the per-run files (trajectory, leave-one-out diagnostics) of one
/// finished run. Failed runs write nothing.
pub fn write_run_files(dir: &Path, run: &RunResult) -> Result<()> {
    let Ok(summary) = &run.outcome else { return Ok(()) };
    let path = trajectory_path(dir, run.cell_index, run.seed, run.variant);
    write_trajectory_csv(&summary.records, create(&path)?).map_err(|e| at(&path, e))?;
    if !summary.loo.is_empty() {
        let path = loo_path(dir, run.cell_index, run.seed);
        write_loo_csv(&summary.loo, create(&path)?).map_err(|e| at(&path, e))?;
    }
    Ok(())
}

fn at(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } => e,
        other => Error::Io { path: path.to_path_buf(), message: other.to_string() },
    }
}

fn cell_fields(c: &Cell) -> String {
    format!("{},{},{},{},{}", c.n1, c.n2, c.r, c.kappa, c.p)
}

/// `sweep.csv` text: header plus one row per cell.
pub fn sweep_csv(results: &[SweepResult]) -> String {
    let paired = results.iter().any(|r| r.variant == VariantSelection::Both);
    let mut out = String::from(SWEEP_HEADER);
    if paired {
        let _ = write!(out, ",{SWEEP_PAIRED_COLUMNS}");
    }
    out.push('\n');
    for r in results {
        let s = &r.stats;
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            cell_fields(&r.cell),
            r.variant.name(),
            r.seeds.len(),
            s.success_rate,
            s.mean_iters,
            s.mean_final_err
        );
        if paired {
            let rate = |v: Option<_>| v.map_or(f64::NAN, |s: super::sweep::VariantStats| s.success_rate);
            let _ = write!(out, ",{},{}", rate(r.vanilla), rate(r.projected));
        }
        out.push('\n');
    }
    out
}

/// `runs.csv` text: one row per (cell, seed, variant).
pub fn runs_csv(results: &[SweepResult]) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for r in results {
        for run in &r.runs {
            let _ = write!(out, "{},{},{},{},", r.cell_index, cell_fields(&r.cell), run.variant.name(), run.seed);
            match &run.outcome {
                Ok(s) => {
                    let hit = s.iters_to_threshold.map_or(String::new(), |t| t.to_string());
                    let _ = writeln!(
                        out,
                        "ok,{},{},{hit},{},{},{},",
                        s.eta, s.iterations, s.final_rel_err, s.success, s.clipped_rows
                    );
                }
                Err(msg) => {
                    let clean = msg.replace([',', '\n', '"'], " ");
                    let _ = writeln!(out, "failed,,,,,false,,{clean}");
                }
            }
        }
    }
    out
}

pub fn summary_text(results: &[SweepResult]) -> String {
    let mut out = String::new();
    let runs: usize = results.iter().map(|r| r.runs.len()).sum();
    let failed: usize = results.iter().flat_map(|r| &r.runs).filter(|r| r.outcome.is_err()).count();
    let _ = writeln!(out, "cells: {}  runs: {runs}  failed runs: {failed}", results.len());
    for r in results {
        let c = &r.cell;
        let _ = write!(
            out,
            "cell {}: n1={} n2={} r={} kappa={} p={} variant={} seeds={} success_rate={} mean_iters={} mean_final_err={:e}",
            r.cell_index,
            c.n1,
            c.n2,
            c.r,
            c.kappa,
            c.p,
            r.variant.name(),
            r.seeds.len(),
            r.stats.success_rate,
            r.stats.mean_iters,
            r.stats.mean_final_err
        );
        if let (Some(v), Some(p)) = (r.vanilla, r.projected) {
            let _ = write!(out, " vanilla_success_rate={} projected_success_rate={}", v.success_rate, p.success_rate);
        }
        out.push('\n');
        for run in &r.runs {
            if let Err(msg) = &run.outcome {
                let _ = writeln!(out, "  failed: seed {} {}: {msg}", run.seed, run.variant.name());
            }
        }
        for check in &r.checks {
            let _ = writeln!(out, "  check {}: {} ({})", check.name, check.statistic, if check.pass { "pass" } else { "FAIL" });
        }
    }
    out
}

/// Writes `sweep.csv`, `runs.csv`, `summary.txt`, `trajectories/*.csv`,
/// `diagnostics/loo_*.csv` and, when checks ran, `diagnostics/checks.csv`.
pub fn emit_report(results: &[SweepResult], dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::Input("no results to report".into()));
    }
    let mut written = Vec::new();
    for (name, text) in [("sweep.csv", sweep_csv(results)), ("runs.csv", runs_csv(results)), ("summary.txt", summary_text(results))] {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
    }
    for r in results {
        for run in &r.runs {
            write_run_files(dir, run)?;
            if run.outcome.is_ok() {
                written.push(trajectory_path(dir, run.cell_index, run.seed, run.variant));
                if run.outcome.as_ref().is_ok_and(|s| !s.loo.is_empty()) {
                    written.push(loo_path(dir, run.cell_index, run.seed));
                }
            }
        }
    }
    let checks: Vec<_> = results.iter().flat_map(|r| r.checks.iter().cloned()).collect();
    if !checks.is_empty() {
        let path = dir.join("diagnostics").join("checks.csv");
        write_checks_csv(&checks, create(&path)?).map_err(|e| at(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
