//! Experiment orchestration: config parsing, seeded grid sweeps, and CSV
//! report emission.
//!
//! # Config format
//!
//! Flat `key = value` lines (TOML syntax). Grid keys take a number or a
//! list of numbers; the grid is their cartesian product.
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `n1`, `n2`, `r` | positive integers | required |
//! | `kappa` | numbers ≥ 1 | required |
//! | `p` | numbers in (0, 1] | required |
//! | `seeds` | nonnegative integers | required |
//! | `variant` | `"vanilla"`, `"projected"`, `"both"` | `"vanilla"` |
//! | `step` | `"theory"`, `"theory_oracle"` or a positive number | `"theory"` |
//! | `max_iters` | integer | 50000 |
//! | `stop_tol` | number | 1e-7 |
//! | `record_every` | integer | 10 |
//! | `stop_rule` | `"oracle"`, `"plateau"` | `"oracle"` |
//! | `projection_slack` | number | 0.02 |
//! | `success_threshold` | number | 1e-4 |
//! | `loo_enabled` | boolean | false |
//! | `loo_cap` | integer (max n1+n2 for leave-one-out tracking) | 400 |
//! | `loo_iters` | integer (iterations tracked) | 500 |
//! | `hessian_check` | boolean | false |
//! | `hessian_samples` | integer | 50 |
//! | `output_dir` | string | `$LRMC_OUTPUT_DIR`, else `lrmc-out` |
//!
//! Unknown keys are rejected.

mod checks;
mod config;
mod report;
mod sweep;

pub use checks::{run_check_suite, CheckScale};
pub use config::{
    parse_config, parse_config_str, Cell, ExperimentConfig, VariantSelection, FALLBACK_OUTPUT_DIR,
    OUTPUT_DIR_ENV,
};
pub use report::{
    emit_report, loo_path, runs_csv, summary_text, sweep_csv, trajectory_path, write_run_files,
    RUNS_HEADER, SWEEP_HEADER, SWEEP_PAIRED_COLUMNS,
};
pub use sweep::{
    instance, run_sweep, run_sweep_with, RunResult, RunSummary, SweepResult, VariantStats,
};
