//! Factorised objective, spectral initialisation, and the vanilla and
//! ℓ2,∞-projected gradient iterations.

mod factor;
pub mod metrics;
mod init;
mod objective;
mod run;
mod step;

pub use factor::FactorPair;
pub use init::{spectral_init, spectral_init_detailed, split_top_r, SpectralInit};
pub use objective::{gradient, gradient_with, objective, objective_with};
pub use run::{
    read_trajectory_csv, run, run_observed, write_trajectory_csv, Problem, RunOutput,
    SolverConfig, SpectrumSource, StepSize, StopRule, TrajectoryRecord, Variant,
    PLATEAU_REL_CHANGE, PLATEAU_WINDOW, TRAJECTORY_HEADER,
};
pub use step::{
    clip_rows, contraction_factor, default_step_size, gd_step, gd_step_with, projected_gd_step,
    projected_gd_step_with, Radii,
};
