//! Planted problems: ground truth, Bernoulli masks, and the sampling
//! projectors built on them.

mod ground_truth;
mod mask;
mod observations;

pub use ground_truth::{
    condition_number, generate_ground_truth, geometric_singulars, incoherence, GroundTruth,
};
pub use mask::{
    project_omega, project_omega_restricted, project_row_or_column, sample_mask, Axis,
    Restriction, SamplingMask,
};
pub use observations::{Observation, ObservationSet};
