//! Verification instruments: the Hessian quadratic form and its curvature
//! bounds, the sampling deviation operator, the mask spectral gap and
//! finite-difference gradient checks.

mod deviation;
mod fd;
mod hessian;
mod summary;

pub use deviation::{deviation_bound, sampling_deviation, spectral_gap, GAP_REL_TOL};
pub use fd::{directional_pair, gradient_fd_check, random_unit_direction, FdReport, FD_ABS_FLOOR};
pub use hessian::{
    hessian_bounds_check, hessian_form_with, hessian_quadratic_form, hessian_upper_check_unstructured,
    point_radius, reference_radius, structured_sample, HessianCheck, HessianSample,
};
pub use summary::{read_checks_csv, write_checks_csv, CheckSummary, CHECK_HEADER};
