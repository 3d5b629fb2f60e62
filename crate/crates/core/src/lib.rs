//! Low-rank matrix completion by vanilla gradient descent on the balanced
//! factorised objective, with spectral initialisation, an ℓ2,∞-projected
//! baseline, and leave-one-out instrumentation.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod leaveoneout;
pub mod linalg;
pub mod problem;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
