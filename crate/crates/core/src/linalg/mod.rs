//! Dense linear-algebra kernels: the matrix type, partial SVD, power
//! iteration, and Procrustes alignment.

mod matrix;
mod power;
mod procrustes;
mod svd;

pub use matrix::DenseMatrix;
pub(crate) use matrix::{dot, norm2};
pub use power::{
    spectral_norm, spectral_norm_capped, SpectralNormEstimate, DEFAULT_MAX_ITERS,
    DEFAULT_REL_TOL,
};
pub use procrustes::{orthogonality_gap, procrustes, sign_matrix, OrthogonalMatrix};
pub use svd::{operator_norm, singular_values, top_r_svd, PartialSvd};
