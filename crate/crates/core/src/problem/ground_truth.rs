use nalgebra::QR;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, orthogonality_gap, DenseMatrix};
use crate::rng;

/// A planted rank-`r` matrix `M = UVᵀ` with balanced factors
/// `U = Ũ Σ^{1/2}`, `V = Ṽ Σ^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub seed: u64,
    /// Left factor `U`, n1×r.
    pub u: DenseMatrix,
    /// Right factor `V`, n2×r.
    pub v: DenseMatrix,
    /// Orthonormal left singular basis `Ũ`.
    pub left_basis: DenseMatrix,
    /// Orthonormal right singular basis `Ṽ`.
    pub right_basis: DenseMatrix,
    /// `σ₁ ≥ … ≥ σ_r > 0`.
    pub singulars: Vec<f64>,
    /// `max(μ(Ũ), μ(Ṽ))`, measured on the generated bases.
    pub mu: f64,
    pub kappa: f64,
}

impl GroundTruth {
    /// `M = UVᵀ`.
    pub fn matrix(&self) -> DenseMatrix {
        self.u.matmul_tr(&self.v).expect("consistent factors")
    }

    /// `[U; V]`.
    pub fn stacked(&self) -> DenseMatrix {
        self.u.vstack(&self.v).expect("consistent factors")
    }

    pub fn sigma_max(&self) -> f64 {
        self.singulars[0]
    }

    pub fn sigma_min(&self) -> f64 {
        self.singulars[self.r - 1]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))
    }
}

/// Geometric profile from `σ₁ = kappa` down to `σ_r = 1`.
pub fn geometric_singulars(r: usize, kappa: f64) -> Vec<f64> {
    if r == 1 {
        return vec![1.0];
    }
    (0..r)
        .map(|k| kappa.powf((r - 1 - k) as f64 / (r - 1) as f64))
        .collect()
}

fn orthonormalize(g: DenseMatrix) -> DenseMatrix {
    let q = QR::new(g.to_nalgebra()).q();
    DenseMatrix::from_nalgebra(&q)
}

/// Draws a ground truth with orthonormalised Gaussian singular bases and a
/// geometric spectrum between 1 and `kappa`.
///
/// With `r = 1` the spectrum is the single value 1, so `kappa` must be 1.
pub fn generate_ground_truth(
    n1: usize,
    n2: usize,
    r: usize,
    kappa: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::Dimension(format!(
            "rank {r} is not in 1..={} for a {n1}x{n2} matrix",
            n1.min(n2)
        )));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::param("kappa", format!("must be a finite value >= 1, got {kappa}")));
    }
    if r == 1 && kappa != 1.0 {
        return Err(Error::param("kappa", "a rank-1 matrix has condition number 1"));
    }

    let mut g = rng::seeded(seed);
    let left_basis = orthonormalize(rng::gaussian_matrix(&mut g, n1, r));
    let right_basis = orthonormalize(rng::gaussian_matrix(&mut g, n2, r));
    let singulars = geometric_singulars(r, kappa);
    let roots: Vec<f64> = singulars.iter().map(|s| s.sqrt()).collect();
    let u = left_basis.scale_columns(&roots)?;
    let v = right_basis.scale_columns(&roots)?;
    let mu = incoherence(&left_basis)?.max(incoherence(&right_basis)?);
    let kappa = condition_number(&singulars)?;

    Ok(GroundTruth {
        n1,
        n2,
        r,
        seed,
        u,
        v,
        left_basis,
        right_basis,
        singulars,
        mu,
        kappa,
    })
}

/// Subspace incoherence `μ = (n/r)·max_i ‖Q_{i,·}‖²` of an orthonormal basis.
pub fn incoherence(q: &DenseMatrix) -> Result<f64> {
    let (n, r) = q.shape();
    if r == 0 || n < r {
        return Err(Error::Dimension(format!("basis of shape {n}x{r}")));
    }
    let gap = orthogonality_gap(q);
    if gap > 1e-8 {
        return Err(Error::Precondition(format!(
            "columns are not orthonormal (‖QᵀQ − I‖_F = {gap:e})"
        )));
    }
    let max_row = (0..n).map(|i| norm2(q.row(i)).powi(2)).fold(0.0, f64::max);
    Ok(n as f64 / r as f64 * max_row)
}

/// `σ₁/σ_r` of a nonincreasing positive spectrum.
pub fn condition_number(singulars: &[f64]) -> Result<f64> {
    let (first, last) = match (singulars.first(), singulars.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::param("singulars", "empty spectrum")),
    };
    if singulars.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::param("singulars", "all values must be positive"));
    }
    if singulars.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param("singulars", "values must be nonincreasing"));
    }
    Ok(first / last)
}
