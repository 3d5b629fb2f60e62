use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// An iterate `(X, Y)` with `X: n1×r`, `Y: n2×r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
}

impl FactorPair {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.cols() != y.cols() {
            return Err(Error::Dimension(format!(
                "factor ranks differ: X has {} columns, Y has {}",
                x.cols(),
                y.cols()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn zeros(n1: usize, n2: usize, r: usize) -> Self {
        Self {
            x: DenseMatrix::zeros(n1, r),
            y: DenseMatrix::zeros(n2, r),
        }
    }

    /// Splits a stacked `(n1+n2)×r` matrix back into `(X, Y)`.
    pub fn from_stacked(stacked: &DenseMatrix, n1: usize) -> Self {
        let (x, y) = stacked.split_rows(n1);
        Self { x, y }
    }

    pub fn n1(&self) -> usize {
        self.x.rows()
    }

    pub fn n2(&self) -> usize {
        self.y.rows()
    }

    pub fn rank(&self) -> usize {
        self.x.cols()
    }

    /// `[X; Y]`.
    pub fn stacked(&self) -> DenseMatrix {
        self.x.vstack(&self.y).expect("shared rank")
    }

    /// `XYᵀ`.
    pub fn product(&self) -> DenseMatrix {
        self.x.matmul_tr(&self.y).expect("shared rank")
    }

    /// `XᵀX − YᵀY`.
    pub fn balance(&self) -> DenseMatrix {
        let xtx = self.x.tr_matmul(&self.x).expect("shared rank");
        let yty = self.y.tr_matmul(&self.y).expect("shared rank");
        &xtx - &yty
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// `self + alpha·other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.x.axpy(alpha, &other.x)?;
        out.y.axpy(alpha, &other.y)?;
        Ok(out)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        Ok(self.x.inner(&other.x)? + self.y.inner(&other.y)?)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.frobenius_norm_sq() + self.y.frobenius_norm_sq()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            x: self.x.scale(alpha),
            y: self.y.scale(alpha),
        }
    }
}
