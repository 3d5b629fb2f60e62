use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major.
///
/// Entries are finite on construction through [`DenseMatrix::new`]; the
/// arithmetic helpers do not re-check this, so a diverging iteration can
/// still produce non-finite values (see [`DenseMatrix::is_finite`]).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for
    /// literals in tests and examples.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), cols, data).expect("finite literal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec_unchecked(rows, cols, data)
    }

    /// Rectangular matrix with `diag` on its main diagonal.
    pub fn from_diagonal(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (k, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(k, k)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * other` without forming the transpose.
    pub fn tr_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "product of ({}x{})ᵀ and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * otherᵀ` without forming the transpose.
    pub fn matmul_tr(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "product of {}x{} and ({}x{})ᵀ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.rows, |i, j| {
            dot(self.row(i), other.row(j))
        }))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sum")?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "difference")?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_vec_unchecked(self.rows, self.cols, data)
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "inner product")?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// ℓ2,∞ norm: the largest Euclidean row norm.
    pub fn norm_2inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| norm2(self.row(i)))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies column `k` by `weights[k]`.
    pub fn scale_columns(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{} column weights for {} columns",
                weights.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for (v, w) in out.row_mut(i).iter_mut().zip(weights) {
                *v *= w;
            }
        }
        Ok(out)
    }

    /// Stacks `self` on top of `bottom`.
    pub fn vstack(&self, bottom: &Self) -> Result<Self> {
        if self.cols != bottom.cols {
            return Err(Error::Dimension(format!(
                "vertical stack of {} and {} columns",
                self.cols, bottom.cols
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + bottom.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&bottom.data);
        Ok(Self::from_vec_unchecked(self.rows + bottom.rows, self.cols, data))
    }

    /// Splits into rows `0..at` and `at..rows`.
    pub fn split_rows(&self, at: usize) -> (Self, Self) {
        assert!(at <= self.rows);
        let (top, bottom) = self.data.split_at(at * self.cols);
        (
            Self::from_vec_unchecked(at, self.cols, top.to_vec()),
            Self::from_vec_unchecked(self.rows - at, self.cols, bottom.to_vec()),
        )
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; use the `try_*` methods when the
// shapes come from user input.
impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.try_add(rhs).expect("shape mismatch in +")
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.try_sub(rhs).expect("shape mismatch in -")
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs).expect("shape mismatch in *")
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        self.map(|v| -v)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for v in self.row(i).iter().take(8) {
                write!(f, "{v:>12.5e} ")?;
            }
            if self.cols > 8 {
                write!(f, "...")?;
            }
            writeln!(f)?;
        }
        if self.rows > 12 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}
