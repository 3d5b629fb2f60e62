use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

use super::mask::{Axis, SamplingMask};

/// One weighted, observed entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub target: f64,
}

/// Weighted sparse sampling operator `A ↦ Σ w_ij A_ij e_i e_jᵀ` together with
/// the target values `M_ij`.
///
/// The main objective uses weight `1/p` on Ω. A leave-one-out objective for
/// slice `l` uses `1/p` on Ω minus that slice and weight 1 on every entry of
/// the slice. Entries are kept in row-major order, so two sets built from
/// identical data evaluate identically bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n1: usize,
    n2: usize,
    entries: Vec<Observation>,
}

impl ObservationSet {
    /// Main sampling operator from `P_Ω(M)` and Ω.
    pub fn from_projected(observed_m: &DenseMatrix, mask: &SamplingMask) -> Result<Self> {
        check_shape(observed_m, mask)?;
        let weight = 1.0 / mask.p();
        let entries = mask
            .observed()
            .iter()
            .map(|&(i, j)| Observation {
                i,
                j,
                weight,
                target: observed_m[(i, j)],
            })
            .collect();
        Ok(Self {
            n1: mask.n1(),
            n2: mask.n2(),
            entries,
        })
    }

    /// `(1/p)P_{Ω_{−l}} + P_l` for row (`Axis::Row`) or column slice `l`.
    /// Needs the full matrix because slice `l` is treated as fully observed.
    pub fn leave_one_out(m: &DenseMatrix, mask: &SamplingMask, axis: Axis, l: usize) -> Result<Self> {
        check_shape(m, mask)?;
        let len = match axis {
            Axis::Row => mask.n1(),
            Axis::Column => mask.n2(),
        };
        if l >= len {
            return Err(Error::Index { index: l, len });
        }
        let weight = 1.0 / mask.p();
        let mut entries = Vec::with_capacity(mask.len() + len);
        for i in 0..mask.n1() {
            for j in 0..mask.n2() {
                let in_slice = match axis {
                    Axis::Row => i == l,
                    Axis::Column => j == l,
                };
                let w = if in_slice {
                    1.0
                } else if mask.contains(i, j) {
                    weight
                } else {
                    continue;
                };
                entries.push(Observation {
                    i,
                    j,
                    weight: w,
                    target: m[(i, j)],
                });
            }
        }
        Ok(Self {
            n1: mask.n1(),
            n2: mask.n2(),
            entries,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub(crate) fn check_factors(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        if x.rows() != self.n1 || y.rows() != self.n2 || x.cols() != y.cols() {
            return Err(Error::Dimension(format!(
                "factors {}x{} and {}x{} do not fit a {}x{} problem",
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols(),
                self.n1,
                self.n2
            )));
        }
        Ok(())
    }

    /// `½ Σ w_ij (⟨x_i, y_j⟩ − M_ij)²`.
    pub fn misfit(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.check_factors(x, y)?;
        Ok(0.5
            * self
                .entries
                .iter()
                .map(|e| e.weight * (dot(x.row(e.i), y.row(e.j)) - e.target).powi(2))
                .sum::<f64>())
    }

    /// Adds `S·y` to `grad_x` and `Sᵀ·x` to `grad_y`, where `S` is the
    /// weighted residual `Σ w_ij (⟨x_i, y_j⟩ − M_ij) e_i e_jᵀ`.
    pub fn accumulate_gradient(
        &self,
        x: &DenseMatrix,
        y: &DenseMatrix,
        grad_x: &mut DenseMatrix,
        grad_y: &mut DenseMatrix,
    ) -> Result<()> {
        self.check_factors(x, y)?;
        for e in &self.entries {
            let (xi, yj) = (x.row(e.i), y.row(e.j));
            let s = e.weight * (dot(xi, yj) - e.target);
            for (g, &v) in grad_x.row_mut(e.i).iter_mut().zip(yj) {
                *g += s * v;
            }
            for (g, &v) in grad_y.row_mut(e.j).iter_mut().zip(xi) {
                *g += s * v;
            }
        }
        Ok(())
    }

    /// Dense weighted residual matrix `S`.
    pub fn weighted_residual(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_factors(x, y)?;
        let mut s = DenseMatrix::zeros(self.n1, self.n2);
        for e in &self.entries {
            s[(e.i, e.j)] = e.weight * (dot(x.row(e.i), y.row(e.j)) - e.target);
        }
        Ok(s)
    }

    /// The weighted matrix `Σ w_ij M_ij e_i e_jᵀ`; for the main set this is
    /// `(1/p)P_Ω(M)`, for a leave-one-out set it is `M^{0,(l)}`.
    pub fn weighted_targets(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n1, self.n2);
        for e in &self.entries {
            out[(e.i, e.j)] = e.weight * e.target;
        }
        out
    }
}

fn check_shape(m: &DenseMatrix, mask: &SamplingMask) -> Result<()> {
    if m.shape() != mask.shape() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but the mask is {}x{}",
            m.rows(),
            m.cols(),
            mask.n1(),
            mask.n2()
        )));
    }
    Ok(())
}
