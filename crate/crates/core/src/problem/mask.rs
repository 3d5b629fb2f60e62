use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng;

/// Which family of slices a restricted projector acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

/// Whether a restricted projector drops slice `l` or keeps only it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    Exclude,
    Only,
}

/// Bernoulli(p) observation pattern Ω.
///
/// Kept both as a row-major sorted index list and as a dense membership
/// table; the two views are built together and never mutated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaskRecord", into = "MaskRecord")]
pub struct SamplingMask {
    n1: usize,
    n2: usize,
    p: f64,
    seed: u64,
    observed: Vec<(usize, usize)>,
    membership: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct MaskRecord {
    n1: usize,
    n2: usize,
    p: f64,
    seed: u64,
    observed: Vec<(usize, usize)>,
}

impl TryFrom<MaskRecord> for SamplingMask {
    type Error = Error;
    fn try_from(rec: MaskRecord) -> Result<Self> {
        let mut mask = SamplingMask::from_pairs(rec.n1, rec.n2, rec.p, rec.observed)?;
        mask.seed = rec.seed;
        Ok(mask)
    }
}

impl From<SamplingMask> for MaskRecord {
    fn from(m: SamplingMask) -> Self {
        MaskRecord {
            n1: m.n1,
            n2: m.n2,
            p: m.p,
            seed: m.seed,
            observed: m.observed,
        }
    }
}

fn check_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("sampling rate must lie in (0, 1], got {p}")));
    }
    Ok(())
}

/// Includes each entry independently with probability `p`.
///
/// Entries are visited row-major and entry `(i, j)` is kept when its
/// uniform draw is below `p`, so masks with the same seed are nested in `p`.
pub fn sample_mask(n1: usize, n2: usize, p: f64, seed: u64) -> Result<SamplingMask> {
    check_rate(p)?;
    let mut g = rng::seeded(seed);
    let mut membership = Vec::with_capacity(n1 * n2);
    let mut observed = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let keep = g.random::<f64>() < p;
            membership.push(keep);
            if keep {
                observed.push((i, j));
            }
        }
    }
    Ok(SamplingMask {
        n1,
        n2,
        p,
        seed,
        observed,
        membership,
    })
}

impl SamplingMask {
    /// Builds a mask from explicit index pairs (sorted and checked here).
    /// `p` is the nominal rate used by the `1/p` rescalings.
    pub fn from_pairs(
        n1: usize,
        n2: usize,
        p: f64,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        check_rate(p)?;
        let mut membership = vec![false; n1 * n2];
        for (i, j) in pairs {
            if i >= n1 {
                return Err(Error::Index { index: i, len: n1 });
            }
            if j >= n2 {
                return Err(Error::Index { index: j, len: n2 });
            }
            if std::mem::replace(&mut membership[i * n2 + j], true) {
                return Err(Error::Input(format!("duplicate observed pair ({i}, {j})")));
            }
        }
        let observed = (0..n1 * n2)
            .filter(|&k| membership[k])
            .map(|k| (k / n2, k % n2))
            .collect();
        Ok(Self {
            n1,
            n2,
            p,
            seed: 0,
            observed,
            membership,
        })
    }

    pub fn full(n1: usize, n2: usize) -> Self {
        Self::from_pairs(n1, n2, 1.0, (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))))
            .expect("valid")
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Observed pairs in row-major order.
    pub fn observed(&self) -> &[(usize, usize)] {
        &self.observed
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n1 && j < self.n2 && self.membership[i * self.n2 + j]
    }

    pub fn empirical_rate(&self) -> f64 {
        self.observed.len() as f64 / (self.n1 * self.n2) as f64
    }

    /// The 0/1 indicator matrix of Ω.
    pub fn indicator(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n1, self.n2, |i, j| {
            if self.contains(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    fn check_matrix(&self, m: &DenseMatrix) -> Result<()> {
        if m.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but the mask is {}x{}",
                m.rows(),
                m.cols(),
                self.n1,
                self.n2
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))
    }
}

/// `P_Ω(M)`: observed entries kept, the rest zeroed.
pub fn project_omega(m: &DenseMatrix, mask: &SamplingMask) -> Result<DenseMatrix> {
    mask.check_matrix(m)?;
    Ok(DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        if mask.contains(i, j) {
            m[(i, j)]
        } else {
            0.0
        }
    }))
}

fn check_slice(m_shape: (usize, usize), axis: Axis, l: usize) -> Result<()> {
    let len = match axis {
        Axis::Row => m_shape.0,
        Axis::Column => m_shape.1,
    };
    if l >= len {
        return Err(Error::Index { index: l, len });
    }
    Ok(())
}

#[inline]
fn in_slice(axis: Axis, l: usize, i: usize, j: usize) -> bool {
    match axis {
        Axis::Row => i == l,
        Axis::Column => j == l,
    }
}

/// `P_{Ω_{−l,·}}`, `P_{Ω_{l,·}}` and their column analogues.
pub fn project_omega_restricted(
    m: &DenseMatrix,
    mask: &SamplingMask,
    axis: Axis,
    l: usize,
    mode: Restriction,
) -> Result<DenseMatrix> {
    mask.check_matrix(m)?;
    check_slice(m.shape(), axis, l)?;
    Ok(DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let keep = mask.contains(i, j)
            && match mode {
                Restriction::Exclude => !in_slice(axis, l, i, j),
                Restriction::Only => in_slice(axis, l, i, j),
            };
        if keep {
            m[(i, j)]
        } else {
            0.0
        }
    }))
}

/// `P_{l,·}` / `P_{·,l}`: keeps row/column `l` in full.
pub fn project_row_or_column(m: &DenseMatrix, axis: Axis, l: usize) -> Result<DenseMatrix> {
    check_slice(m.shape(), axis, l)?;
    Ok(DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        if in_slice(axis, l, i, j) {
            m[(i, j)]
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n1: usize, n2: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n1, n2, |i, j| (i * n2 + j) as f64 + 1.0)
    }

    #[test]
    fn full_rate_observes_everything() {
        let mask = sample_mask(7, 5, 1.0, 3).unwrap();
        assert_eq!(mask.len(), 35);
        let m = sample(7, 5);
        assert_eq!(project_omega(&m, &mask).unwrap(), m);
    }

    #[test]
    fn observed_count_concentrates() {
        let mask = sample_mask(50, 50, 0.3, 2024).unwrap();
        let sd = (2500.0_f64 * 0.3 * 0.7).sqrt();
        assert!((mask.len() as f64 - 750.0).abs() <= 4.0 * sd, "{}", mask.len());
    }

    #[test]
    fn deterministic_and_nested() {
        let a = sample_mask(20, 30, 0.4, 9).unwrap();
        assert_eq!(a, sample_mask(20, 30, 0.4, 9).unwrap());
        let b = sample_mask(20, 30, 0.7, 9).unwrap();
        assert!(a.observed().iter().all(|&(i, j)| b.contains(i, j)));
    }

    #[test]
    fn rate_validation() {
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                sample_mask(3, 3, p, 0),
                Err(Error::Parameter { name: "p", .. })
            ));
        }
    }

    #[test]
    fn empty_mask_projects_to_zero() {
        let mask = SamplingMask::from_pairs(3, 4, 0.5, []).unwrap();
        assert!(mask.is_empty());
        assert_eq!(project_omega(&sample(3, 4), &mask).unwrap(), DenseMatrix::zeros(3, 4));
    }

    #[test]
    fn from_pairs_checks() {
        assert!(SamplingMask::from_pairs(2, 2, 0.5, [(0, 0), (0, 0)]).is_err());
        assert!(matches!(
            SamplingMask::from_pairs(2, 2, 0.5, [(2, 0)]),
            Err(Error::Index { index: 2, len: 2 })
        ));
        let m = SamplingMask::from_pairs(2, 2, 0.5, [(1, 1), (0, 1)]).unwrap();
        assert_eq!(m.observed(), &[(0, 1), (1, 1)]);
    }

    #[test]
    fn idempotent_projection() {
        let mask = sample_mask(6, 6, 0.5, 1).unwrap();
        let once = project_omega(&sample(6, 6), &mask).unwrap();
        assert_eq!(project_omega(&once, &mask).unwrap(), once);
        assert!(project_omega(&sample(5, 6), &mask).is_err());
    }

    #[test]
    fn restricted_partition() {
        let mask = sample_mask(6, 5, 0.5, 4).unwrap();
        let m = sample(6, 5);
        let full = project_omega(&m, &mask).unwrap();
        for (axis, len) in [(Axis::Row, 6), (Axis::Column, 5)] {
            for l in 0..len {
                let ex = project_omega_restricted(&m, &mask, axis, l, Restriction::Exclude).unwrap();
                let only = project_omega_restricted(&m, &mask, axis, l, Restriction::Only).unwrap();
                assert_eq!(&ex + &only, full);
            }
        }
        assert!(matches!(
            project_omega_restricted(&m, &mask, Axis::Column, 5, Restriction::Only),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn restricted_on_full_mask() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let mask = SamplingMask::full(2, 2);
        let ex = project_omega_restricted(&m, &mask, Axis::Row, 0, Restriction::Exclude).unwrap();
        assert_eq!(ex, DenseMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]));
        let only = project_omega_restricted(&m, &mask, Axis::Row, 1, Restriction::Only).unwrap();
        assert_eq!(only, DenseMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]));
    }

    #[test]
    fn slice_projector() {
        let m = sample(4, 3);
        let mut total = DenseMatrix::zeros(4, 3);
        for l in 0..4 {
            let p = project_row_or_column(&m, Axis::Row, l).unwrap();
            assert_eq!(project_row_or_column(&p, Axis::Row, l).unwrap(), p);
            assert_eq!(p.row(l), m.row(l));
            total = &total + &p;
        }
        assert_eq!(total, m);
        let c = project_row_or_column(&m, Axis::Column, 2).unwrap();
        assert_eq!(c.column(2), m.column(2));
        assert_eq!(c.frobenius_norm_sq(), m.column(2).iter().map(|v| v * v).sum::<f64>());
        assert!(project_row_or_column(&m, Axis::Column, 3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mask = sample_mask(5, 4, 0.5, 77).unwrap();
        let back = SamplingMask::from_json(&mask.to_json()).unwrap();
        assert_eq!(back, mask);
        assert!(SamplingMask::from_json(r#"{"n1":1,"n2":1,"p":0.5,"seed":0,"observed":[[1,0]]}"#).is_err());
    }
}
