#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problem::{Axis, ObservationSet, SamplingMask};
use crate::solver::{gd_step_with, split_top_r, FactorPair};

/// Which slice a leave-one-out sequence treats as fully observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LooIndex {
    /// Row `i`, 0-based.
    Row(usize),
    /// Column `j`, 0-based.
    Column(usize),
}

impl LooIndex {
    /// From the flat 1-based convention `l ∈ [1, n1+n2]`: rows first, then
    /// columns.
    pub fn from_flat(l: usize, n1: usize, n2: usize) -> Result<Self> {
        if l == 0 || l > n1 + n2 {
            return Err(Error::Index {
                index: l,
                len: n1 + n2 + 1,
            });
        }
        Ok(if l <= n1 {
            LooIndex::Row(l - 1)
        } else {
            LooIndex::Column(l - n1 - 1)
        })
    }

    /// Inverse of [`LooIndex::from_flat`].
    pub fn flat(self, n1: usize) -> usize {
        match self {
            LooIndex::Row(i) => i + 1,
            LooIndex::Column(j) => n1 + j + 1,
        }
    }

    /// Row of the stacked `[X; Y]` matrix that this slice controls.
    pub fn stacked_row(self, n1: usize) -> usize {
        self.flat(n1) - 1
    }

    pub fn axis_and_slice(self) -> (Axis, usize) {
        match self {
            LooIndex::Row(i) => (Axis::Row, i),
            LooIndex::Column(j) => (Axis::Column, j),
        }
    }

    /// All `n1 + n2` indices in flat order.
    pub fn all(n1: usize, n2: usize) -> Vec<LooIndex> {
        (0..n1)
            .map(LooIndex::Row)
            .chain((0..n2).map(LooIndex::Column))
            .collect()
    }
}

fn loo_observations(m: &DenseMatrix, mask: &SamplingMask, l: LooIndex) -> Result<ObservationSet> {
    let (axis, slice) = l.axis_and_slice();
    ObservationSet::leave_one_out(m, mask, axis, slice)
}

/// `M^{0,(l)}`: `(1/p)P_Ω(M)` with slice `l` replaced by the same slice
/// of `M`. `m` is the full planted matrix.
pub fn loo_matrix(m: &DenseMatrix, mask: &SamplingMask, l: LooIndex) -> Result<DenseMatrix> {
    Ok(loo_observations(m, mask, l)?.weighted_targets())
}

/// Square-root split of the top-`r` SVD of `M^{0,(l)}`.
pub fn loo_init(m: &DenseMatrix, mask: &SamplingMask, l: LooIndex, r: usize) -> Result<FactorPair> {
    let obs = loo_observations(m, mask, l)?;
    Ok(split_top_r(&obs.weighted_targets(), r)?.pair)
}

/// One leave-one-out sequence.
#[derive(Debug, Clone)]
pub struct LooMember {
    pub index: LooIndex,
    pub pair: FactorPair,
    observations: ObservationSet,
}

/// The leave-one-out sequences at a common iteration `t`.
///
/// Usually all `n1 + n2` sequences; [`LooEnsemble::with_indices`] tracks a
/// subset, in which case every reported maximum is over that subset only.
#[derive(Debug, Clone)]
pub struct LooEnsemble {
    n1: usize,
    n2: usize,
    r: usize,
    t: usize,
    subsampled: bool,
    members: Vec<LooMember>,
}

impl LooEnsemble {
    /// All `n1 + n2` sequences at their spectral initialisations.
    pub fn new(m: &DenseMatrix, mask: &SamplingMask, r: usize) -> Result<Self> {
        let mut e = Self::with_indices(m, mask, r, &LooIndex::all(mask.n1(), mask.n2()))?;
        e.subsampled = false;
        Ok(e)
    }

    /// Only the listed sequences (deduplicated, kept in flat order).
    pub fn with_indices(
        m: &DenseMatrix,
        mask: &SamplingMask,
        r: usize,
        indices: &[LooIndex],
    ) -> Result<Self> {
        let (n1, n2) = mask.shape();
        let mut indices = indices.to_vec();
        indices.sort();
        indices.dedup();
        let build = |&index: &LooIndex| -> Result<LooMember> {
            let observations = loo_observations(m, mask, index)?;
            let pair = split_top_r(&observations.weighted_targets(), r)?.pair;
            Ok(LooMember {
                index,
                pair,
                observations,
            })
        };
        #[cfg(feature = "parallel")]
        let members = indices.par_iter().map(build).collect::<Result<Vec<_>>>()?;
        #[cfg(not(feature = "parallel"))]
        let members = indices.iter().map(build).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n1,
            n2,
            r,
            t: 0,
            subsampled: members.len() < n1 + n2,
            members,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.r)
    }

    pub fn is_subsampled(&self) -> bool {
        self.subsampled
    }

    pub fn members(&self) -> &[LooMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Advances every sequence by one gradient step with step size `eta`.
    /// Sequences are independent, so the result does not depend on how
    /// many threads run them.
    pub fn advance(&mut self, eta: f64) -> Result<()> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Parameter {
                name: "eta",
                reason: format!("must be a finite nonnegative step, got {eta}"),
            });
        }
        let step = |member: &mut LooMember| -> Result<()> {
            member.pair = gd_step_with(&member.observations, &member.pair, eta)?;
            Ok(())
        };
        #[cfg(feature = "parallel")]
        self.members.par_iter_mut().try_for_each(step)?;
        #[cfg(not(feature = "parallel"))]
        self.members.iter_mut().try_for_each(step)?;
        self.t += 1;
        Ok(())
    }
}

/// Functional form of [`LooEnsemble::advance`].
pub fn loo_step(ensemble: &LooEnsemble, eta: f64) -> Result<LooEnsemble> {
    let mut next = ensemble.clone();
    next.advance(eta)?;
    Ok(next)
}
