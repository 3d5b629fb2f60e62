//! Leave-one-out sequences.
//!
//! For every row `i` (column `j`) there is an auxiliary gradient sequence
//! whose sampling operator treats that row (column) as fully observed:
//! `(1/p)P_{Ω_{−l}} + P_l` replaces `(1/p)P_Ω`. Such a sequence is
//! independent of the sampling randomness in slice `l`, which is what makes
//! it useful for controlling the ℓ2,∞ error of the main sequence. This
//! module builds the ensemble, advances it in lockstep with the main
//! iteration, and measures how close the two stay.

mod diagnostics;
mod ensemble;

pub use diagnostics::{
    loo_alignments, loo_diagnostics, read_loo_csv, write_loo_csv, LooAlignment, LooAlignments,
    LooDiagnostics, LOO_HEADER,
};
pub use ensemble::{loo_init, loo_matrix, loo_step, LooEnsemble, LooIndex, LooMember};
