//! Data augmentation and pretraining-corpus procedures: k-constrained
//! word-order shuffling, noisy test-set generation, token- and span-level
//! masking, and corpus selection/integration.

mod corpus;
mod masking;
mod shuffle;

pub use corpus::{integrate_corpora, select_corpus, CorpusLevel, CorpusSpec};
pub use masking::{make_spans, span_mask, token_mask, MaskAction, MaskPlan};
pub use shuffle::{
    admissible_permutations, bio_spans, make_noisy_sample, make_noisy_testset, shuffle_order,
    ShuffleBound, ShuffleSpec,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AugmentError {
    #[error("entity spans must be disjoint and in range (offending span [{0}, {1}])")]
    BadEntitySpan(usize, usize),
    #[error("entity list required for {0}-level corpus selection")]
    MissingEntityList(String),
    #[error("tokens and labels disagree in length ({tokens} vs {labels})")]
    LengthMismatch { tokens: usize, labels: usize },
}
