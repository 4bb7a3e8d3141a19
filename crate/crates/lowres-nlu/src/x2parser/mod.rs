//! Fertility-based non-autoregressive compositional parser. The encoder
//! runs once per utterance; a fertility classifier predicts how many slot
//! labels each token carries; hidden states are copied accordingly and a
//! single slot-decoder pass labels the expanded sequence. Intents are
//! predicted by a coarse head over the sequence summary and a per-token
//! fine-intent tagger. Flattened predictions are reassembled into parse
//! trees through the lossless codec (repair mode on).

mod model;

pub use model::{ParseOutcome, PredictionRecord, X2Config, X2Parser, X2TrainReport};

use ndarray::Array2;
use thiserror::Error;

use crate::parse_repr::FlatLabels;

#[derive(Debug, Error)]
pub enum X2Error {
    #[error("fertility must be in [1, {max}], got {got} at token {token}")]
    BadFertility { token: usize, got: usize, max: usize },
    #[error("fertility vector covers {fertility} tokens, sequence has {tokens}")]
    LengthMismatch { fertility: usize, tokens: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("codec error: {0}")]
    Codec(#[from] crate::parse_repr::ParseReprError),
}

/// Per-token slot-label counts; always >= 1 because tokens with empty
/// stacks carry one `O` label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FertilityVector(pub Vec<usize>);

impl FertilityVector {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn validate(&self, max_fertility: usize) -> Result<(), X2Error> {
        for (t, &f) in self.0.iter().enumerate() {
            if f == 0 || f > max_fertility {
                return Err(X2Error::BadFertility { token: t + 1, got: f, max: max_fertility });
            }
        }
        Ok(())
    }
}

/// Repeats row i of `hidden` exactly `fertility[i]` times, in order.
pub fn copy_hiddens(
    hidden: &Array2<f64>,
    fertility: &FertilityVector,
) -> Result<Array2<f64>, X2Error> {
    if hidden.nrows() != fertility.0.len() {
        return Err(X2Error::LengthMismatch {
            fertility: fertility.0.len(),
            tokens: hidden.nrows(),
        });
    }
    fertility.validate(usize::MAX)?;
    let mut out = Array2::zeros((fertility.total(), hidden.ncols()));
    let mut row = 0;
    for (i, &f) in fertility.0.iter().enumerate() {
        for _ in 0..f {
            out.row_mut(row).assign(&hidden.row(i));
            row += 1;
        }
    }
    Ok(out)
}

/// Expansion indices for the copy: row i repeated `fertility[i]` times.
pub fn copy_indices(fertility: &FertilityVector) -> Vec<usize> {
    let mut indices = Vec::with_capacity(fertility.total());
    for (i, &f) in fertility.0.iter().enumerate() {
        for _ in 0..f {
            indices.push(i);
        }
    }
    indices
}

/// Gold training targets derived from flattened labels: the labels
/// themselves, the per-token fertility, and the flattened slot sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct X2Targets {
    pub flat: FlatLabels,
    pub fertility: FertilityVector,
    pub flattened_slots: Vec<String>,
}

impl X2Targets {
    pub fn from_flat(flat: &FlatLabels, max_fertility: usize) -> Result<Self, X2Error> {
        let fertility = FertilityVector(flat.fertility());
        fertility.validate(max_fertility)?;
        let flattened_slots = flat.flattened_slots();
        debug_assert_eq!(flattened_slots.len(), fertility.total());
        Ok(X2Targets { flat: flat.clone(), fertility, flattened_slots })
    }
}

/// Regroups a flattened label sequence by fertility blocks into per-token
/// stacks, dropping `O` entries (which stand for empty stacks).
pub fn regroup_stacks(labels: &[String], fertility: &FertilityVector) -> Vec<Vec<String>> {
    let mut stacks = Vec::with_capacity(fertility.0.len());
    let mut at = 0;
    for &f in &fertility.0 {
        let block = &labels[at..at + f];
        stacks.push(block.iter().filter(|l| *l != "O").cloned().collect());
        at += f;
    }
    stacks
}
