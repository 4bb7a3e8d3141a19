//! Neural sequence encoders and the structured output layer.
//!
//! The centerpiece is the Order-Reduced Transformer: a Transformer encoder
//! whose positional embeddings are removed and whose feed-forward is a
//! one-dimensional convolution, so only local word order within the
//! convolution window is encoded. A bidirectional LSTM and a linear-chain
//! CRF round out the substrate the task models build on.

mod attention;
mod conv_ff;
mod crf;
mod ort;
mod positional;
mod recurrent;

pub use attention::{permute_rows, MultiHeadAttention};
pub use conv_ff::ConvFeedForward;
pub use crf::{enumerate_paths, LinearChainCrf};
pub use ort::OrtEncoder;
pub use positional::{positional_embed, sinusoid_table, PositionalMode};
pub use recurrent::RecurrentEncoder;

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("hidden dimension {hidden} is not divisible by {heads} heads")]
    HeadsMismatch { hidden: usize, heads: usize },
    #[error("convolution kernel must be odd and >= 1, got {0}")]
    BadKernel(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("positional mode {0:?} requires a pretrained position table")]
    MissingPositionTable(PositionalMode),
    #[error("sequence longer ({len}) than the position table ({max})")]
    SequenceTooLong { len: usize, max: usize },
}

/// Per-token real-valued feature vectors produced by any encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSequence(pub Array2<f64>);

impl HiddenSequence {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Configuration of a Transformer-style encoder stack. With
/// `positional: PositionalMode::None` this is the Order-Reduced
/// Transformer proper; the other modes give the order-sensitive variants.
#[derive(Debug, Clone)]
pub struct OrtConfig {
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    /// Odd Conv1d kernel width; same-length zero padding is applied.
    pub kernel: usize,
    /// Conv1d intermediate channel count.
    pub filter: usize,
    pub positional: PositionalMode,
    /// Capacity of trainable/pretrained position tables.
    pub max_len: usize,
}

impl Default for OrtConfig {
    fn default() -> Self {
        OrtConfig {
            layers: 2,
            heads: 8,
            hidden: 256,
            kernel: 3,
            filter: 256,
            positional: PositionalMode::None,
            max_len: 128,
        }
    }
}

impl OrtConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.hidden % self.heads != 0 {
            return Err(EncoderError::HeadsMismatch { hidden: self.hidden, heads: self.heads });
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return Err(EncoderError::BadKernel(self.kernel));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = OrtConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.heads = 7;
        assert!(matches!(cfg.validate(), Err(EncoderError::HeadsMismatch { .. })));
        cfg.heads = 8;
        cfg.kernel = 4;
        assert!(matches!(cfg.validate(), Err(EncoderError::BadKernel(4))));
    }
}
