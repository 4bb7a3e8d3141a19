//! Regularized-alignment losses for cross-lingual transfer: Gaussian
//! noise injection, latent-variable prediction heads, attention pooling,
//! label regularization, and the adversarial latent regularizer, plus a
//! desk-scale trainer combining them.

mod model;
mod ops;

pub use model::{XlingConfig, XlingDataset, XlingModel, XlingSample, XlingTrainReport};
pub use ops::{
    alvm_losses, attention_pool, inject_noise, label_reg_loss, AlvmHead, LatentGaussian, LvmHead,
    NoiseConfig, RunMode,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum XlingError {
    #[error("label regularization needs nonzero-norm vectors")]
    ZeroNorm,
    #[error("adversarial regularizer needs at least 2 slot types, got {0}")]
    TooFewSlotTypes(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample has {tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
}

/// Weights and schedule of the composite objective
/// `L = L_S + L_I + L_lr + alpha * L_fc + beta * L_lvm`.
#[derive(Debug, Clone)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    /// Epochs during which alpha and beta stay at their initial values.
    pub hold_epochs: usize,
    /// Multiplicative per-epoch decay applied to alpha afterwards.
    pub alpha_decay: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { alpha: 1.0, beta: 1.0, hold_epochs: 2, alpha_decay: 0.9 }
    }
}

impl LossWeights {
    /// Alpha at a given zero-based epoch.
    pub fn alpha_at(&self, epoch: usize) -> f64 {
        if epoch < self.hold_epochs {
            self.alpha
        } else {
            self.alpha * self.alpha_decay.powi((epoch - self.hold_epochs + 1) as i32)
        }
    }

    pub fn beta_at(&self, _epoch: usize) -> f64 {
        self.beta
    }
}
