//! Low-resource cross-lingual and cross-domain NLU toolkit.
//!
//! The crate bundles a family of techniques for sequence labeling and
//! compositional semantic parsing when target-language or target-domain
//! training data is scarce:
//!
//! * [`parse_repr`] — hierarchical compositional parses, their bracketed
//!   serialization, and a lossless flattened-label codec.
//! * [`encoders`] — neural sequence encoders built on a small reverse-mode
//!   autodiff core ([`nn`]): multi-head attention, the Order-Reduced
//!   Transformer, a bidirectional LSTM, and a linear-chain CRF.
//! * [`x2parser`] — a fertility-based non-autoregressive compositional
//!   parser trained against the flattened labels.
//! * [`coach`] — coarse-to-fine cross-domain slot filling with
//!   description-based typing and template regularization.
//! * [`xling_reg`] — regularized-alignment losses: Gaussian noise
//!   injection, latent-variable heads, label regularization, and an
//!   adversarial latent regularizer.
//! * [`augment`] — k-constrained word-order shuffling, token- and
//!   span-level masking, and pretraining-corpus selection.
//! * [`embed_align`] — orthogonality-constrained cross-lingual embedding
//!   refinement with a seed dictionary, plus delexicalization.
//! * [`harness`] — dataset formats, few-shot splits, metrics, latency
//!   benchmarking, and the batch CLI.
//!
//! Every training routine is deterministic given its seed; see the
//! `examples/` directory for one runnable program per capability.

pub mod augment;
pub mod coach;
pub mod embed_align;
pub mod encoders;
pub mod harness;
pub mod nn;
pub mod parse_repr;
pub mod x2parser;
pub mod xling_reg;
