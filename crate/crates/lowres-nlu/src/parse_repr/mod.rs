//! Hierarchical compositional parses and the lossless flattened-label codec.
//!
//! A [`ParseTree`] is the usual bracketed intent/slot structure over an
//! utterance. [`encode_flat`] decomposes it into one coarse intent, a
//! per-token BIO fine-intent sequence (with a `NESTED` suffix for
//! intent-in-intent nesting), and a per-token ordered slot-label stack;
//! [`decode_flat`] reconstructs the tree. The decomposition is lossless on
//! canonical trees: `decode_flat(encode_flat(t)) == t`.

mod bracketed;
mod codec;
mod tree;
mod validate;

pub use bracketed::{parse_hierarchical, serialize};
pub use codec::{decode_flat, decode_flat_with_repair, encode_flat, RepairCounts};
pub use tree::{FlatLabels, Node, NodeKind, ParseTree, Span};
pub use validate::{validate_flat, validate_tree, Diagnostic};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum slot-stack depth per token unless configured otherwise.
pub const DEFAULT_MAX_FERTILITY: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseReprError {
    #[error("unbalanced brackets at element {0}")]
    UnbalancedBrackets(usize),
    #[error("token mismatch at position {position}: parse has {found:?}, tokens have {expected:?}")]
    TokenMismatch { position: usize, found: String, expected: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("slot stack for token {token} exceeds maximum fertility {max}")]
    FertilityOverflow { token: usize, max: usize },
    #[error("nested intent conflict: {0}")]
    NestedIntentConflict(String),
    #[error("malformed BIO: {0}")]
    MalformedBio(String),
    #[error("unnestable spans: {0}")]
    UnnestableSpans(String),
}

/// JSONL interchange record: one utterance with its bracketed parse.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ParseRecord {
    pub tokens: Vec<String>,
    pub parse: String,
}

/// JSONL export of flattened labels. `tokens` is carried along so the
/// record is self-contained for the reverse conversion.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FlatRecord {
    pub tokens: Vec<String>,
    pub coarse: String,
    pub fine: Vec<String>,
    pub stacks: Vec<Vec<String>>,
}

impl FlatRecord {
    pub fn from_labels(tokens: &[String], flat: &FlatLabels) -> Self {
        FlatRecord {
            tokens: tokens.to_vec(),
            coarse: flat.coarse_intent.clone(),
            fine: flat.fine_intents.clone(),
            stacks: flat.slot_stacks.clone(),
        }
    }

    pub fn to_labels(&self) -> FlatLabels {
        FlatLabels {
            coarse_intent: self.coarse.clone(),
            fine_intents: self.fine.clone(),
            slot_stacks: self.stacks.clone(),
        }
    }
}
