//! Experiment harness: dataset formats, few-shot splits, metrics, latency
//! benchmarking, synthetic desk-scale data, and the batch CLI.

pub mod bench;
pub mod cli;
pub mod config;
pub mod formats;
pub mod metrics;
pub mod split;
pub mod synth;
pub mod tagger;

pub use bench::bench_latency;
pub use config::{RunConfig, SEED_ENV_VAR};
pub use formats::{
    load_conll, load_corpus_lines, load_jsonl, load_parse_jsonl, write_conll, write_corpus_lines,
    write_jsonl, TaggedSequence,
};
pub use metrics::{
    bio_f1, exact_match_accuracy, exact_match_trees, flat_labels_match, nested_split, EvalReport,
    LatencyRow, NestedBreakdown, PrecisionRecallF1,
};
pub use split::{few_shot_split, mix_with_upsampled, upsample, SplitSpec};
pub use synth::{CoachWorld, TaggingGrammar, TreeGrammar};
pub use tagger::{SequenceTagger, TaggerConfig, TaggerEncoderKind, TaggerTrainReport};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("gold and prediction are misaligned: {gold} vs {pred} {what}")]
    Misaligned { gold: usize, pred: usize, what: &'static str },
    #[error("bad split: {0}")]
    BadSplit(String),
    #[error(transparent)]
    Codec(crate::parse_repr::ParseReprError),
}
