//! Cross-lingual embedding refinement: orthogonality-constrained mapping
//! against a seed dictionary, embedding preprocessing, and
//! delexicalization of numeric/time/duration tokens.

mod delex;
mod procrustes;
mod table;

pub use delex::delexicalize;
pub use procrustes::{preprocess, refine, solve_mapping, AlignmentProblem, RefineHistory};
pub use procrustes::{mean_seed_distance, orthogonality_defect, random_orthogonal, trace_objective};
pub use table::{read_seed_dictionary, EmbeddingTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("embedding table contains a zero vector for {0:?}")]
    ZeroVector(String),
    #[error("dictionary has no usable pairs")]
    EmptyDictionary,
    #[error("word {0:?} is not in the embedding table")]
    UnknownWord(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// The 11 domain keywords used as the default seed dictionary, with their
/// Spanish translations.
pub const DEFAULT_SEED_PAIRS: [(&str, &str); 11] = [
    ("weather", "clima"),
    ("forecast", "pronóstico"),
    ("temperature", "temperatura"),
    ("rain", "lluvia"),
    ("hot", "caliente"),
    ("cold", "frío"),
    ("remind", "recordar"),
    ("forget", "olvidar"),
    ("alarm", "alarma"),
    ("cancel", "cancelar"),
    ("tomorrow", "mañana"),
];
