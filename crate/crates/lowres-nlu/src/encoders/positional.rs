use ndarray::Array2;

use crate::nn::ParamStore;

use super::EncoderError;

/// How (and whether) position information enters the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionalMode {
    /// No positional signal: the Order-Reduced Transformer setting.
    None,
    /// Fixed sine/cosine table.
    Sinusoid,
    /// Learned position table, updated with the rest of the model.
    Trainable,
    /// Externally supplied table, excluded from optimization.
    FrozenPretrained,
}

impl PositionalMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(PositionalMode::None),
            "sinusoid" => Some(PositionalMode::Sinusoid),
            "trainable" => Some(PositionalMode::Trainable),
            "frozen-pretrained" => Some(PositionalMode::FrozenPretrained),
            _ => None,
        }
    }
}

/// Sine/cosine table: PE(pos, 2i) = sin(pos / 10000^(2i/d)),
/// PE(pos, 2i+1) = cos(pos / 10000^(2i/d)), positions counted from 0.
pub fn sinusoid_table(n: usize, dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, dim), |(pos, j)| {
        let i = j / 2;
        let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / dim as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Produces the n x d position matrix for a mode. Trainable and
/// frozen-pretrained modes read the named table from the store (the
/// frozen variant is excluded from gradients by the encoder).
pub fn positional_embed(
    n: usize,
    mode: PositionalMode,
    dim: usize,
    store: &ParamStore,
    table_name: &str,
) -> Result<Array2<f64>, EncoderError> {
    match mode {
        PositionalMode::None => Ok(Array2::zeros((n, dim))),
        PositionalMode::Sinusoid => Ok(sinusoid_table(n, dim)),
        PositionalMode::Trainable | PositionalMode::FrozenPretrained => {
            let table =
                store.get(table_name).map_err(|_| EncoderError::MissingPositionTable(mode))?;
            if table.nrows() < n {
                return Err(EncoderError::SequenceTooLong { len: n, max: table.nrows() });
            }
            if table.ncols() != dim {
                return Err(EncoderError::DimensionMismatch {
                    expected: dim,
                    got: table.ncols(),
                });
            }
            Ok(table.slice(ndarray::s![..n, ..]).to_owned())
        }
    }
}
