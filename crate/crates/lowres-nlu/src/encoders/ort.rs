use rand_chacha::ChaCha8Rng;

use crate::nn::{layer_norm, layer_norm_init, Binder, ParamStore, Tape, Var};

use super::attention::MultiHeadAttention;
use super::conv_ff::ConvFeedForward;
use super::positional::{positional_embed, PositionalMode};
use super::{EncoderError, HiddenSequence, OrtConfig};

const LAYER_NORM_EPS: f64 = 1e-5;

/// Encoder stack of `[attention -> residual+norm -> Conv1d feed-forward ->
/// residual+norm]` layers. With `PositionalMode::None` no global order
/// information enters the model and each output row depends on input
/// content plus a local window of radius `layers * (kernel/2)`.
#[derive(Debug, Clone)]
pub struct OrtEncoder {
    prefix: String,
    pub cfg: OrtConfig,
    attention: Vec<MultiHeadAttention>,
    conv: Vec<ConvFeedForward>,
}

impl OrtEncoder {
    pub fn new(prefix: impl Into<String>, cfg: OrtConfig) -> Result<Self, EncoderError> {
        cfg.validate()?;
        let prefix = prefix.into();
        let attention = (0..cfg.layers)
            .map(|l| MultiHeadAttention::new(format!("{prefix}.l{l}.attn"), cfg.heads, cfg.hidden))
            .collect();
        let conv = (0..cfg.layers)
            .map(|l| {
                ConvFeedForward::new(format!("{prefix}.l{l}.ff"), cfg.hidden, cfg.filter, cfg.kernel)
            })
            .collect();
        Ok(OrtEncoder { prefix, cfg, attention, conv })
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        for l in 0..self.cfg.layers {
            self.attention[l].init(store, rng);
            self.conv[l].init(store, rng);
            layer_norm_init(store, &format!("{}.l{l}.ln1", self.prefix), self.cfg.hidden);
            layer_norm_init(store, &format!("{}.l{l}.ln2", self.prefix), self.cfg.hidden);
        }
        if self.cfg.positional == PositionalMode::Trainable {
            store.insert(self.position_table_name(), ndarray::Array2::zeros((self.cfg.max_len, self.cfg.hidden)));
        }
    }

    pub fn position_table_name(&self) -> String {
        format!("{}.pos", self.prefix)
    }

    /// Installs an externally produced position table for the
    /// frozen-pretrained mode.
    pub fn set_position_table(&self, store: &mut ParamStore, table: ndarray::Array2<f64>) {
        store.insert(self.position_table_name(), table);
    }

    /// Encodes already-embedded inputs. The positional table (if any) is
    /// added before the first layer.
    pub fn forward<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        embedded: Var<'t>,
        store: &ParamStore,
    ) -> Result<Var<'t>, EncoderError> {
        let (n, d) = embedded.dim();
        if d != self.cfg.hidden {
            return Err(EncoderError::DimensionMismatch { expected: self.cfg.hidden, got: d });
        }
        let mut h = match self.cfg.positional {
            PositionalMode::None => embedded,
            PositionalMode::Sinusoid => {
                let pe = positional_embed(n, self.cfg.positional, d, store, "")?;
                embedded + tape.input(pe)
            }
            PositionalMode::Trainable => {
                let table = binder.get(&self.position_table_name());
                let rows: Vec<usize> = (0..n).collect();
                if store.get(&self.position_table_name()).map(|t| t.nrows()).unwrap_or(0) < n {
                    return Err(EncoderError::SequenceTooLong { len: n, max: self.cfg.max_len });
                }
                embedded + table.gather_rows(&rows)
            }
            PositionalMode::FrozenPretrained => {
                let pe =
                    positional_embed(n, self.cfg.positional, d, store, &self.position_table_name())?;
                embedded + tape.input(pe)
            }
        };
        for l in 0..self.cfg.layers {
            let attended = self.attention[l].forward(binder, h);
            let normed = layer_norm(binder, &format!("{}.l{l}.ln1", self.prefix), h + attended, LAYER_NORM_EPS);
            let ff = self.conv[l].forward(binder, tape, normed);
            h = layer_norm(binder, &format!("{}.l{l}.ln2", self.prefix), normed + ff, LAYER_NORM_EPS);
        }
        Ok(h)
    }

    pub fn apply(
        &self,
        store: &ParamStore,
        embedded: &HiddenSequence,
    ) -> Result<HiddenSequence, EncoderError> {
        let tape = Tape::new();
        let binder = Binder::new(&tape, store);
        let x = tape.input(embedded.0.clone());
        let out = self.forward(&binder, &tape, x, store)?;
        Ok(HiddenSequence(out.value()))
    }
}
