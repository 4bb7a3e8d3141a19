use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use crate::nn::{vstack, xavier_init, zeros_init, Binder, ParamStore, Tape, Var};

use super::{EncoderError, HiddenSequence};

/// One-dimensional convolution feed-forward: a width-`kernel` Conv1d into
/// `filter` channels, ReLU, then a pointwise projection back to `hidden`.
/// Same-length zero padding keeps the output aligned with the input, so
/// output row i depends on rows i-k/2 ..= i+k/2 only.
#[derive(Debug, Clone)]
pub struct ConvFeedForward {
    prefix: String,
    pub hidden: usize,
    pub filter: usize,
    pub kernel: usize,
}

impl ConvFeedForward {
    pub fn new(prefix: impl Into<String>, hidden: usize, filter: usize, kernel: usize) -> Self {
        assert!(kernel % 2 == 1 && kernel >= 1, "kernel must be odd");
        ConvFeedForward { prefix: prefix.into(), hidden, filter, kernel }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        for j in 0..self.kernel {
            xavier_init(store, rng, &format!("{}.k{j}", self.prefix), self.hidden, self.filter);
        }
        zeros_init(store, &format!("{}.b1", self.prefix), 1, self.filter);
        xavier_init(store, rng, &format!("{}.proj.w", self.prefix), self.filter, self.hidden);
        zeros_init(store, &format!("{}.proj.b", self.prefix), 1, self.hidden);
    }

    pub fn forward<'t>(&self, binder: &Binder<'t, '_>, tape: &'t Tape, x: Var<'t>) -> Var<'t> {
        let n = x.dim().0;
        let radius = self.kernel / 2;
        let padded = if radius > 0 {
            let pad = tape.input(Array2::zeros((radius, self.hidden)));
            vstack(&[pad, x, pad])
        } else {
            x
        };
        let mut acc: Option<Var<'t>> = None;
        for j in 0..self.kernel {
            let window = padded.slice_rows(j, j + n);
            let term = window.matmul(binder.get(&format!("{}.k{j}", self.prefix)));
            acc = Some(match acc {
                Some(a) => a + term,
                None => term,
            });
        }
        let hidden = acc
            .expect("kernel >= 1")
            .add_row(binder.get(&format!("{}.b1", self.prefix)))
            .relu();
        hidden
            .matmul(binder.get(&format!("{}.proj.w", self.prefix)))
            .add_row(binder.get(&format!("{}.proj.b", self.prefix)))
    }

    pub fn apply(
        &self,
        store: &ParamStore,
        h: &HiddenSequence,
    ) -> Result<HiddenSequence, EncoderError> {
        if h.dim() != self.hidden {
            return Err(EncoderError::DimensionMismatch { expected: self.hidden, got: h.dim() });
        }
        let tape = Tape::new();
        let binder = Binder::new(&tape, store);
        let x = tape.input(h.0.clone());
        let out = self.forward(&binder, &tape, x);
        Ok(HiddenSequence(out.value()))
    }
}
