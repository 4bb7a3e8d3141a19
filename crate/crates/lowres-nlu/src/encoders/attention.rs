use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use crate::nn::{hstack, xavier_init, zeros_init, Binder, ParamStore, Tape, Var};

use super::{EncoderError, HiddenSequence};

/// Scaled dot-product self-attention with `heads` projection heads and an
/// output projection. Without positional information it is equivariant to
/// any permutation of its input rows.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    prefix: String,
    pub heads: usize,
    pub hidden: usize,
}

impl MultiHeadAttention {
    pub fn new(prefix: impl Into<String>, heads: usize, hidden: usize) -> Self {
        assert!(hidden % heads == 0, "hidden must be divisible by heads");
        MultiHeadAttention { prefix: prefix.into(), heads, hidden }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        let dk = self.hidden / self.heads;
        for h in 0..self.heads {
            for proj in ["wq", "wk", "wv"] {
                xavier_init(store, rng, &format!("{}.h{h}.{proj}", self.prefix), self.hidden, dk);
            }
        }
        xavier_init(store, rng, &format!("{}.wo", self.prefix), self.hidden, self.hidden);
        zeros_init(store, &format!("{}.bo", self.prefix), 1, self.hidden);
    }

    /// Self-attention: Q = K = V = `x`.
    pub fn forward<'t>(&self, binder: &Binder<'t, '_>, x: Var<'t>) -> Var<'t> {
        let dk = self.hidden / self.heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let mut head_outputs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let q = x.matmul(binder.get(&format!("{}.h{h}.wq", self.prefix)));
            let k = x.matmul(binder.get(&format!("{}.h{h}.wk", self.prefix)));
            let v = x.matmul(binder.get(&format!("{}.h{h}.wv", self.prefix)));
            let scores = q.matmul(k.t()).scale(scale);
            head_outputs.push(scores.softmax_rows().matmul(v));
        }
        let concat = hstack(&head_outputs);
        concat
            .matmul(binder.get(&format!("{}.wo", self.prefix)))
            .add_row(binder.get(&format!("{}.bo", self.prefix)))
    }

    /// Forward-only convenience over plain values.
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
        let out = self.forward(&binder, x);
        Ok(HiddenSequence(out.value()))
    }
}

/// Applies a row permutation to a matrix: row i of the result is row
/// `perm[i]` of the input.
pub fn permute_rows(m: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(m.dim());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(i).assign(&m.row(p));
    }
    out
}
