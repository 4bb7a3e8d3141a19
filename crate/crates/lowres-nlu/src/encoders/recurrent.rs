use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use crate::nn::{hstack, vstack, xavier_init, zeros_init, Binder, ParamStore, Tape, Var};

use super::{EncoderError, HiddenSequence};

/// LSTM with forget/input/output gates and a candidate cell update:
///
/// ```text
/// f_t = sigmoid([h_{t-1}, x_t] W_f + b_f)
/// i_t = sigmoid([h_{t-1}, x_t] W_i + b_i)
/// c~_t = tanh  ([h_{t-1}, x_t] W_c + b_c)
/// c_t = f_t * c_{t-1} + i_t * c~_t
/// o_t = sigmoid([h_{t-1}, x_t] W_o + b_o)
/// h_t = o_t * tanh(c_t)
/// ```
///
/// The bidirectional variant concatenates per-direction states per token.
#[derive(Debug, Clone)]
pub struct RecurrentEncoder {
    prefix: String,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub bidirectional: bool,
}

impl RecurrentEncoder {
    pub fn new(
        prefix: impl Into<String>,
        input_dim: usize,
        hidden_dim: usize,
        bidirectional: bool,
    ) -> Self {
        RecurrentEncoder { prefix: prefix.into(), input_dim, hidden_dim, bidirectional }
    }

    /// Output width: `hidden_dim`, doubled when bidirectional.
    pub fn output_dim(&self) -> usize {
        if self.bidirectional {
            2 * self.hidden_dim
        } else {
            self.hidden_dim
        }
    }

    fn directions(&self) -> &'static [&'static str] {
        if self.bidirectional {
            &["fwd", "bwd"]
        } else {
            &["fwd"]
        }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        let cat = self.hidden_dim + self.input_dim;
        for dir in self.directions() {
            for gate in ["f", "i", "c", "o"] {
                xavier_init(store, rng, &format!("{}.{dir}.w{gate}", self.prefix), cat, self.hidden_dim);
                zeros_init(store, &format!("{}.{dir}.b{gate}", self.prefix), 1, self.hidden_dim);
            }
        }
    }

    fn run_direction<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        x: Var<'t>,
        dir: &str,
    ) -> Vec<Var<'t>> {
        let n = x.dim().0;
        let wf = binder.get(&format!("{}.{dir}.wf", self.prefix));
        let bf = binder.get(&format!("{}.{dir}.bf", self.prefix));
        let wi = binder.get(&format!("{}.{dir}.wi", self.prefix));
        let bi = binder.get(&format!("{}.{dir}.bi", self.prefix));
        let wc = binder.get(&format!("{}.{dir}.wc", self.prefix));
        let bc = binder.get(&format!("{}.{dir}.bc", self.prefix));
        let wo = binder.get(&format!("{}.{dir}.wo", self.prefix));
        let bo = binder.get(&format!("{}.{dir}.bo", self.prefix));
        let mut h = tape.input(Array2::zeros((1, self.hidden_dim)));
        let mut c = tape.input(Array2::zeros((1, self.hidden_dim)));
        let order: Vec<usize> = if dir == "bwd" {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        let mut states = vec![h; n];
        for t in order {
            let xt = x.slice_rows(t, t + 1);
            let cat = hstack(&[h, xt]);
            let f = cat.matmul(wf).add_row(bf).sigmoid();
            let i = cat.matmul(wi).add_row(bi).sigmoid();
            let c_tilde = cat.matmul(wc).add_row(bc).tanh();
            c = f * c + i * c_tilde;
            let o = cat.matmul(wo).add_row(bo).sigmoid();
            h = o * c.tanh();
            states[t] = h;
        }
        states
    }

    pub fn forward<'t>(&self, binder: &Binder<'t, '_>, tape: &'t Tape, x: Var<'t>) -> Var<'t> {
        let forward_states = self.run_direction(binder, tape, x, "fwd");
        if !self.bidirectional {
            return vstack(&forward_states);
        }
        let backward_states = self.run_direction(binder, tape, x, "bwd");
        let rows: Vec<Var<'t>> = forward_states
            .into_iter()
            .zip(backward_states)
            .map(|(f, b)| hstack(&[f, b]))
            .collect();
        vstack(&rows)
    }

    pub fn apply(
        &self,
        store: &ParamStore,
        x: &HiddenSequence,
    ) -> Result<HiddenSequence, EncoderError> {
        if x.dim() != self.input_dim {
            return Err(EncoderError::DimensionMismatch { expected: self.input_dim, got: x.dim() });
        }
        let tape = Tape::new();
        let binder = Binder::new(&tape, store);
        let xv = tape.input(x.0.clone());
        Ok(HiddenSequence(self.forward(&binder, &tape, xv).value()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::rng_from_seed;
    use crate::nn::{central_difference_grad, relative_error};
    use rand::Rng;

    fn setup(bidirectional: bool, seed: u64) -> (RecurrentEncoder, ParamStore) {
        let enc = RecurrentEncoder::new("lstm", 3, 4, bidirectional);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(seed);
        enc.init(&mut store, &mut rng);
        (enc, store)
    }

    #[test]
    fn zero_weights_and_inputs_give_zero_states() {
        let enc = RecurrentEncoder::new("lstm", 3, 4, true);
        let mut store = ParamStore::new();
        for dir in ["fwd", "bwd"] {
            for gate in ["f", "i", "c", "o"] {
                store.insert(format!("lstm.{dir}.w{gate}"), Array2::zeros((7, 4)));
                store.insert(format!("lstm.{dir}.b{gate}"), Array2::zeros((1, 4)));
            }
        }
        let x = HiddenSequence(Array2::zeros((5, 3)));
        let out = enc.apply(&store, &x).unwrap();
        // tanh(0) * sigmoid(0) = 0 at every step.
        assert!(out.0.iter().all(|v| *v == 0.0));
    }

    /// Independent single-cell-step oracle: the length-1 output must match
    /// a from-scratch computation of the gate equations.
    #[test]
    fn single_step_matches_hand_coded_cell() {
        let (enc, store) = setup(false, 6);
        let mut rng = rng_from_seed(17);
        let x = Array2::from_shape_fn((1, 3), |_| rng.gen_range(-1.0..1.0));
        let out = enc.apply(&store, &HiddenSequence(x.clone())).unwrap();

        let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());
        // h_prev = 0, so [h, x] = [0, 0, 0, 0, x1, x2, x3].
        let mut cat = Array2::zeros((1, 7));
        cat.slice_mut(ndarray::s![.., 4..]).assign(&x);
        let gate = |name: &str| -> Vec<f64> {
            let w = store.get(&format!("lstm.fwd.w{name}")).unwrap();
            let b = store.get(&format!("lstm.fwd.b{name}")).unwrap();
            let z = cat.dot(w) + b;
            z.iter().copied().collect()
        };
        let f: Vec<f64> = gate("f").into_iter().map(sigmoid).collect();
        let i: Vec<f64> = gate("i").into_iter().map(sigmoid).collect();
        let c_tilde: Vec<f64> = gate("c").into_iter().map(f64::tanh).collect();
        let o: Vec<f64> = gate("o").into_iter().map(sigmoid).collect();
        let _ = f; // c_prev = 0, so the forget path contributes nothing
        for j in 0..4 {
            let c = i[j] * c_tilde[j];
            let expected = o[j] * c.tanh();
            assert!((out.0[(0, j)] - expected).abs() < 1e-12, "unit {j}");
        }
    }

    #[test]
    fn length_one_equals_single_cell_step_bidirectional() {
        let (enc, store) = setup(true, 8);
        let mut rng = rng_from_seed(19);
        let x = Array2::from_shape_fn((1, 3), |_| rng.gen_range(-1.0..1.0));
        let out = enc.apply(&store, &HiddenSequence(x)).unwrap();
        assert_eq!(out.0.dim(), (1, 8));
        assert!(out.all_finite());
    }

    #[test]
    fn recurrent_gradients_match_finite_differences() {
        let (enc, store) = setup(true, 10);
        let mut rng = rng_from_seed(23);
        let x0 = Array2::from_shape_fn((4, 3), |_| rng.gen_range(-1.0..1.0));
        let run = |store: &ParamStore, x0: &Array2<f64>| {
            let tape = Tape::new();
            let binder = Binder::new(&tape, store);
            let x = tape.input(x0.clone());
            let loss = enc.forward(&binder, &tape, x).tanh().sum_all();
            let grads = tape.backward(loss);
            (loss.value()[(0, 0)], grads.wrt(x), binder.grad_map(&grads))
        };
        let (_, gx, gmap) = run(&store, &x0);
        let nx = central_difference_grad(&|m| run(&store, m).0, &x0, 1e-6);
        assert!(relative_error(&gx, &nx) < 1e-4);
        for name in ["lstm.fwd.wf", "lstm.bwd.wc", "lstm.fwd.bo", "lstm.bwd.wi"] {
            let base = store.get(name).unwrap().clone();
            let num = central_difference_grad(
                &|m| {
                    let mut s = store.clone();
                    s.insert(name, m.clone());
                    run(&s, &x0).0
                },
                &base,
                1e-6,
            );
            assert!(relative_error(&gmap[name], &num) < 1e-4, "{name}");
        }
    }
}
