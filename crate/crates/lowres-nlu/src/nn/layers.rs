use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::params::{xavier, Binder, ParamStore};
use super::tape::Var;

/// Registers a Xavier-initialized matrix parameter.
pub fn xavier_init(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, rows: usize, cols: usize) {
    store.insert(name, xavier(rng, rows, cols));
}

/// Registers a zero matrix parameter (biases, classifier heads).
pub fn zeros_init(store: &mut ParamStore, name: &str, rows: usize, cols: usize) {
    store.insert(name, Array2::zeros((rows, cols)));
}

/// Registers `prefix.w` (in x out) and `prefix.b` (1 x out).
pub fn linear_init(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    in_dim: usize,
    out_dim: usize,
) {
    xavier_init(store, rng, &format!("{prefix}.w"), in_dim, out_dim);
    zeros_init(store, &format!("{prefix}.b"), 1, out_dim);
}

/// Zero-initialized linear layer: classifier heads start out emitting
/// uniform distributions.
pub fn linear_init_zeros(store: &mut ParamStore, prefix: &str, in_dim: usize, out_dim: usize) {
    zeros_init(store, &format!("{prefix}.w"), in_dim, out_dim);
    zeros_init(store, &format!("{prefix}.b"), 1, out_dim);
}

/// x (n x in) -> x.W + b (n x out).
pub fn linear<'t>(binder: &Binder<'t, '_>, prefix: &str, x: Var<'t>) -> Var<'t> {
    let w = binder.get(&format!("{prefix}.w"));
    let b = binder.get(&format!("{prefix}.b"));
    x.matmul(w).add_row(b)
}

/// Registers `prefix.gamma` (ones) and `prefix.beta` (zeros) for layer norm.
pub fn layer_norm_init(store: &mut ParamStore, prefix: &str, dim: usize) {
    store.insert(format!("{prefix}.gamma"), Array2::ones((1, dim)));
    store.insert(format!("{prefix}.beta"), Array2::zeros((1, dim)));
}

/// Per-row layer normalization with learned gain and bias.
pub fn layer_norm<'t>(binder: &Binder<'t, '_>, prefix: &str, x: Var<'t>, eps: f64) -> Var<'t> {
    let gamma = binder.get(&format!("{prefix}.gamma"));
    let beta = binder.get(&format!("{prefix}.beta"));
    let mean = x.mean_rows();
    let centered = x.add_col(-mean);
    let var = (centered * centered).mean_rows();
    let std = var.add_scalar(eps).sqrt();
    centered.div_col(std).mul_row(gamma).add_row(beta)
}

/// Looks up embedding rows for a token-id sequence.
pub fn embedding_lookup<'t>(binder: &Binder<'t, '_>, table: &str, ids: &[usize]) -> Var<'t> {
    binder.get(table).gather_rows(ids)
}

/// Sum of per-row cross-entropies between `logits` rows and class targets.
pub fn cross_entropy_sum<'t>(logits: Var<'t>, targets: &[usize]) -> Var<'t> {
    -logits.log_softmax_rows().pick(targets).sum_all()
}

/// Mean squared error between two same-shape values.
pub fn mse<'t>(a: Var<'t>, b: Var<'t>) -> Var<'t> {
    let d = a - b;
    (d * d).mean_all()
}

/// Cosine similarity of two 1 x d vectors; caller guards zero norms.
pub fn cosine<'t>(a: Var<'t>, b: Var<'t>) -> Var<'t> {
    let dot = (a * b).sum_all();
    let na = (a * a).sum_all().sqrt();
    let nb = (b * b).sum_all().sqrt();
    dot.div_col(na * nb)
}

/// Row-wise argmax over a score matrix; ties resolve to the first index.
pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (i, &v) in row.iter().enumerate() {
                if v > best_score {
                    best_score = v;
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{central_difference_grad, relative_error, Tape};
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn layer_norm_rows_are_normalized() {
        let mut store = ParamStore::new();
        layer_norm_init(&mut store, "ln", 4);
        let tape = Tape::new();
        let binder = Binder::new(&tape, &store);
        let x = tape.input(array![[1.0, 2.0, 3.0, 4.0], [10.0, 10.0, 20.0, 0.0]]);
        let y = layer_norm(&binder, "ln", x, 1e-5).value();
        for row in y.rows() {
            let mean: f64 = row.iter().sum::<f64>() / row.len() as f64;
            let var: f64 = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / row.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn cross_entropy_uniform_is_ln_l() {
        let tape = Tape::new();
        let logits = tape.input(Array2::zeros((5, 7)));
        let loss = cross_entropy_sum(logits, &[0, 1, 2, 3, 4]).value()[(0, 0)];
        assert!((loss - 5.0 * (7.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn cosine_matches_definition_and_gradient() {
        let a0 = array![[1.0, 2.0, -0.5]];
        let b0 = array![[0.3, -1.0, 2.0]];
        let run = |a0: &Array2<f64>, b0: &Array2<f64>| {
            let tape = Tape::new();
            let a = tape.input(a0.clone());
            let b = tape.input(b0.clone());
            let c = cosine(a, b);
            let grads = tape.backward(c);
            (c.value()[(0, 0)], grads.wrt(a))
        };
        let (value, ga) = run(&a0, &b0);
        let expected = (0.3 - 2.0 - 1.0)
            / ((1.0f64 + 4.0 + 0.25).sqrt() * (0.09f64 + 1.0 + 4.0).sqrt());
        assert!((value - expected).abs() < 1e-12);
        let num = central_difference_grad(&|m| run(m, &b0).0, &a0, 1e-6);
        assert!(relative_error(&ga, &num) < 1e-6);
    }

    #[test]
    fn linear_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        linear_init(&mut store, &mut rng, "fc", 3, 2);
        let x0 = array![[0.5, -1.0, 2.0], [1.5, 0.0, -0.5]];
        let run = |store: &ParamStore| {
            let tape = Tape::new();
            let binder = Binder::new(&tape, store);
            let x = tape.input(x0.clone());
            let loss = linear(&binder, "fc", x).tanh().sum_all();
            let grads = tape.backward(loss);
            (loss.value()[(0, 0)], binder.grad_map(&grads))
        };
        let (_, gmap) = run(&store);
        for name in ["fc.w", "fc.b"] {
            let base = store.get(name).unwrap().clone();
            let num = central_difference_grad(
                &|m| {
                    let mut s = store.clone();
                    s.insert(name, m.clone());
                    run(&s).0
                },
                &base,
                1e-6,
            );
            assert!(relative_error(&gmap[name], &num) < 1e-6, "{name}");
        }
    }
}
