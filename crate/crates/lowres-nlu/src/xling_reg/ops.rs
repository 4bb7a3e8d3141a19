use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{cosine, linear, linear_init, Binder, ParamStore, Tape, Var};

use super::XlingError;

/// Whether stochastic components (noise injection, latent sampling) are
/// active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Train,
    Eval,
}

/// Zero-mean isotropic Gaussian noise added to embeddings in training.
#[derive(Debug, Clone, Copy)]
pub struct NoiseConfig {
    pub variance: f64,
    pub training_only: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { variance: 0.1, training_only: true }
    }
}

/// Adds fresh `N(0, variance * I)` noise per call in training mode;
/// evaluation returns the input unchanged.
pub fn inject_noise(
    embedded: &Array2<f64>,
    cfg: &NoiseConfig,
    mode: RunMode,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    if (cfg.training_only && mode == RunMode::Eval) || cfg.variance == 0.0 {
        return embedded.clone();
    }
    let std = cfg.variance.sqrt();
    embedded + &Array2::from_shape_fn(embedded.dim(), |_| gaussian(rng) * std)
}

/// Standard normal draw via Box-Muller.
pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Attention pooling `a = softmax(H w)`, `v = sum_t a_t h_t`. Returns the
/// pooled vector (1 x d) and the weights (1 x n).
pub fn attention_pool<'t>(h: Var<'t>, w: Var<'t>) -> (Var<'t>, Var<'t>) {
    let weights = h.matmul(w).t().softmax_rows();
    (weights.matmul(h), weights)
}

/// A diagonal-Gaussian posterior: mean and log-variance per row.
#[derive(Debug, Clone)]
pub struct LatentGaussian {
    pub mean: Array2<f64>,
    pub log_variance: Array2<f64>,
}

/// Latent-variable prediction head: a recognition layer produces a
/// Gaussian per input row; training samples `z = mu + sigma * eps`
/// (reparameterized), evaluation uses the true mean; a generation layer
/// maps `z` to class logits.
#[derive(Debug, Clone)]
pub struct LvmHead {
    prefix: String,
    pub in_dim: usize,
    pub latent_dim: usize,
    pub n_classes: usize,
}

impl LvmHead {
    pub fn new(prefix: impl Into<String>, in_dim: usize, latent_dim: usize, n_classes: usize) -> Self {
        LvmHead { prefix: prefix.into(), in_dim, latent_dim, n_classes }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        linear_init(store, rng, &format!("{}.recog", self.prefix), self.in_dim, 2 * self.latent_dim);
        linear_init(store, rng, &format!("{}.gen", self.prefix), self.latent_dim, self.n_classes);
        // Start with a small posterior variance (sigma ~ 0.37) so early
        // sampled latents do not drown the recognition signal.
        let name = format!("{}.recog.b", self.prefix);
        let mut bias = store.get(&name).expect("registered above").clone();
        for j in self.latent_dim..2 * self.latent_dim {
            bias[(0, j)] = -2.0;
        }
        store.insert(name, bias);
    }

    /// Returns `(logits, z)` for the rows of `h`.
    pub fn forward<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        h: Var<'t>,
        mode: RunMode,
        rng: &mut ChaCha8Rng,
    ) -> (Var<'t>, Var<'t>) {
        let recog = linear(binder, &format!("{}.recog", self.prefix), h);
        let mean = slice_cols(recog, 0, self.latent_dim);
        let z = match mode {
            RunMode::Eval => mean,
            RunMode::Train => {
                let log_var = slice_cols(recog, self.latent_dim, 2 * self.latent_dim);
                let sigma = log_var.scale(0.5).exp();
                let n = h.dim().0;
                let eps = tape.input(Array2::from_shape_fn((n, self.latent_dim), |_| gaussian(rng)));
                mean + sigma * eps
            }
        };
        let logits = linear(binder, &format!("{}.gen", self.prefix), z);
        (logits, z)
    }

    /// The posterior parameters for inspection.
    pub fn posterior(&self, store: &ParamStore, h: &Array2<f64>) -> LatentGaussian {
        let tape = Tape::new();
        let binder = Binder::new(&tape, store);
        let hv = tape.input(h.clone());
        let recog = linear(&binder, &format!("{}.recog", self.prefix), hv);
        let mean = slice_cols(recog, 0, self.latent_dim).value();
        let log_variance = slice_cols(recog, self.latent_dim, 2 * self.latent_dim).value();
        LatentGaussian { mean, log_variance }
    }
}

/// Column slice through transposition; gradients flow through both
/// transposes.
fn slice_cols<'t>(v: Var<'t>, start: usize, end: usize) -> Var<'t> {
    v.t().slice_rows(start, end).t()
}

/// Label-regularization loss: the squared difference between the cosine
/// similarity of two utterance representations and the cosine similarity
/// of their label-sequence representations.
pub fn label_reg_loss<'t>(
    u_a: Var<'t>,
    u_b: Var<'t>,
    l_a: Var<'t>,
    l_b: Var<'t>,
) -> Result<Var<'t>, XlingError> {
    for v in [u_a, u_b, l_a, l_b] {
        let norm: f64 = v.value().iter().map(|x| x * x).sum();
        if norm == 0.0 {
            return Err(XlingError::ZeroNorm);
        }
    }
    let cu = cosine(u_a, u_b);
    let cl = cosine(l_a, l_b);
    let d = cu - cl;
    Ok(d * d)
}

/// The adversary: a linear layer + softmax fit to a uniform distribution
/// over slot types.
#[derive(Debug, Clone)]
pub struct AlvmHead {
    prefix: String,
    pub latent_dim: usize,
    pub n_slots: usize,
}

impl AlvmHead {
    pub fn new(prefix: impl Into<String>, latent_dim: usize, n_slots: usize) -> Self {
        AlvmHead { prefix: prefix.into(), latent_dim, n_slots }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        linear_init(store, rng, &format!("{}.fc", self.prefix), self.latent_dim, self.n_slots);
    }

    pub fn param_names(&self) -> [String; 2] {
        [format!("{}.fc.w", self.prefix), format!("{}.fc.b", self.prefix)]
    }
}

/// Adversarial losses with their gradient routing baked in:
/// `L_fc = sum MSE(p, U)` updates only the adversary (the latents are
/// detached), while `L_lvm = sum MSE(p, y)` updates everything except the
/// adversary (its parameters are detached).
pub fn alvm_losses<'t>(
    binder: &Binder<'t, '_>,
    tape: &'t Tape,
    head: &AlvmHead,
    z: Var<'t>,
    gold_one_hot: &Array2<f64>,
) -> Result<(Var<'t>, Var<'t>), XlingError> {
    if head.n_slots < 2 {
        return Err(XlingError::TooFewSlotTypes(head.n_slots));
    }
    let n = z.dim().0;
    assert_eq!(gold_one_hot.dim(), (n, head.n_slots), "one-hot shape mismatch");
    let w = binder.get(&format!("{}.fc.w", head.prefix));
    let b = binder.get(&format!("{}.fc.b", head.prefix));
    let uniform = tape.input(Array2::from_elem((n, head.n_slots), 1.0 / head.n_slots as f64));
    let gold = tape.input(gold_one_hot.clone());

    let p_fc = z.detach().matmul(w).add_row(b).softmax_rows();
    let d_fc = p_fc - uniform;
    let l_fc = (d_fc * d_fc).mean_rows().sum_all();

    let p_lvm = z.matmul(w.detach()).add_row(b.detach()).softmax_rows();
    let d_lvm = p_lvm - gold;
    let l_lvm = (d_lvm * d_lvm).mean_rows().sum_all();
    Ok((l_fc, l_lvm))
}
