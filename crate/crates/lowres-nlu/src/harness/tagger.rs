use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::embed_align::delexicalize;
use crate::encoders::{
    LinearChainCrf, OrtConfig, OrtEncoder, PositionalMode, RecurrentEncoder,
};
use crate::nn::{
    argmax_rows, cross_entropy_sum, embedding_lookup, linear, linear_init, xavier, Adam, Binder,
    ParamStore, Tape, Var,
};
use crate::xling_reg::{inject_noise, NoiseConfig, RunMode};

use super::formats::TaggedSequence;
use super::synth::rng_from_seed;
use super::HarnessError;

/// Sequence encoder family for the BIO tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaggerEncoderKind {
    BiLstm,
    /// Transformer with sinusoidal positions and Conv1d feed-forward.
    Transformer,
    /// Order-Reduced Transformer: no positional signal at all.
    Ort,
}

impl TaggerEncoderKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bilstm" => Some(TaggerEncoderKind::BiLstm),
            "trs" | "transformer" => Some(TaggerEncoderKind::Transformer),
            "ort" => Some(TaggerEncoderKind::Ort),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaggerConfig {
    pub encoder: TaggerEncoderKind,
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub heads: usize,
    pub kernel: usize,
    pub use_crf: bool,
    pub noise_variance: f64,
    pub delexicalize: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            encoder: TaggerEncoderKind::Ort,
            embed_dim: 32,
            hidden: 32,
            layers: 1,
            heads: 4,
            kernel: 3,
            use_crf: true,
            noise_variance: 0.0,
            delexicalize: false,
            epochs: 10,
            batch_size: 8,
            learning_rate: 5e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaggerTrainReport {
    pub epoch_losses: Vec<f64>,
}

enum TaggerBody {
    Recurrent(RecurrentEncoder),
    Stack(OrtEncoder),
}

/// BIO tagger: embedding, a configurable encoder, and a CRF (or softmax)
/// output layer.
pub struct SequenceTagger {
    pub cfg: TaggerConfig,
    vocab: BTreeMap<String, usize>,
    pub labels: Vec<String>,
    body: TaggerBody,
    crf: Option<LinearChainCrf>,
    pub store: ParamStore,
}

impl SequenceTagger {
    pub fn new(cfg: TaggerConfig, dataset: &[TaggedSequence]) -> Result<Self, HarnessError> {
        if dataset.is_empty() {
            return Err(HarnessError::BadSplit("training set is empty".into()));
        }
        let mut vocab = BTreeMap::new();
        vocab.insert("<unk>".to_string(), 0);
        let mut labels = std::collections::BTreeSet::new();
        labels.insert("O".to_string());
        for seq in dataset {
            let tokens = if cfg.delexicalize { delexicalize(&seq.tokens) } else { seq.tokens.clone() };
            for t in &tokens {
                let next = vocab.len();
                vocab.entry(t.clone()).or_insert(next);
            }
            for l in &seq.labels {
                labels.insert(l.clone());
                if let Some(rest) = l.strip_prefix("B-") {
                    labels.insert(format!("I-{rest}"));
                }
            }
        }
        let labels: Vec<String> = labels.into_iter().collect();

        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(cfg.seed);
        let out_dim;
        let body = match cfg.encoder {
            TaggerEncoderKind::BiLstm => {
                let enc = RecurrentEncoder::new("tag.lstm", cfg.embed_dim, cfg.hidden, true);
                enc.init(&mut store, &mut rng);
                out_dim = enc.output_dim();
                TaggerBody::Recurrent(enc)
            }
            TaggerEncoderKind::Transformer | TaggerEncoderKind::Ort => {
                let positional = if cfg.encoder == TaggerEncoderKind::Ort {
                    PositionalMode::None
                } else {
                    PositionalMode::Sinusoid
                };
                let ort_cfg = OrtConfig {
                    layers: cfg.layers,
                    heads: cfg.heads,
                    hidden: cfg.embed_dim,
                    kernel: cfg.kernel,
                    filter: cfg.hidden,
                    positional,
                    max_len: 256,
                };
                let enc = OrtEncoder::new("tag.enc", ort_cfg)
                    .map_err(|e| HarnessError::BadSplit(e.to_string()))?;
                enc.init(&mut store, &mut rng);
                out_dim = cfg.embed_dim;
                TaggerBody::Stack(enc)
            }
        };
        store.insert("tag.embed", xavier(&mut rng, vocab.len(), cfg.embed_dim));
        linear_init(&mut store, &mut rng, "tag.out", out_dim, labels.len());
        let crf = if cfg.use_crf {
            let crf = LinearChainCrf::new("tag.crf", labels.len());
            crf.init(&mut store, &mut rng);
            Some(crf)
        } else {
            None
        };
        Ok(SequenceTagger { cfg, vocab, labels, body, crf, store })
    }

    fn prepare(&self, tokens: &[String]) -> Vec<usize> {
        let tokens =
            if self.cfg.delexicalize { delexicalize(tokens) } else { tokens.to_vec() };
        tokens.iter().map(|t| self.vocab.get(t).copied().unwrap_or(0)).collect()
    }

    fn emissions<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        tokens: &[String],
        mode: RunMode,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Var<'t> {
        let ids = self.prepare(tokens);
        let embedded = embedding_lookup(binder, "tag.embed", &ids);
        let embedded = if self.cfg.noise_variance > 0.0 {
            let noise_cfg =
                NoiseConfig { variance: self.cfg.noise_variance, training_only: true };
            let noisy = inject_noise(&embedded.value(), &noise_cfg, mode, rng);
            let delta = noisy - embedded.value();
            embedded + tape.input(delta)
        } else {
            embedded
        };
        let hidden = match &self.body {
            TaggerBody::Recurrent(enc) => enc.forward(binder, tape, embedded),
            TaggerBody::Stack(enc) => enc
                .forward(binder, tape, embedded, &self.store)
                .expect("dimensions fixed at construction"),
        };
        linear(binder, "tag.out", hidden)
    }

    pub fn train(&mut self, dataset: &[TaggedSequence]) -> TaggerTrainReport {
        let mut rng = rng_from_seed(self.cfg.seed.wrapping_add(11));
        let mut optimizer = Adam::new(self.cfg.learning_rate);
        let mut report = TaggerTrainReport { epoch_losses: Vec::new() };
        for _ in 0..self.cfg.epochs {
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(self.cfg.batch_size.max(1)) {
                let (loss_value, gmap) = {
                    let tape = Tape::new();
                    let binder = Binder::new(&tape, &self.store);
                    let mut loss: Option<Var<'_>> = None;
                    for &i in batch {
                        let seq = &dataset[i];
                        let emissions =
                            self.emissions(&binder, &tape, &seq.tokens, RunMode::Train, &mut rng);
                        let gold: Vec<usize> = seq
                            .labels
                            .iter()
                            .map(|l| self.labels.iter().position(|x| x == l).unwrap_or(0))
                            .collect();
                        let term = match &self.crf {
                            Some(crf) => crf.nll(&binder, emissions, &gold),
                            None => cross_entropy_sum(emissions, &gold),
                        };
                        loss = Some(match loss {
                            Some(acc) => acc + term,
                            None => term,
                        });
                    }
                    let loss = loss.expect("nonempty batch");
                    let grads = tape.backward(loss);
                    (loss.value()[(0, 0)], binder.grad_map(&grads))
                };
                epoch_loss += loss_value;
                optimizer.step(&mut self.store, &gmap);
            }
            report.epoch_losses.push(epoch_loss);
        }
        report
    }

    pub fn predict(&self, tokens: &[String]) -> Vec<String> {
        let tape = Tape::new();
        let binder = Binder::new(&tape, &self.store);
        let mut rng = rng_from_seed(0);
        let emissions = self.emissions(&binder, &tape, tokens, RunMode::Eval, &mut rng).value();
        let ids = match &self.crf {
            Some(crf) => crf.viterbi(&self.store, &emissions),
            None => argmax_rows(&emissions),
        };
        ids.into_iter().map(|i| self.labels[i].clone()).collect()
    }
}
