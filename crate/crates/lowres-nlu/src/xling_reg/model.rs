use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::encoders::RecurrentEncoder;
use crate::harness::synth::rng_from_seed;
use crate::nn::{argmax_rows, cross_entropy_sum, embedding_lookup, xavier, Adam, Binder, ParamStore, Tape, Var};

use super::ops::{alvm_losses, attention_pool, inject_noise, AlvmHead, LvmHead, NoiseConfig, RunMode};
use super::{label_reg_loss, LossWeights, XlingError};

/// One labeled utterance: tokens, BIO slot labels, and an intent.
#[derive(Debug, Clone)]
pub struct XlingSample {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
    pub intent: String,
}

pub type XlingDataset = Vec<XlingSample>;

#[derive(Debug, Clone)]
pub struct XlingConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub latent: usize,
    pub label_embed_dim: usize,
    pub label_hidden: usize,
    pub noise: NoiseConfig,
    pub weights: LossWeights,
    pub use_label_reg: bool,
    pub use_alvm: bool,
    /// Label-encoder pretraining epochs before the main run; 0 skips the
    /// pretraining ablation arm.
    pub pretrain_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for XlingConfig {
    fn default() -> Self {
        XlingConfig {
            embed_dim: 16,
            hidden: 16,
            latent: 12,
            label_embed_dim: 12,
            label_hidden: 12,
            noise: NoiseConfig::default(),
            weights: LossWeights::default(),
            use_label_reg: true,
            use_alvm: true,
            pretrain_epochs: 2,
            epochs: 6,
            batch_size: 8,
            learning_rate: 5e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct EpochLosses {
    pub total: f64,
    pub slot: f64,
    pub intent: f64,
    pub label_reg: f64,
    pub adversary: f64,
    pub lvm: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct XlingTrainReport {
    pub pretrain_label_reg: Vec<f64>,
    pub epochs: Vec<EpochLosses>,
}

/// BiLSTM + attention pooling + latent-variable heads for joint slot
/// filling and intent detection, with the label-regularization and
/// adversarial-latent extensions.
pub struct XlingModel {
    pub cfg: XlingConfig,
    vocab: BTreeMap<String, usize>,
    label_vocab: BTreeMap<String, usize>,
    pub slot_labels: Vec<String>,
    pub intents: Vec<String>,
    utter_lstm: RecurrentEncoder,
    label_lstm: RecurrentEncoder,
    slot_head: LvmHead,
    intent_head: LvmHead,
    adversary: AlvmHead,
    pub store: ParamStore,
}

impl XlingModel {
    pub fn new(cfg: XlingConfig, dataset: &XlingDataset) -> Result<Self, XlingError> {
        if dataset.is_empty() {
            return Err(XlingError::EmptyDataset);
        }
        for s in dataset {
            if s.tokens.len() != s.labels.len() {
                return Err(XlingError::LengthMismatch {
                    tokens: s.tokens.len(),
                    labels: s.labels.len(),
                });
            }
        }
        let mut vocab = BTreeMap::new();
        vocab.insert("<unk>".to_string(), 0);
        let mut slot_labels = std::collections::BTreeSet::new();
        let mut intents = std::collections::BTreeSet::new();
        for s in dataset {
            for t in &s.tokens {
                let next = vocab.len();
                vocab.entry(t.clone()).or_insert(next);
            }
            for l in &s.labels {
                slot_labels.insert(l.clone());
            }
            intents.insert(s.intent.clone());
        }
        let slot_labels: Vec<String> = slot_labels.into_iter().collect();
        let intents: Vec<String> = intents.into_iter().collect();
        let label_vocab: BTreeMap<String, usize> =
            slot_labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

        let utter_lstm = RecurrentEncoder::new("utter.lstm", cfg.embed_dim, cfg.hidden, true);
        let label_lstm =
            RecurrentEncoder::new("label.lstm", cfg.label_embed_dim, cfg.label_hidden, true);
        let slot_head =
            LvmHead::new("slot.lvm", utter_lstm.output_dim(), cfg.latent, slot_labels.len());
        let intent_head =
            LvmHead::new("intent.lvm", utter_lstm.output_dim(), cfg.latent, intents.len());
        let adversary = AlvmHead::new("adversary", cfg.latent, slot_labels.len());

        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(cfg.seed);
        store.insert("embed", xavier(&mut rng, vocab.len(), cfg.embed_dim));
        store.insert("label_embed", xavier(&mut rng, slot_labels.len(), cfg.label_embed_dim));
        store.insert("utter.pool.w", xavier(&mut rng, utter_lstm.output_dim(), 1));
        store.insert("label.pool.w", xavier(&mut rng, label_lstm.output_dim(), 1));
        utter_lstm.init(&mut store, &mut rng);
        label_lstm.init(&mut store, &mut rng);
        slot_head.init(&mut store, &mut rng);
        intent_head.init(&mut store, &mut rng);
        adversary.init(&mut store, &mut rng);

        Ok(XlingModel {
            cfg,
            vocab,
            label_vocab,
            slot_labels,
            intents,
            utter_lstm,
            label_lstm,
            slot_head,
            intent_head,
            adversary,
            store,
        })
    }

    fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.vocab.get(t).copied().unwrap_or(0)).collect()
    }

    /// Utterance pass: slot logits, intent logits, pooled utterance
    /// representation, and the slot latents.
    #[allow(clippy::type_complexity)]
    fn utterance_forward<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        tokens: &[String],
        mode: RunMode,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> (Var<'t>, Var<'t>, Var<'t>, Var<'t>) {
        let ids = self.token_ids(tokens);
        let embedded = embedding_lookup(binder, "embed", &ids);
        let noisy = {
            let value = inject_noise(&embedded.value(), &self.cfg.noise, mode, rng);
            let noise_only = value - embedded.value();
            embedded + tape.input(noise_only)
        };
        let hidden = self.utter_lstm.forward(binder, tape, noisy);
        let (pooled, _) = attention_pool(hidden, binder.get("utter.pool.w"));
        let (slot_logits, z_slots) = self.slot_head.forward(binder, tape, hidden, mode, rng);
        let (intent_logits, _) = self.intent_head.forward(binder, tape, pooled, mode, rng);
        (slot_logits, intent_logits, pooled, z_slots)
    }

    fn label_forward<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        labels: &[String],
    ) -> Var<'t> {
        let ids: Vec<usize> =
            labels.iter().map(|l| self.label_vocab.get(l).copied().unwrap_or(0)).collect();
        let embedded = embedding_lookup(binder, "label_embed", &ids);
        let hidden = self.label_lstm.forward(binder, tape, embedded);
        let (pooled, _) = attention_pool(hidden, binder.get("label.pool.w"));
        pooled
    }

    fn one_hot(&self, labels: &[String]) -> Array2<f64> {
        let n_s = self.slot_labels.len();
        Array2::from_shape_fn((labels.len(), n_s), |(i, j)| {
            f64::from(self.label_vocab.get(&labels[i]).copied() == Some(j))
        })
    }

    /// Runs one optimization epoch; returns summed losses.
    #[allow(clippy::too_many_arguments)]
    fn run_epoch(
        &mut self,
        dataset: &XlingDataset,
        optimizer: &mut Adam,
        alpha: f64,
        beta: f64,
        use_alvm: bool,
        use_label_reg: bool,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> EpochLosses {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(rng);
        let mut sums = EpochLosses { alpha, beta, ..Default::default() };
        for batch in order.chunks(self.cfg.batch_size.max(2)) {
            let (batch_sums, gmap) = {
            let tape = Tape::new();
            let binder = Binder::new(&tape, &self.store);
            let mut slot_loss: Option<Var<'_>> = None;
            let mut intent_loss: Option<Var<'_>> = None;
            let mut lr_loss: Option<Var<'_>> = None;
            let mut fc_loss: Option<Var<'_>> = None;
            let mut lvm_loss: Option<Var<'_>> = None;
            let mut pooled_reps = Vec::new();
            let mut label_reps = Vec::new();
            for &i in batch {
                let sample = &dataset[i];
                let (slot_logits, intent_logits, pooled, z_slots) =
                    self.utterance_forward(&binder, &tape, &sample.tokens, RunMode::Train, rng);
                let gold_slots: Vec<usize> = sample
                    .labels
                    .iter()
                    .map(|l| self.label_vocab.get(l).copied().unwrap_or(0))
                    .collect();
                let gold_intent =
                    self.intents.iter().position(|x| x == &sample.intent).unwrap_or(0);
                let s = cross_entropy_sum(slot_logits, &gold_slots);
                let i_loss = cross_entropy_sum(intent_logits, &[gold_intent]);
                slot_loss = Some(accumulate(slot_loss, s));
                intent_loss = Some(accumulate(intent_loss, i_loss));
                if use_alvm {
                    let (l_fc, l_lvm) = alvm_losses(
                        &binder,
                        &tape,
                        &self.adversary,
                        z_slots,
                        &self.one_hot(&sample.labels),
                    )
                    .expect("slot inventory is >= 2 in training worlds");
                    fc_loss = Some(accumulate(fc_loss, l_fc));
                    lvm_loss = Some(accumulate(lvm_loss, l_lvm));
                }
                if use_label_reg {
                    pooled_reps.push(pooled);
                    label_reps.push(self.label_forward(&binder, &tape, &sample.labels));
                }
            }
            if use_label_reg {
                // Pairs without replacement inside the batch.
                for pair in pooled_reps.chunks(2).zip(label_reps.chunks(2)) {
                    if let ([u_a, u_b], [l_a, l_b]) = pair {
                        if let Ok(term) = label_reg_loss(*u_a, *u_b, *l_a, *l_b) {
                            lr_loss = Some(accumulate(lr_loss, term));
                        }
                    }
                }
            }
            let mut total = slot_loss.expect("nonempty batch")
                + intent_loss.expect("nonempty batch");
            if let Some(l) = lr_loss {
                total = total + l;
            }
            if let Some(l) = fc_loss {
                total = total + l.scale(alpha);
            }
            if let Some(l) = lvm_loss {
                total = total + l.scale(beta);
            }
            let grads = tape.backward(total);
            let batch_sums = (
                total.value()[(0, 0)],
                slot_loss.map(|v| v.value()[(0, 0)]).unwrap_or(0.0),
                intent_loss.map(|v| v.value()[(0, 0)]).unwrap_or(0.0),
                lr_loss.map(|v| v.value()[(0, 0)]).unwrap_or(0.0),
                fc_loss.map(|v| v.value()[(0, 0)]).unwrap_or(0.0),
                lvm_loss.map(|v| v.value()[(0, 0)]).unwrap_or(0.0),
            );
            (batch_sums, binder.grad_map(&grads))
            };
            optimizer.step(&mut self.store, &gmap);
            sums.total += batch_sums.0;
            sums.slot += batch_sums.1;
            sums.intent += batch_sums.2;
            sums.label_reg += batch_sums.3;
            sums.adversary += batch_sums.4;
            sums.lvm += batch_sums.5;
        }
        sums
    }

    /// Pre-trains the label-sequence encoder jointly with the main task
    /// using only `L_S + L_I + L_lr`, then runs the full objective with
    /// the alpha schedule. Deterministic given the config seed.
    pub fn train(&mut self, dataset: &XlingDataset) -> XlingTrainReport {
        let mut rng = rng_from_seed(self.cfg.seed.wrapping_add(1));
        let mut optimizer = Adam::new(self.cfg.learning_rate);
        let mut report = XlingTrainReport::default();
        for _ in 0..self.cfg.pretrain_epochs {
            let losses =
                self.run_epoch(dataset, &mut optimizer, 0.0, 0.0, false, true, &mut rng);
            report.pretrain_label_reg.push(losses.label_reg);
        }
        for epoch in 0..self.cfg.epochs {
            let alpha = if self.cfg.use_alvm { self.cfg.weights.alpha_at(epoch) } else { 0.0 };
            let beta = if self.cfg.use_alvm { self.cfg.weights.beta_at(epoch) } else { 0.0 };
            let losses = self.run_epoch(
                dataset,
                &mut optimizer,
                alpha,
                beta,
                self.cfg.use_alvm,
                self.cfg.use_label_reg,
                &mut rng,
            );
            report.epochs.push(losses);
        }
        report
    }

    /// Deterministic inference: noise off, latents at their means.
    pub fn predict(&self, tokens: &[String]) -> (Vec<String>, String) {
        let tape = Tape::new();
        let binder = Binder::new(&tape, &self.store);
        let mut rng = rng_from_seed(0);
        let (slot_logits, intent_logits, _, _) =
            self.utterance_forward(&binder, &tape, tokens, RunMode::Eval, &mut rng);
        let slots = argmax_rows(&slot_logits.value())
            .into_iter()
            .map(|j| self.slot_labels[j].clone())
            .collect();
        let intent = self.intents[argmax_rows(&intent_logits.value())[0]].clone();
        (slots, intent)
    }
}

fn accumulate<'t>(acc: Option<Var<'t>>, term: Var<'t>) -> Var<'t> {
    match acc {
        Some(a) => a + term,
        None => term,
    }
}
