use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::encoders::{LinearChainCrf, RecurrentEncoder};
use crate::harness::synth::rng_from_seed;
use crate::nn::{
    argmax_rows, cross_entropy_sum, embedding_lookup, linear, linear_init, xavier, Adam, Binder,
    ParamStore, Tape, Var,
};
use crate::xling_reg::attention_pool;

use super::templates::make_templates;
use super::{coarse_spans, template_losses, CoachError, DescriptionMatrix, EntitySpan};

/// How an entity span's hidden states are folded into one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityEncoderKind {
    /// BiLSTM over the span's hidden states; the final states summarize it.
    Recurrent,
    /// Attention pooling over the span followed by a projection.
    AttentionSum,
    /// Plain sum over the span followed by a projection.
    PlainSum,
}

impl EntityEncoderKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "recurrent" | "bilstm" => Some(EntityEncoderKind::Recurrent),
            "attention-sum" => Some(EntityEncoderKind::AttentionSum),
            "sum" => Some(EntityEncoderKind::PlainSum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoachConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub template_hidden: usize,
    pub entity_encoder: EntityEncoderKind,
    pub use_template_reg: bool,
    pub beta: f64,
    /// Epochs during which template losses update only the template
    /// encoder.
    pub warmup_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CoachConfig {
    fn default() -> Self {
        CoachConfig {
            embed_dim: 24,
            hidden: 24,
            template_hidden: 24,
            entity_encoder: EntityEncoderKind::Recurrent,
            use_template_reg: true,
            beta: 1.0,
            warmup_epochs: 2,
            epochs: 8,
            batch_size: 8,
            learning_rate: 5e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct CoachTrainReport {
    pub epoch_losses: Vec<f64>,
}

/// The coarse-to-fine tagger. The 3-way coarse labels are 0 = O, 1 = B,
/// 2 = I.
pub struct CoachModel {
    pub cfg: CoachConfig,
    vocab: BTreeMap<String, usize>,
    pub desc: DescriptionMatrix,
    utter_lstm: RecurrentEncoder,
    span_lstm: RecurrentEncoder,
    template_lstm: RecurrentEncoder,
    crf: LinearChainCrf,
    pub store: ParamStore,
}

impl CoachModel {
    /// Builds the model. The vocabulary covers the training tokens, every
    /// description word (including target-domain descriptions supplied for
    /// later adaptation), and the slot-type tokens used in templates.
    pub fn new(
        cfg: CoachConfig,
        dataset: &[(Vec<String>, Vec<String>)],
        all_descriptions: &DescriptionMatrix,
        source_inventory: &DescriptionMatrix,
    ) -> Result<Self, CoachError> {
        if dataset.is_empty() {
            return Err(CoachError::EmptyDataset);
        }
        for (tokens, labels) in dataset {
            if tokens.len() != labels.len() {
                return Err(CoachError::LengthMismatch {
                    tokens: tokens.len(),
                    labels: labels.len(),
                });
            }
        }
        if source_inventory.is_empty() {
            return Err(CoachError::EmptySlotInventory);
        }
        let mut vocab = BTreeMap::new();
        vocab.insert("<unk>".to_string(), 0);
        let add = |w: &str, vocab: &mut BTreeMap<String, usize>| {
            let next = vocab.len();
            vocab.entry(w.to_string()).or_insert(next);
        };
        for (tokens, _) in dataset {
            for t in tokens {
                add(t, &mut vocab);
            }
        }
        for (ty, desc) in all_descriptions.types.iter().zip(&all_descriptions.descriptions) {
            add(ty, &mut vocab);
            for w in desc {
                add(w, &mut vocab);
            }
        }

        let utter_lstm = RecurrentEncoder::new("utter", cfg.embed_dim, cfg.hidden, true);
        // Span encoder output dim equals the description dim (embed_dim).
        assert!(cfg.embed_dim % 2 == 0, "embed_dim must be even");
        let span_lstm =
            RecurrentEncoder::new("span", utter_lstm.output_dim(), cfg.embed_dim / 2, true);
        let template_lstm =
            RecurrentEncoder::new("tmpl", cfg.embed_dim, cfg.template_hidden, true);
        let crf = LinearChainCrf::new("crf", 3);

        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(cfg.seed);
        store.insert("embed", xavier(&mut rng, vocab.len(), cfg.embed_dim));
        utter_lstm.init(&mut store, &mut rng);
        span_lstm.init(&mut store, &mut rng);
        template_lstm.init(&mut store, &mut rng);
        crf.init(&mut store, &mut rng);
        linear_init(&mut store, &mut rng, "coarse", utter_lstm.output_dim(), 3);
        linear_init(&mut store, &mut rng, "spanproj", utter_lstm.output_dim(), cfg.embed_dim);
        store.insert("utter.pool.w", xavier(&mut rng, utter_lstm.output_dim(), 1));
        store.insert("span.pool.w", xavier(&mut rng, utter_lstm.output_dim(), 1));
        store.insert("tmpl.pool.w", xavier(&mut rng, template_lstm.output_dim(), 1));

        Ok(CoachModel {
            cfg,
            vocab,
            desc: source_inventory.clone(),
            utter_lstm,
            span_lstm,
            template_lstm,
            crf,
            store,
        })
    }

    /// Swaps in a target-domain slot inventory; all trained layers are
    /// reused unchanged.
    pub fn adapt_inventory(&mut self, inventory: DescriptionMatrix) {
        self.desc = inventory;
    }

    pub fn vocab(&self) -> &BTreeMap<String, usize> {
        &self.vocab
    }

    fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.vocab.get(t).copied().unwrap_or(0)).collect()
    }

    fn encode_utterance<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        tokens: &[String],
    ) -> Var<'t> {
        let embedded = embedding_lookup(binder, "embed", &self.ids(tokens));
        self.utter_lstm.forward(binder, tape, embedded)
    }

    /// Span representation r_k in description space.
    fn span_rep<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        hidden: Var<'t>,
        span: EntitySpan,
    ) -> Var<'t> {
        let rows = hidden.slice_rows(span.start, span.end + 1);
        match self.cfg.entity_encoder {
            EntityEncoderKind::Recurrent => {
                let states = self.span_lstm.forward(binder, tape, rows);
                let n = span.end - span.start + 1;
                let h = self.cfg.embed_dim / 2;
                let fwd_last = states.slice_rows(n - 1, n).t().slice_rows(0, h).t();
                let bwd_first = states.slice_rows(0, 1).t().slice_rows(h, 2 * h).t();
                crate::nn::hstack(&[fwd_last, bwd_first])
            }
            EntityEncoderKind::AttentionSum => {
                let (pooled, _) = attention_pool(rows, binder.get("span.pool.w"));
                linear(binder, "spanproj", pooled)
            }
            EntityEncoderKind::PlainSum => {
                let summed = rows.sum_cols();
                linear(binder, "spanproj", summed)
            }
        }
    }

    fn coarse_gold(labels: &[String]) -> Vec<usize> {
        labels
            .iter()
            .map(|l| {
                if l.starts_with("B-") {
                    1
                } else if l.starts_with("I-") {
                    2
                } else {
                    0
                }
            })
            .collect()
    }

    fn type_index(&self, ty: &str) -> Option<usize> {
        self.desc.types.iter().position(|t| t == ty)
    }

    /// One utterance's loss: CRF NLL of the 3-way labels, typing
    /// cross-entropy over gold spans, and (optionally) template losses.
    #[allow(clippy::too_many_arguments)]
    fn sample_loss<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        tokens: &[String],
        labels: &[String],
        warm_up: bool,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Var<'t> {
        let hidden = self.encode_utterance(binder, tape, tokens);
        let emissions = linear(binder, "coarse", hidden);
        let mut loss = self.crf.nll(binder, emissions, &Self::coarse_gold(labels));

        let desc_rows = self.desc.rows(binder, &self.vocab, "embed");
        let spans = crate::augment::bio_spans(labels);
        for (s, e, ty) in &spans {
            let Some(gold_type) = self.type_index(ty) else { continue };
            let rep = self.span_rep(binder, tape, hidden, EntitySpan { start: *s, end: *e });
            let scores = rep.matmul(desc_rows.t());
            loss = loss + cross_entropy_sum(scores, &[gold_type]);
        }

        if self.cfg.use_template_reg {
            let set = make_templates(tokens, labels, &self.desc.types, rng);
            if set.has_entities {
                let (r_u, _) = attention_pool(hidden, binder.get("utter.pool.w"));
                let r_right = self.template_rep(binder, tape, &set.right);
                let wrongs: Vec<Var<'t>> =
                    set.wrong.iter().map(|w| self.template_rep(binder, tape, w)).collect();
                let (l_r, l_w) = template_losses(r_u, r_right, &wrongs, self.cfg.beta, warm_up);
                loss = loss + l_r + l_w;
            }
        }
        loss
    }

    fn template_rep<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        template: &[String],
    ) -> Var<'t> {
        let embedded = embedding_lookup(binder, "embed", &self.ids(template));
        let hidden = self.template_lstm.forward(binder, tape, embedded);
        let (pooled, _) = attention_pool(hidden, binder.get("tmpl.pool.w"));
        pooled
    }

    /// Trains for `cfg.epochs`; template losses touch only the template
    /// encoder during the first `cfg.warmup_epochs`.
    pub fn train(&mut self, dataset: &[(Vec<String>, Vec<String>)]) -> CoachTrainReport {
        self.train_epochs(dataset, self.cfg.epochs)
    }

    pub fn train_epochs(
        &mut self,
        dataset: &[(Vec<String>, Vec<String>)],
        epochs: usize,
    ) -> CoachTrainReport {
        let mut rng = rng_from_seed(self.cfg.seed.wrapping_add(3));
        let mut optimizer = Adam::new(self.cfg.learning_rate);
        let mut report = CoachTrainReport::default();
        for epoch in 0..epochs {
            let warm_up = epoch < self.cfg.warmup_epochs;
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(self.cfg.batch_size.max(1)) {
                let (loss_value, gmap) = {
                    let tape = Tape::new();
                    let binder = Binder::new(&tape, &self.store);
                    let mut loss: Option<Var<'_>> = None;
                    for &i in batch {
                        let (tokens, labels) = &dataset[i];
                        let term =
                            self.sample_loss(&binder, &tape, tokens, labels, warm_up, &mut rng);
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

    /// 3-way coarse tagging through the CRF.
    pub fn coarse_tag(&self, tokens: &[String]) -> Vec<usize> {
        let tape = Tape::new();
        let binder = Binder::new(&tape, &self.store);
        let hidden = self.encode_utterance(&binder, &tape, tokens);
        let emissions = linear(&binder, "coarse", hidden).value();
        self.crf.viterbi(&self.store, &emissions)
    }

    /// Types a batch of already-detected spans.
    pub fn type_entities(&self, tokens: &[String], spans: &[EntitySpan]) -> Vec<String> {
        if spans.is_empty() {
            return Vec::new();
        }
        let tape = Tape::new();
        let binder = Binder::new(&tape, &self.store);
        let hidden = self.encode_utterance(&binder, &tape, tokens);
        let desc_rows = self.desc.rows(&binder, &self.vocab, "embed");
        spans
            .iter()
            .map(|span| {
                let rep = self.span_rep(&binder, &tape, hidden, *span);
                let scores = rep.matmul(desc_rows.t()).value();
                self.desc.types[argmax_rows(&scores)[0]].clone()
            })
            .collect()
    }

    /// End-to-end BIO prediction: coarse spans, then per-span typing.
    pub fn predict(&self, tokens: &[String]) -> Vec<String> {
        let coarse = self.coarse_tag(tokens);
        let spans = coarse_spans(&coarse);
        let types = self.type_entities(tokens, &spans);
        let mut labels = vec!["O".to_string(); tokens.len()];
        for (span, ty) in spans.iter().zip(types) {
            labels[span.start] = format!("B-{ty}");
            for t in span.start + 1..=span.end {
                labels[t] = format!("I-{ty}");
            }
        }
        labels
    }
}
