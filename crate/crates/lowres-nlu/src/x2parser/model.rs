use std::cell::Cell;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::encoders::{OrtConfig, OrtEncoder, PositionalMode};
use crate::harness::synth::rng_from_seed;
use crate::nn::{
    cross_entropy_sum, embedding_lookup, linear, linear_init_zeros, xavier, Adam, Binder,
    ParamStore, Tape, Var,
};
use crate::parse_repr::{
    decode_flat_with_repair, encode_flat, FlatLabels, ParseTree, RepairCounts,
};

use super::{copy_indices, regroup_stacks, FertilityVector, X2Error, X2Targets};

#[derive(Debug, Clone)]
pub struct X2Config {
    pub hidden: usize,
    pub encoder_layers: usize,
    pub encoder_heads: usize,
    pub kernel: usize,
    pub positional: PositionalMode,
    pub slot_layers: usize,
    pub slot_heads: usize,
    pub slot_filter: usize,
    pub max_fertility: usize,
    pub max_len: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for X2Config {
    fn default() -> Self {
        X2Config {
            hidden: 400,
            encoder_layers: 2,
            encoder_heads: 8,
            kernel: 3,
            positional: PositionalMode::Sinusoid,
            slot_layers: 1,
            slot_heads: 4,
            slot_filter: 64,
            max_fertility: 3,
            max_len: 64,
            learning_rate: 1e-3,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl X2Config {
    /// Small configuration for desk-scale overfit runs.
    pub fn tiny() -> Self {
        X2Config { hidden: 64, encoder_heads: 4, slot_filter: 64, ..Default::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct X2TrainReport {
    pub steps: Vec<f64>,
    pub final_loss: f64,
}

/// One end-to-end prediction with its bookkeeping.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub tree: ParseTree,
    pub flat: FlatLabels,
    pub fertility: FertilityVector,
    /// Raw flattened slot predictions before regrouping; its length is
    /// always the fertility total.
    pub flattened_slots: Vec<String>,
    pub repairs: RepairCounts,
    /// Encoder passes used for this utterance (always 1).
    pub encoder_passes: usize,
    /// Slot-decoder passes used for this utterance (always 1: the
    /// non-autoregressive contract).
    pub slot_decoder_passes: usize,
}

/// The parser: shared encoder, coarse/fine intent heads, fertility
/// classifier, and the copy + slot encoder + slot classifier pipeline.
pub struct X2Parser {
    pub cfg: X2Config,
    vocab: BTreeMap<String, usize>,
    pub coarse_intents: Vec<String>,
    pub fine_labels: Vec<String>,
    pub slot_labels: Vec<String>,
    encoder: OrtEncoder,
    slot_encoder: OrtEncoder,
    pub store: ParamStore,
    encoder_passes: Cell<usize>,
    slot_decoder_passes: Cell<usize>,
}

impl X2Parser {
    /// Builds the model and its label inventories from gold trees.
    pub fn new(cfg: X2Config, train: &[ParseTree]) -> Result<Self, X2Error> {
        if train.is_empty() {
            return Err(X2Error::EmptyDataset);
        }
        let mut vocab = BTreeMap::new();
        vocab.insert("<unk>".to_string(), 0);
        let mut coarse = std::collections::BTreeSet::new();
        let mut fine = std::collections::BTreeSet::new();
        let mut slots = std::collections::BTreeSet::new();
        fine.insert("O".to_string());
        slots.insert("O".to_string());
        for tree in train {
            for t in &tree.tokens {
                let next = vocab.len();
                vocab.entry(t.clone()).or_insert(next);
            }
            let flat = encode_flat(tree, cfg.max_fertility)?;
            coarse.insert(flat.coarse_intent.clone());
            for l in &flat.fine_intents {
                fine.insert(l.clone());
            }
            for stack in &flat.slot_stacks {
                for l in stack {
                    slots.insert(l.clone());
                    // The continuation form of every slot label must be
                    // available to the classifier even if unseen in gold.
                    if let Some(rest) = l.strip_prefix("B-") {
                        slots.insert(format!("I-{rest}"));
                    }
                }
            }
        }

        let encoder_cfg = OrtConfig {
            layers: cfg.encoder_layers,
            heads: cfg.encoder_heads,
            hidden: cfg.hidden,
            kernel: cfg.kernel,
            filter: cfg.hidden,
            positional: cfg.positional,
            max_len: cfg.max_len + 1,
        };
        let encoder = OrtEncoder::new("enc", encoder_cfg).map_err(|_| X2Error::EmptyDataset)?;
        let slot_cfg = OrtConfig {
            layers: cfg.slot_layers,
            heads: cfg.slot_heads,
            hidden: cfg.hidden,
            kernel: cfg.kernel,
            filter: cfg.slot_filter,
            positional: PositionalMode::Sinusoid,
            max_len: cfg.max_len * cfg.max_fertility + 1,
        };
        let slot_encoder =
            OrtEncoder::new("slotenc", slot_cfg).map_err(|_| X2Error::EmptyDataset)?;

        let coarse_intents: Vec<String> = coarse.into_iter().collect();
        let fine_labels: Vec<String> = fine.into_iter().collect();
        let slot_labels: Vec<String> = slots.into_iter().collect();

        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(cfg.seed);
        store.insert("embed", xavier(&mut rng, vocab.len(), cfg.hidden));
        store.insert("cls", xavier(&mut rng, 1, cfg.hidden));
        encoder.init(&mut store, &mut rng);
        slot_encoder.init(&mut store, &mut rng);
        linear_init_zeros(&mut store, "cgic", cfg.hidden, coarse_intents.len());
        linear_init_zeros(&mut store, "fgic", cfg.hidden, fine_labels.len());
        linear_init_zeros(&mut store, "fc", cfg.hidden, cfg.max_fertility);
        linear_init_zeros(&mut store, "sc", cfg.hidden, slot_labels.len());

        Ok(X2Parser {
            cfg,
            vocab,
            coarse_intents,
            fine_labels,
            slot_labels,
            encoder,
            slot_encoder,
            store,
            encoder_passes: Cell::new(0),
            slot_decoder_passes: Cell::new(0),
        })
    }

    pub fn reset_pass_counters(&self) {
        self.encoder_passes.set(0);
        self.slot_decoder_passes.set(0);
    }

    pub fn pass_counters(&self) -> (usize, usize) {
        (self.encoder_passes.get(), self.slot_decoder_passes.get())
    }

    fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.vocab.get(t).copied().unwrap_or(0)).collect()
    }

    /// One encoder pass: returns (summary state 1 x d, token states n x d).
    fn encode<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        tokens: &[String],
    ) -> (Var<'t>, Var<'t>) {
        self.encoder_passes.set(self.encoder_passes.get() + 1);
        let ids = self.token_ids(tokens);
        let embedded = embedding_lookup(binder, "embed", &ids);
        let cls = binder.get("cls");
        let with_cls = crate::nn::vstack(&[cls, embedded]);
        let hidden = self
            .encoder
            .forward(binder, tape, with_cls, &self.store)
            .expect("dimensions fixed at construction");
        let n = tokens.len();
        let summary = hidden.slice_rows(0, 1);
        let token_states = hidden.slice_rows(1, n + 1);
        (summary, token_states)
    }

    /// One slot-decoder pass over copied hidden states.
    fn decode_slots<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        hidden: Var<'t>,
        fertility: &FertilityVector,
    ) -> Var<'t> {
        self.slot_decoder_passes.set(self.slot_decoder_passes.get() + 1);
        let expanded = hidden.gather_rows(&copy_indices(fertility));
        let encoded = self
            .slot_encoder
            .forward(binder, tape, expanded, &self.store)
            .expect("dimensions fixed at construction");
        linear(binder, "sc", encoded)
    }

    fn label_index(pool: &[String], label: &str) -> usize {
        pool.iter().position(|l| l == label).unwrap_or(0)
    }

    /// Joint loss: cross-entropies of the coarse intent, fine intents,
    /// fertility, and (teacher-forced) flattened slots, summed with unit
    /// weights.
    pub fn loss<'t>(
        &self,
        binder: &Binder<'t, '_>,
        tape: &'t Tape,
        tokens: &[String],
        targets: &X2Targets,
    ) -> Var<'t> {
        let (summary, token_states) = self.encode(binder, tape, tokens);
        let coarse_logits = linear(binder, "cgic", summary);
        let fine_logits = linear(binder, "fgic", token_states);
        let fert_logits = linear(binder, "fc", token_states);
        let slot_logits = self.decode_slots(binder, tape, token_states, &targets.fertility);

        let coarse_gold =
            vec![Self::label_index(&self.coarse_intents, &targets.flat.coarse_intent)];
        let fine_gold: Vec<usize> = targets
            .flat
            .fine_intents
            .iter()
            .map(|l| Self::label_index(&self.fine_labels, l))
            .collect();
        let fert_gold: Vec<usize> = targets.fertility.0.iter().map(|f| f - 1).collect();
        let slot_gold: Vec<usize> = targets
            .flattened_slots
            .iter()
            .map(|l| Self::label_index(&self.slot_labels, l))
            .collect();

        cross_entropy_sum(coarse_logits, &coarse_gold)
            + cross_entropy_sum(fine_logits, &fine_gold)
            + cross_entropy_sum(fert_logits, &fert_gold)
            + cross_entropy_sum(slot_logits, &slot_gold)
    }

    /// Gold fertility per token from the encoder states.
    pub fn predict_fertility(&self, tokens: &[String]) -> FertilityVector {
        let tape = Tape::new();
        let binder = Binder::new(&tape, &self.store);
        let (_, token_states) = self.encode(&binder, &tape, tokens);
        let fert_logits = linear(&binder, "fc", token_states).value();
        FertilityVector(
            crate::nn::argmax_rows(&fert_logits).into_iter().map(|c| c + 1).collect(),
        )
    }

    /// Full non-autoregressive inference: exactly one encoder pass and one
    /// slot-decoder pass regardless of the output length.
    pub fn parse_utterance(&self, tokens: &[String]) -> Result<ParseOutcome, X2Error> {
        let tape = Tape::new();
        let binder = Binder::new(&tape, &self.store);
        let (summary, token_states) = self.encode(&binder, &tape, tokens);
        let coarse_logits = linear(&binder, "cgic", summary).value();
        let fine_logits = linear(&binder, "fgic", token_states).value();
        let fert_logits = linear(&binder, "fc", token_states).value();
        let fertility = FertilityVector(
            crate::nn::argmax_rows(&fert_logits)
                .into_iter()
                .map(|c| c + 1)
                .collect(),
        );
        let slot_logits = self.decode_slots(&binder, &tape, token_states, &fertility).value();

        let coarse =
            self.coarse_intents[crate::nn::argmax_rows(&coarse_logits)[0]].clone();
        let fine: Vec<String> = crate::nn::argmax_rows(&fine_logits)
            .into_iter()
            .map(|i| self.fine_labels[i].clone())
            .collect();
        let flattened: Vec<String> = crate::nn::argmax_rows(&slot_logits)
            .into_iter()
            .map(|i| self.slot_labels[i].clone())
            .collect();
        let stacks = regroup_stacks(&flattened, &fertility);
        let flat = FlatLabels { coarse_intent: coarse, fine_intents: fine, slot_stacks: stacks };
        let (tree, repairs) = decode_flat_with_repair(&flat, tokens)?;
        Ok(ParseOutcome {
            tree,
            flat,
            fertility,
            flattened_slots: flattened,
            repairs,
            encoder_passes: 1,
            slot_decoder_passes: 1,
        })
    }

    /// Trains on gold trees with seeded batching; returns the per-step
    /// loss trace.
    pub fn train(&mut self, train: &[ParseTree], steps: usize) -> Result<X2TrainReport, X2Error> {
        let targets: Vec<(Vec<String>, X2Targets)> = train
            .iter()
            .map(|tree| {
                let flat = encode_flat(tree, self.cfg.max_fertility)?;
                Ok((tree.tokens.clone(), X2Targets::from_flat(&flat, self.cfg.max_fertility)?))
            })
            .collect::<Result<_, X2Error>>()?;
        let mut rng = rng_from_seed(self.cfg.seed.wrapping_add(17));
        let mut optimizer = Adam::new(self.cfg.learning_rate);
        let mut report = X2TrainReport { steps: Vec::new(), final_loss: f64::NAN };
        let mut order: Vec<usize> = (0..targets.len()).collect();
        let mut cursor = 0usize;
        for _ in 0..steps {
            if cursor == 0 {
                order.shuffle(&mut rng);
            }
            let end = (cursor + self.cfg.batch_size).min(order.len());
            let batch = &order[cursor..end];
            cursor = if end == order.len() { 0 } else { end };

            let (loss_value, gmap) = {
                let tape = Tape::new();
                let binder = Binder::new(&tape, &self.store);
                let mut loss: Option<Var<'_>> = None;
                for &i in batch {
                    let (tokens, target) = &targets[i];
                    let term = self.loss(&binder, &tape, tokens, target);
                    loss = Some(match loss {
                        Some(acc) => acc + term,
                        None => term,
                    });
                }
                let loss = loss.expect("nonempty batch").scale(1.0 / batch.len() as f64);
                let grads = tape.backward(loss);
                (loss.value()[(0, 0)], binder.grad_map(&grads))
            };
            report.steps.push(loss_value);
            optimizer.step(&mut self.store, &gmap);
        }
        report.final_loss = report.steps.last().copied().unwrap_or(f64::NAN);
        Ok(report)
    }

    /// Fraction of utterances whose assembled flattened labels exactly
    /// match gold (which by the codec round-trip implies exact tree match).
    pub fn exact_match(&self, data: &[ParseTree]) -> Result<f64, X2Error> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for tree in data {
            let gold = encode_flat(tree, self.cfg.max_fertility)?;
            let outcome = self.parse_utterance(&tree.tokens)?;
            if crate::harness::metrics::flat_labels_match(&gold, &outcome.flat) {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }

    /// Predictions in the parse JSONL schema plus per-field correctness
    /// flags against gold.
    pub fn export_predictions(&self, data: &[ParseTree]) -> Result<Vec<PredictionRecord>, X2Error> {
        let eq = |a: &str, b: &str| a.eq_ignore_ascii_case(b);
        data.iter()
            .map(|tree| {
                let gold = encode_flat(tree, self.cfg.max_fertility)?;
                let outcome = self.parse_utterance(&tree.tokens)?;
                let pred = &outcome.flat;
                let coarse_correct = eq(&gold.coarse_intent, &pred.coarse_intent);
                let fine_correct = gold.fine_intents.len() == pred.fine_intents.len()
                    && gold
                        .fine_intents
                        .iter()
                        .zip(&pred.fine_intents)
                        .all(|(a, b)| eq(a, b));
                let slots_correct = gold.slot_stacks.len() == pred.slot_stacks.len()
                    && gold.slot_stacks.iter().zip(&pred.slot_stacks).all(|(a, b)| {
                        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| eq(x, y))
                    });
                Ok(PredictionRecord {
                    tokens: tree.tokens.clone(),
                    parse: crate::parse_repr::serialize(&outcome.tree),
                    coarse_correct,
                    fine_correct,
                    slots_correct,
                    exact_match: coarse_correct && fine_correct && slots_correct,
                    repairs: outcome.repairs,
                })
            })
            .collect()
    }
}

/// One exported prediction with its per-field correctness flags.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PredictionRecord {
    pub tokens: Vec<String>,
    pub parse: String,
    pub coarse_correct: bool,
    pub fine_correct: bool,
    pub slots_correct: bool,
    pub exact_match: bool,
    pub repairs: RepairCounts,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::TreeGrammar;

    fn toy_trees(n: usize, seed: u64) -> Vec<ParseTree> {
        let mut grammar = TreeGrammar::small();
        grammar.max_len = 8;
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| grammar.sample(&mut rng)).collect()
    }

    fn tiny_cfg() -> X2Config {
        X2Config {
            hidden: 32,
            encoder_layers: 1,
            encoder_heads: 2,
            batch_size: 8,
            ..X2Config::tiny()
        }
    }

    #[test]
    fn uniform_heads_start_at_ln_l() {
        // Zero-initialized classifier heads produce uniform distributions,
        // so the initial per-position loss is exactly ln(L) per head term.
        let trees = toy_trees(6, 1);
        let parser = X2Parser::new(tiny_cfg(), &trees).unwrap();
        let tree = &trees[0];
        let flat = encode_flat(tree, 3).unwrap();
        let targets = X2Targets::from_flat(&flat, 3).unwrap();
        let tape = Tape::new();
        let binder = Binder::new(&tape, &parser.store);
        let loss = parser.loss(&binder, &tape, &tree.tokens, &targets).value()[(0, 0)];
        let n = tree.tokens.len() as f64;
        let expected = (parser.coarse_intents.len() as f64).ln()
            + n * (parser.fine_labels.len() as f64).ln()
            + n * (parser.cfg.max_fertility as f64).ln()
            + targets.fertility.total() as f64 * (parser.slot_labels.len() as f64).ln();
        assert!((loss - expected).abs() < 1e-9, "{loss} vs {expected}");
    }

    #[test]
    fn single_pass_counters() {
        let trees = toy_trees(4, 2);
        let parser = X2Parser::new(tiny_cfg(), &trees).unwrap();
        parser.reset_pass_counters();
        let outcome = parser.parse_utterance(&trees[0].tokens).unwrap();
        assert_eq!(outcome.encoder_passes, 1);
        assert_eq!(outcome.slot_decoder_passes, 1);
        assert_eq!(parser.pass_counters(), (1, 1));
    }

    #[test]
    fn fertility_total_equals_flattened_length() {
        let trees = toy_trees(10, 3);
        let parser = X2Parser::new(tiny_cfg(), &trees).unwrap();
        for tree in &trees {
            let outcome = parser.parse_utterance(&tree.tokens).unwrap();
            assert_eq!(outcome.fertility.total(), outcome.flattened_slots.len());
            assert_eq!(outcome.fertility.0.len(), tree.tokens.len());
        }
    }

    #[test]
    fn inference_is_deterministic() {
        let trees = toy_trees(6, 4);
        let mut parser = X2Parser::new(tiny_cfg(), &trees).unwrap();
        parser.train(&trees, 20).unwrap();
        let a = parser.parse_utterance(&trees[0].tokens).unwrap();
        let b = parser.parse_utterance(&trees[0].tokens).unwrap();
        assert_eq!(a.flat, b.flat);
        assert_eq!(a.tree, b.tree);
    }

    #[test]
    fn loss_decreases_over_toy_training() {
        let trees = toy_trees(24, 5);
        let mut parser = X2Parser::new(tiny_cfg(), &trees).unwrap();
        let report = parser.train(&trees, 200).unwrap();
        let quarters: Vec<f64> = report
            .steps
            .chunks(50)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        for pair in quarters.windows(2) {
            assert!(pair[1] < pair[0], "smoothed loss not decreasing: {quarters:?}");
        }
    }
}
