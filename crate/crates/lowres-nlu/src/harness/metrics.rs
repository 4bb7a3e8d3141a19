use serde::{Deserialize, Serialize};

use crate::augment::bio_spans;
use crate::parse_repr::{encode_flat, FlatLabels, ParseTree, RepairCounts};

use super::HarnessError;

/// Span-level precision/recall/F1, reported x100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_spans: usize,
    pub predicted_spans: usize,
    pub matched_spans: usize,
}

/// Exact-boundary, exact-type span F1 over aligned label sequences.
/// Zero-division cases are fixed to 0.
pub fn bio_f1(
    gold: &[Vec<String>],
    pred: &[Vec<String>],
) -> Result<PrecisionRecallF1, HarnessError> {
    if gold.len() != pred.len() {
        return Err(HarnessError::Misaligned {
            gold: gold.len(),
            pred: pred.len(),
            what: "sentences",
        });
    }
    let mut matched = 0usize;
    let mut n_gold = 0usize;
    let mut n_pred = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != p.len() {
            return Err(HarnessError::Misaligned { gold: g.len(), pred: p.len(), what: "tokens" });
        }
        let gs = bio_spans(g);
        let ps = bio_spans(p);
        n_gold += gs.len();
        n_pred += ps.len();
        for span in &ps {
            if gs.contains(span) {
                matched += 1;
            }
        }
    }
    let precision = if n_pred == 0 { 0.0 } else { matched as f64 / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { matched as f64 / n_gold as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PrecisionRecallF1 {
        precision: precision * 100.0,
        recall: recall * 100.0,
        f1: f1 * 100.0,
        gold_spans: n_gold,
        predicted_spans: n_pred,
        matched_spans: matched,
    })
}

/// Label-type comparison is case-insensitive; the canonical forms are
/// upper-case, but model exports may differ.
fn labels_eq(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b)
}

/// Exact match of flattened labels: coarse intent, the fine-intent
/// sequence, and every slot stack must all agree.
pub fn flat_labels_match(gold: &FlatLabels, pred: &FlatLabels) -> bool {
    labels_eq(&gold.coarse_intent, &pred.coarse_intent)
        && gold.fine_intents.len() == pred.fine_intents.len()
        && gold
            .fine_intents
            .iter()
            .zip(&pred.fine_intents)
            .all(|(a, b)| labels_eq(a, b))
        && gold.slot_stacks.len() == pred.slot_stacks.len()
        && gold.slot_stacks.iter().zip(&pred.slot_stacks).all(|(a, b)| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| labels_eq(x, y))
        })
}

/// Tree-level exact match through the flattening.
pub fn exact_match_trees(gold: &ParseTree, pred: &ParseTree) -> Result<bool, HarnessError> {
    let g = encode_flat(gold, usize::MAX).map_err(HarnessError::Codec)?;
    let p = encode_flat(pred, usize::MAX).map_err(HarnessError::Codec)?;
    Ok(flat_labels_match(&g, &p))
}

/// Corpus-level exact-match accuracy (x100).
pub fn exact_match_accuracy(pairs: &[(FlatLabels, FlatLabels)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs.iter().filter(|(g, p)| flat_labels_match(g, p)).count();
    hits as f64 * 100.0 / pairs.len() as f64
}

/// Splits indices into (nested, non-nested): an utterance is non-nested
/// iff it has no fine-grained intents and every slot stack has depth <= 1.
pub fn nested_split(parses: &[FlatLabels]) -> (Vec<usize>, Vec<usize>) {
    let mut nested = Vec::new();
    let mut non_nested = Vec::new();
    for (i, flat) in parses.iter().enumerate() {
        if flat.is_non_nested() {
            non_nested.push(i);
        } else {
            nested.push(i);
        }
    }
    (nested, non_nested)
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct NestedBreakdown {
    pub nested_count: usize,
    pub non_nested_count: usize,
    pub nested_exact_match: f64,
    pub non_nested_exact_match: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct LatencyRow {
    pub bucket: usize,
    pub tokens: usize,
    pub flattened_len: usize,
    pub median_micros: f64,
    pub encoder_passes: usize,
    pub slot_decoder_passes: usize,
}

/// The full evaluation report. All rates are percentages in [0, 100].
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bio: Option<PrecisionRecallF1>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nested: Option<NestedBreakdown>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub latency: Vec<LatencyRow>,
    pub repair_counts: RepairCounts,
    pub samples: usize,
}

impl EvalReport {
    /// Plain-text table rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("samples              {}\n", self.samples));
        if let Some(em) = self.exact_match {
            out.push_str(&format!("exact match          {em:.2}\n"));
        }
        if let Some(bio) = &self.bio {
            out.push_str(&format!(
                "bio P/R/F1           {:.2} / {:.2} / {:.2}\n",
                bio.precision, bio.recall, bio.f1
            ));
        }
        if let Some(nested) = &self.nested {
            out.push_str(&format!(
                "nested EM            {:.2} ({} samples)\n",
                nested.nested_exact_match, nested.nested_count
            ));
            out.push_str(&format!(
                "non-nested EM        {:.2} ({} samples)\n",
                nested.non_nested_exact_match, nested.non_nested_count
            ));
        }
        if !self.latency.is_empty() {
            out.push_str("latency (bucket -> median us, enc passes, slot passes, flat len)\n");
            for row in &self.latency {
                out.push_str(&format!(
                    "  {:>4} -> {:>10.1} {} {} {}\n",
                    row.bucket,
                    row.median_micros,
                    row.encoder_passes,
                    row.slot_decoder_passes,
                    row.flattened_len
                ));
            }
        }
        out.push_str(&format!(
            "repairs              orphanI={} nested={} clipped={} dropped={}\n",
            self.repair_counts.orphan_i_to_b,
            self.repair_counts.nested_without_outer,
            self.repair_counts.clipped,
            self.repair_counts.dropped
        ));
        out
    }
}
