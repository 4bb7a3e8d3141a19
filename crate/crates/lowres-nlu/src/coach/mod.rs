//! Coarse-to-fine cross-domain slot filling. Step one tags every token
//! with a domain-agnostic 3-way B/I/O label through a CRF; step two types
//! each detected entity span by matching its representation against slot
//! description embeddings, so unseen slot types are reachable through
//! their descriptions. Template regularization pulls utterance
//! representations toward their correct label template and pushes them
//! from corrupted ones.

mod model;
mod templates;

pub use model::{CoachConfig, CoachModel, CoachTrainReport, EntityEncoderKind};
pub use templates::{make_templates, TemplateSet};

use ndarray::Array2;
#[cfg(test)]
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nn::{mse, Binder, ParamStore, Tape, Var};

#[derive(Debug, Error)]
pub enum CoachError {
    #[error("description file line {0} is not `TYPE<TAB>description words`")]
    BadDescriptionLine(usize),
    #[error("slot inventory is empty")]
    EmptySlotInventory,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample has {tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
}

/// An entity span detected by the coarse tagger (0-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
}

/// Per-slot-type description representations: one row per type, each the
/// sum of the description-token embeddings. Rebuilt deterministically from
/// description text and the embedding table, so a target-domain inventory
/// can be swapped in at adaptation time.
#[derive(Debug, Clone)]
pub struct DescriptionMatrix {
    pub types: Vec<String>,
    /// Token lists of each description, aligned with `types`.
    pub descriptions: Vec<Vec<String>>,
}

impl DescriptionMatrix {
    /// Parses the `TYPE<TAB>description words` file format.
    pub fn parse(text: &str) -> Result<Self, CoachError> {
        let mut types = Vec::new();
        let mut descriptions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let (Some(ty), Some(desc)) = (parts.next(), parts.next()) else {
                return Err(CoachError::BadDescriptionLine(lineno + 1));
            };
            types.push(ty.trim().to_string());
            descriptions
                .push(desc.split_whitespace().map(|w| w.to_string()).collect::<Vec<_>>());
        }
        if types.is_empty() {
            return Err(CoachError::EmptySlotInventory);
        }
        Ok(DescriptionMatrix { types, descriptions })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Builds the n_s x d_s matrix on a tape by summing description-token
    /// embedding rows; gradients flow into the embedding table.
    pub fn rows<'t>(
        &self,
        binder: &Binder<'t, '_>,
        vocab: &std::collections::BTreeMap<String, usize>,
        embed_name: &str,
    ) -> Var<'t> {
        let table = binder.get(embed_name);
        let mut rows = Vec::with_capacity(self.types.len());
        for desc in &self.descriptions {
            let ids: Vec<usize> =
                desc.iter().map(|w| vocab.get(w).copied().unwrap_or(0)).collect();
            rows.push(table.gather_rows(&ids).sum_cols());
        }
        crate::nn::vstack(&rows)
    }

    /// Plain-value variant of [`DescriptionMatrix::rows`].
    pub fn matrix(
        &self,
        store: &ParamStore,
        vocab: &std::collections::BTreeMap<String, usize>,
        embed_name: &str,
    ) -> Array2<f64> {
        let tape = Tape::new();
        let binder = Binder::new(&tape, store);
        self.rows(&binder, vocab, embed_name).value()
    }
}

/// Extracts maximal B/I runs from a 3-way coarse label sequence
/// (0 = O, 1 = B, 2 = I). An orphan I opens a new span.
pub fn coarse_spans(labels: &[usize]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &l) in labels.iter().enumerate() {
        match l {
            1 => {
                if let Some(s) = open.take() {
                    spans.push(EntitySpan { start: s, end: i - 1 });
                }
                open = Some(i);
            }
            2 => {
                if open.is_none() {
                    open = Some(i);
                }
            }
            _ => {
                if let Some(s) = open.take() {
                    spans.push(EntitySpan { start: s, end: i - 1 });
                }
            }
        }
    }
    if let Some(s) = open {
        spans.push(EntitySpan { start: s, end: labels.len() - 1 });
    }
    spans
}

/// Template-regularization losses: `L_r = MSE(R_u, R_r)` and
/// `L_w = -beta * sum MSE(R_u, R_w)`. During the warm-up epochs the
/// utterance representation is detached so only the template encoder
/// learns from these losses.
pub fn template_losses<'t>(
    r_utterance: Var<'t>,
    r_right: Var<'t>,
    r_wrong: &[Var<'t>],
    beta: f64,
    template_encoder_only: bool,
) -> (Var<'t>, Var<'t>) {
    let u = if template_encoder_only { r_utterance.detach() } else { r_utterance };
    let l_r = mse(u, r_right);
    let mut l_w: Option<Var<'t>> = None;
    for &w in r_wrong {
        let term = mse(u, w);
        l_w = Some(match l_w {
            Some(acc) => acc + term,
            None => term,
        });
    }
    let l_w = l_w.map(|v| v.scale(-beta)).unwrap_or_else(|| l_r.scale(0.0));
    (l_r, l_w)
}

/// Seeded RNG helper shared with the tests.
#[cfg(test)]
pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    crate::harness::synth::rng_from_seed(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tape;
    use ndarray::array;

    #[test]
    fn description_file_parses() {
        let m = DescriptionMatrix::parse("PLAYLIST\tplaylist name\nARTIST\tmusic artist\n")
            .unwrap();
        assert_eq!(m.types, vec!["PLAYLIST", "ARTIST"]);
        assert_eq!(m.descriptions[1], vec!["music", "artist"]);
        assert!(matches!(
            DescriptionMatrix::parse("NO_TAB_HERE\n"),
            Err(CoachError::BadDescriptionLine(1))
        ));
    }

    #[test]
    fn one_token_description_is_that_embedding() {
        let mut store = ParamStore::new();
        store.insert("embed", array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let vocab: std::collections::BTreeMap<String, usize> =
            [("<unk>".to_string(), 0), ("apple".to_string(), 1), ("pie".to_string(), 2)]
                .into_iter()
                .collect();
        let m = DescriptionMatrix::parse("FRUIT\tapple\nFOOD\tapple pie\n").unwrap();
        let rows = m.matrix(&store, &vocab, "embed");
        assert_eq!(rows.row(0).to_vec(), vec![3.0, 4.0]);
        assert_eq!(rows.row(1).to_vec(), vec![8.0, 10.0]);
    }

    #[test]
    fn coarse_span_extraction() {
        // O B I O B, with an orphan I treated as a new span.
        assert_eq!(
            coarse_spans(&[0, 1, 2, 0, 1]),
            vec![EntitySpan { start: 1, end: 2 }, EntitySpan { start: 4, end: 4 }]
        );
        assert_eq!(coarse_spans(&[2, 0]), vec![EntitySpan { start: 0, end: 0 }]);
        assert!(coarse_spans(&[0, 0, 0]).is_empty());
    }

    #[test]
    fn template_loss_trivial_values() {
        let tape = Tape::new();
        let u = tape.input(array![[1.0, 0.0]]);
        let w = tape.input(array![[0.0, 1.0]]);
        // R_u = R_r gives L_r = 0.
        let (l_r, _) = template_losses(u, u, &[w], 1.0, false);
        assert_eq!(l_r.value()[(0, 0)], 0.0);
        // Orthogonal unit vectors in d=2: L_w = -mean((1,-1)^2) = -1.
        let (_, l_w) = template_losses(u, u, &[w], 1.0, false);
        assert_eq!(l_w.value()[(0, 0)], -1.0);
    }

    #[test]
    fn template_loss_gradients_match_finite_differences() {
        use crate::nn::{central_difference_grad, relative_error};
        let mut r = rng(1);
        let u0 = crate::nn::xavier(&mut r, 1, 4);
        let r0 = crate::nn::xavier(&mut r, 1, 4);
        let w0 = crate::nn::xavier(&mut r, 1, 4);
        let run = |u0: &Array2<f64>| {
            let tape = Tape::new();
            let u = tape.input(u0.clone());
            let right = tape.input(r0.clone());
            let wrong = tape.input(w0.clone());
            let (l_r, l_w) = template_losses(u, right, &[wrong], 1.0, false);
            let loss = l_r + l_w;
            let grads = tape.backward(loss);
            (loss.value()[(0, 0)], grads.wrt(u))
        };
        let (_, gu) = run(&u0);
        let nu = central_difference_grad(&|m| run(m).0, &u0, 1e-6);
        assert!(relative_error(&gu, &nu) < 1e-4);
    }

    #[test]
    fn warm_up_detaches_the_utterance() {
        let tape = Tape::new();
        let u = tape.input(array![[1.0, 2.0]]);
        let right = tape.input(array![[0.0, 0.0]]);
        let (l_r, _) = template_losses(u, right, &[], 1.0, true);
        let grads = tape.backward(l_r);
        assert!(grads.wrt(u).iter().all(|v| *v == 0.0));
        assert!(grads.wrt(right).iter().any(|v| *v != 0.0));
    }
}
