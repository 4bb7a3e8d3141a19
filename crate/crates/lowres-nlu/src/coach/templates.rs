use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::augment::bio_spans;

/// The right template and the two wrong templates generated for one
/// utterance. Utterances without entities yield templates equal to the
/// utterance and are flagged for exclusion from the regularization loss.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub right: Vec<String>,
    pub wrong: [Vec<String>; 2],
    pub has_entities: bool,
}

/// Replaces each gold entity span with its slot-type token to form the
/// right template; wrong templates replace each span with a different
/// random slot type. Seeded and reproducible.
pub fn make_templates(
    tokens: &[String],
    labels: &[String],
    slot_inventory: &[String],
    rng: &mut ChaCha8Rng,
) -> TemplateSet {
    let spans = bio_spans(labels);
    if spans.is_empty() {
        return TemplateSet {
            right: tokens.to_vec(),
            wrong: [tokens.to_vec(), tokens.to_vec()],
            has_entities: false,
        };
    }
    let build = |replacement: &dyn Fn(&str, &mut ChaCha8Rng) -> String,
                 rng: &mut ChaCha8Rng|
     -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if let Some((_, e, ty)) = spans.iter().find(|(s, _, _)| *s == i) {
                out.push(replacement(ty, rng));
                i = e + 1;
            } else {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
        out
    };
    let right = build(&|ty, _| ty.to_string(), rng);
    let wrong_once = |rng: &mut ChaCha8Rng| {
        build(
            &|ty, rng| {
                let others: Vec<&String> =
                    slot_inventory.iter().filter(|t| t.as_str() != ty).collect();
                match others.choose(rng) {
                    Some(t) => (*t).clone(),
                    None => ty.to_string(),
                }
            },
            rng,
        )
    };
    let wrong = [wrong_once(rng), wrong_once(rng)];
    TemplateSet { right, wrong, has_entities: true }
}
