use rand::seq::SliceRandom;

use crate::harness::synth::rng_from_seed;

use super::AugmentError;

/// Which slice of a domain corpus to keep for continued pretraining.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusLevel {
    /// Everything collected for the domain.
    Domain,
    /// Sentences with at least `min_entities` hits from the entity list.
    Entity,
    /// Sentences containing at least one domain-specialized entity.
    Task,
}

impl CorpusLevel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "domain" => Some(CorpusLevel::Domain),
            "entity" => Some(CorpusLevel::Entity),
            "task" => Some(CorpusLevel::Task),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub level: CorpusLevel,
    /// Entity surface forms, one or more tokens each.
    pub entities: Vec<String>,
    pub min_entities: usize,
    /// Multiplier applied to the task corpus when integrating.
    pub upsample_factor: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            level: CorpusLevel::Domain,
            entities: vec![],
            min_entities: 2,
            upsample_factor: 2,
        }
    }
}

/// Counts how often any listed entity occurs in the sentence, matching
/// multi-token surface forms against consecutive tokens.
fn entity_hits(sentence: &str, entities: &[Vec<String>]) -> usize {
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    let mut hits = 0;
    for entity in entities {
        if entity.is_empty() {
            continue;
        }
        for start in 0..tokens.len() {
            if start + entity.len() <= tokens.len()
                && entity.iter().zip(&tokens[start..]).all(|(e, t)| e == t)
            {
                hits += 1;
            }
        }
    }
    hits
}

/// Keeps the sentences the requested corpus level retains. Domain level is
/// the identity; entity and task levels filter on entity-list hits.
pub fn select_corpus(sentences: &[String], spec: &CorpusSpec) -> Result<Vec<String>, AugmentError> {
    match spec.level {
        CorpusLevel::Domain => Ok(sentences.to_vec()),
        CorpusLevel::Entity | CorpusLevel::Task => {
            if spec.entities.is_empty() {
                let level = if spec.level == CorpusLevel::Entity { "entity" } else { "task" };
                return Err(AugmentError::MissingEntityList(level.to_string()));
            }
            let needed = match spec.level {
                CorpusLevel::Entity => spec.min_entities.max(1),
                _ => 1,
            };
            let tokenized: Vec<Vec<String>> = spec
                .entities
                .iter()
                .map(|e| e.split_whitespace().map(|t| t.to_string()).collect())
                .collect();
            Ok(sentences
                .iter()
                .filter(|s| entity_hits(s, &tokenized) >= needed)
                .cloned()
                .collect())
        }
    }
}

/// Entity corpus plus the task corpus repeated `factor` times, shuffled
/// deterministically.
pub fn integrate_corpora(
    entity_corpus: &[String],
    task_corpus: &[String],
    factor: usize,
    seed: u64,
) -> Vec<String> {
    assert!(factor >= 1, "upsample factor must be >= 1");
    let mut out = entity_corpus.to_vec();
    for _ in 0..factor {
        out.extend(task_corpus.iter().cloned());
    }
    let mut rng = rng_from_seed(seed);
    out.shuffle(&mut rng);
    out
}
