//! Seeded synthetic data: random valid parse trees for codec checks, a
//! small compositional grammar for parser overfit runs, a templated
//! tagging grammar, and multi-domain slot-filling worlds for transfer
//! experiments.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::parse_repr::{Node, ParseTree, Span};

/// Generator of random valid (and losslessly flattenable) parse trees.
pub struct TreeGrammar {
    pub vocab: Vec<String>,
    pub intent_types: Vec<String>,
    pub slot_types: Vec<String>,
    /// Maximum slot-stack depth per token.
    pub max_fertility: usize,
    /// Maximum node depth below the root.
    pub max_depth: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// When set, tokens are drawn from a sub-vocabulary keyed by the
    /// innermost covering node type (with distinct begin/inside words), so
    /// surface forms predict structure and the grammar is learnable rather
    /// than pure noise.
    pub lexicalized: bool,
    /// Probability of opening a slot child at each position.
    pub slot_prob: f64,
    /// Probability of opening a nested-intent child at each position.
    pub intent_prob: f64,
}

impl TreeGrammar {
    pub fn small() -> Self {
        TreeGrammar {
            vocab: (0..50).map(|i| format!("w{i}")).collect(),
            intent_types: (0..4).map(|i| format!("INTENT_{i}")).collect(),
            slot_types: (0..8).map(|i| format!("SLOT_{i}")).collect(),
            max_fertility: 3,
            max_depth: 4,
            min_len: 1,
            max_len: 12,
            lexicalized: false,
            slot_prob: 0.35,
            intent_prob: 0.15,
        }
    }

    /// The learnable variant used for training runs.
    pub fn learnable() -> Self {
        TreeGrammar {
            lexicalized: true,
            min_len: 3,
            max_len: 10,
            slot_prob: 0.3,
            intent_prob: 0.1,
            ..Self::small()
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> ParseTree {
        let n = rng.gen_range(self.min_len..=self.max_len);
        let mut tokens: Vec<String> =
            (0..n).map(|_| self.vocab.choose(rng).expect("vocab nonempty").clone()).collect();
        let mut used_starts = std::collections::BTreeSet::new();
        let span = Span::new(1, n);
        let children = self.fill_intent(rng, span, true, 0, 0, 1, &mut used_starts);
        let root = Node::intent(self.pick(&self.intent_types, rng), span, children);
        let tree = ParseTree { tokens: tokens.clone(), root };
        if !self.lexicalized {
            return tree;
        }
        // Re-draw each token from the sub-vocabulary of its innermost
        // covering node, with distinct words for the first position of a
        // span, so boundaries and types are lexically marked.
        for t in 1..=n {
            let (owner, is_root_owner) = innermost_covering(&tree.root, t);
            // Root-owned tokens draw from the root intent's bucket so the
            // coarse intent is lexically grounded too.
            let kind = if owner.kind == crate::parse_repr::NodeKind::Slot {
                "slot"
            } else {
                "intent"
            };
            let bucket = self.type_bucket((kind, owner.label.as_str()));
            let split = (bucket.len() / 2).max(1);
            let pool = if !is_root_owner && t == owner.span.start {
                &bucket[..split]
            } else if bucket.len() > split {
                &bucket[split..]
            } else {
                bucket
            };
            tokens[t - 1] = pool[rng.gen_range(0..pool.len())].clone();
        }
        ParseTree { tokens, root: tree.root }
    }

    /// Deterministic slice of the vocabulary for a node type. Buckets of
    /// different types overlap only at the margins.
    fn type_bucket(&self, owner: (&str, &str)) -> &[String] {
        let n_slots = self.slot_types.len().max(1);
        let n_intents = self.intent_types.len().max(1);
        let sections = n_slots + n_intents + 1;
        let width = (self.vocab.len() / sections).max(1);
        let section = match owner.0 {
            "slot" => self.slot_types.iter().position(|t| t == owner.1).unwrap_or(0),
            _ => {
                n_slots + self.intent_types.iter().position(|t| t == owner.1).unwrap_or(0)
            }
        };
        let start = (section * width).min(self.vocab.len() - width);
        &self.vocab[start..start + width]
    }

    fn pick(&self, pool: &[String], rng: &mut ChaCha8Rng) -> String {
        pool.choose(rng).expect("type pool nonempty").clone()
    }

    /// Children of an intent node. `child_intent_depth` is the number of
    /// non-root intent ancestors a child intent would have; the codec can
    /// only represent depths 0 and 1.
    #[allow(clippy::too_many_arguments)]
    fn fill_intent(
        &self,
        rng: &mut ChaCha8Rng,
        span: Span,
        is_root: bool,
        child_intent_depth: usize,
        slots_used: usize,
        node_depth: usize,
        used_starts: &mut std::collections::BTreeSet<usize>,
    ) -> Vec<Node> {
        let mut children = Vec::new();
        if node_depth > self.max_depth {
            return children;
        }
        let mut pos = span.start;
        while pos <= span.end {
            let remaining = span.end - pos + 1;
            let can_slot = slots_used < self.max_fertility;
            let can_nest = child_intent_depth <= 1 && !used_starts.contains(&pos);
            let roll: f64 = rng.gen();
            if can_slot && roll < self.slot_prob {
                let mut len = rng.gen_range(1..=remaining.min(4));
                // A slot child equal to a non-root intent parent's span is
                // non-canonical; shrink it.
                if !is_root && pos == span.start && len == span.len() {
                    if len == 1 {
                        pos += 1;
                        continue;
                    }
                    len -= 1;
                }
                let child_span = Span::new(pos, pos + len - 1);
                let grand = self.fill_slot(
                    rng,
                    child_span,
                    child_intent_depth,
                    slots_used + 1,
                    node_depth + 1,
                    used_starts,
                );
                children.push(Node::slot(self.pick(&self.slot_types, rng), child_span, grand));
                pos += len;
            } else if can_nest && roll < self.slot_prob + self.intent_prob {
                let len = rng.gen_range(1..=remaining.min(4));
                let child_span = Span::new(pos, pos + len - 1);
                used_starts.insert(pos);
                let grand = self.fill_intent(
                    rng,
                    child_span,
                    false,
                    child_intent_depth + 1,
                    slots_used,
                    node_depth + 1,
                    used_starts,
                );
                children.push(Node::intent(self.pick(&self.intent_types, rng), child_span, grand));
                pos += len;
            } else {
                pos += 1;
            }
        }
        children
    }

    /// Children of a slot node: intents only.
    fn fill_slot(
        &self,
        rng: &mut ChaCha8Rng,
        span: Span,
        child_intent_depth: usize,
        slots_used: usize,
        node_depth: usize,
        used_starts: &mut std::collections::BTreeSet<usize>,
    ) -> Vec<Node> {
        let mut children = Vec::new();
        if node_depth > self.max_depth || child_intent_depth > 1 {
            return children;
        }
        let mut pos = span.start;
        while pos <= span.end {
            let remaining = span.end - pos + 1;
            let fresh_start = !used_starts.contains(&pos);
            let roll: f64 = rng.gen();
            if fresh_start && roll < (self.intent_prob * 2.0).max(0.25) {
                let len = rng.gen_range(1..=remaining.min(4));
                let child_span = Span::new(pos, pos + len - 1);
                used_starts.insert(pos);
                let grand = self.fill_intent(
                    rng,
                    child_span,
                    false,
                    child_intent_depth + 1,
                    slots_used,
                    node_depth + 1,
                    used_starts,
                );
                children.push(Node::intent(self.pick(&self.intent_types, rng), child_span, grand));
                pos += len;
            } else {
                pos += 1;
            }
        }
        children
    }
}

/// The innermost node covering a 1-based token position, plus whether it
/// is the root itself.
fn innermost_covering(root: &Node, token: usize) -> (&Node, bool) {
    let mut node = root;
    let mut is_root = true;
    'descend: loop {
        for child in &node.children {
            if child.span.contains_token(token) {
                node = child;
                is_root = false;
                continue 'descend;
            }
        }
        return (node, is_root);
    }
}

/// Templated BIO tagging data: each sentence interleaves carrier words and
/// typed entities whose surface words are type-indicative.
pub struct TaggingGrammar {
    pub entity_types: Vec<String>,
    pub entity_words: Vec<Vec<String>>,
    pub carrier_words: Vec<String>,
    pub min_len: usize,
    pub max_len: usize,
    /// Entities sit in the final third of the sentence, handing
    /// order-sensitive encoders a positional shortcut that word-order
    /// shuffling later invalidates.
    pub templatic: bool,
    /// With `templatic`, entity begin-words also occur as carriers, so
    /// only the local begin+inside bigram identifies an entity.
    pub ambiguous_begin: bool,
}

impl TaggingGrammar {
    pub fn small(n_types: usize) -> Self {
        TaggingGrammar {
            entity_types: (0..n_types).map(|i| format!("TYPE{i}")).collect(),
            entity_words: (0..n_types)
                .map(|i| (0..5).map(|j| format!("e{i}_{j}")).collect())
                .collect(),
            carrier_words: (0..20).map(|i| format!("c{i}")).collect(),
            min_len: 4,
            max_len: 9,
            templatic: false,
            ambiguous_begin: false,
        }
    }

    /// Word-order study variant: positionally regular with ambiguous
    /// begin-words.
    pub fn templatic(n_types: usize) -> Self {
        TaggingGrammar {
            templatic: true,
            ambiguous_begin: true,
            min_len: 8,
            max_len: 10,
            ..Self::small(n_types)
        }
    }

    fn carrier<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a String {
        if self.ambiguous_begin && rng.gen_bool(0.3) {
            // Begin-words moonlighting as plain carriers.
            let ty = rng.gen_range(0..self.entity_words.len());
            &self.entity_words[ty][rng.gen_range(0..2)]
        } else {
            self.carrier_words.choose(rng).expect("carriers")
        }
    }

    /// One sentence: (tokens, BIO labels).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<String>) {
        let n = rng.gen_range(self.min_len..=self.max_len);
        if self.templatic {
            let mut tokens: Vec<String> = Vec::with_capacity(n);
            let mut labels = vec!["O".to_string(); n];
            for _ in 0..n {
                tokens.push(self.carrier(rng).clone());
            }
            // One two-token entity in the final third.
            let start = rng.gen_range((2 * n) / 3..=n - 2);
            let ty = rng.gen_range(0..self.entity_types.len());
            tokens[start] = self.entity_words[ty][rng.gen_range(0..2)].clone();
            tokens[start + 1] = self.entity_words[ty][rng.gen_range(2..5)].clone();
            labels[start] = format!("B-{}", self.entity_types[ty]);
            labels[start + 1] = format!("I-{}", self.entity_types[ty]);
            return (tokens, labels);
        }
        let mut tokens = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            if rng.gen_bool(0.35) && n - i >= 1 {
                let ty = rng.gen_range(0..self.entity_types.len());
                let len = rng.gen_range(1..=2.min(n - i));
                for k in 0..len {
                    tokens.push(self.entity_words[ty].choose(rng).expect("words").clone());
                    labels.push(format!(
                        "{}-{}",
                        if k == 0 { "B" } else { "I" },
                        self.entity_types[ty]
                    ));
                }
                i += len;
            } else {
                tokens.push(self.carrier_words.choose(rng).expect("carriers").clone());
                labels.push("O".to_string());
                i += 1;
            }
        }
        (tokens, labels)
    }
}

/// A multi-domain slot-filling world for coarse-to-fine transfer tests.
/// Each slot type has a private entity vocabulary, and its description is
/// made of words drawn from that same vocabulary, so an unseen type's
/// description only uses words seen as entity content somewhere.
pub struct CoachWorld {
    pub slot_types: Vec<String>,
    pub descriptions: Vec<Vec<String>>,
    pub entity_words: Vec<Vec<String>>,
    pub carrier_words: Vec<String>,
    /// A type composed from two base types: (type index, source a, source b).
    mixed: Option<(usize, usize, usize)>,
}

impl CoachWorld {
    pub fn new(n_types: usize) -> Self {
        let slot_types: Vec<String> = (0..n_types).map(|i| format!("TYPE{i}")).collect();
        let entity_words: Vec<Vec<String>> =
            (0..n_types).map(|i| (0..4).map(|j| format!("n{i}_{j}")).collect()).collect();
        // Descriptions reuse each type's own entity words.
        let descriptions: Vec<Vec<String>> =
            entity_words.iter().map(|ws| vec![ws[0].clone(), ws[1].clone()]).collect();
        CoachWorld {
            slot_types,
            descriptions,
            entity_words,
            carrier_words: (0..12).map(|i| format!("c{i}")).collect(),
            mixed: None,
        }
    }

    /// Appends a type whose entities pair one word from type `a` with one
    /// word from type `b`, and whose description combines the two source
    /// descriptions. Every word involved already occurs in the base
    /// domains, so the new type is reachable zero-shot.
    pub fn add_mixed_type(&mut self, a: usize, b: usize) -> usize {
        let idx = self.slot_types.len();
        self.slot_types.push(format!("TYPE{idx}"));
        let mut words = self.entity_words[a][2..].to_vec();
        words.extend(self.entity_words[b][2..].to_vec());
        self.entity_words.push(words);
        let mut desc = self.descriptions[a].clone();
        desc.extend(self.descriptions[b].clone());
        self.descriptions.push(desc);
        self.mixed = Some((idx, a, b));
        idx
    }

    /// Samples one utterance mentioning entities only from `domain_types`
    /// (indices into `slot_types`).
    pub fn sample(
        &self,
        domain_types: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> (Vec<String>, Vec<String>) {
        let n_entities = rng.gen_range(1..=2);
        let mut tokens = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_entities {
            for _ in 0..rng.gen_range(1..=2) {
                tokens.push(self.carrier_words.choose(rng).expect("carriers").clone());
                labels.push("O".to_string());
            }
            let ty = *domain_types.choose(rng).expect("domain types nonempty");
            let bio = |k: usize| format!("{}-{}", if k == 0 { "B" } else { "I" }, self.slot_types[ty]);
            match self.mixed {
                Some((m, _, _)) if m == ty => {
                    // Mixed entities are two tokens: one from each source
                    // half of the vocabulary.
                    let words = &self.entity_words[ty];
                    let half = words.len() / 2;
                    tokens.push(words[rng.gen_range(0..half)].clone());
                    labels.push(bio(0));
                    tokens.push(words[rng.gen_range(half..words.len())].clone());
                    labels.push(bio(1));
                }
                _ => {
                    let len = rng.gen_range(1..=2);
                    for k in 0..len {
                        tokens.push(self.entity_words[ty].choose(rng).expect("words").clone());
                        labels.push(bio(k));
                    }
                }
            }
        }
        tokens.push(self.carrier_words[0].clone());
        labels.push("O".to_string());
        (tokens, labels)
    }

    /// Description file lines in the `TYPE<TAB>description words` format.
    pub fn description_lines(&self, types: &[usize]) -> String {
        let mut out = String::new();
        for &t in types {
            out.push_str(&format!("{}\t{}\n", self.slot_types[t], self.descriptions[t].join(" ")));
        }
        out
    }
}

/// Deterministic RNG used across the toolkit.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_repr::{validate_tree, NodeKind, DEFAULT_MAX_FERTILITY};

    #[test]
    fn sampled_trees_are_valid() {
        let grammar = TreeGrammar::small();
        let mut rng = rng_from_seed(11);
        for _ in 0..500 {
            let tree = grammar.sample(&mut rng);
            let diags = validate_tree(&tree, DEFAULT_MAX_FERTILITY);
            assert!(diags.is_empty(), "{diags:?}\n{tree:?}");
        }
    }

    #[test]
    fn deep_grammar_reaches_full_fertility() {
        let mut grammar = TreeGrammar::small();
        grammar.max_depth = 6;
        grammar.min_len = 6;
        let mut rng = rng_from_seed(5);
        let mut max_stack = 0;
        for _ in 0..2000 {
            let tree = grammar.sample(&mut rng);
            let mut depth = vec![0usize; tree.len()];
            for node in tree.nodes() {
                if node.kind == NodeKind::Slot {
                    for t in node.span.start..=node.span.end {
                        depth[t - 1] += 1;
                    }
                }
            }
            max_stack = max_stack.max(depth.into_iter().max().unwrap_or(0));
        }
        assert_eq!(max_stack, 3, "generator never exercised fertility 3");
    }

    #[test]
    fn tagging_grammar_emits_legal_bio() {
        let grammar = TaggingGrammar::small(4);
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let (tokens, labels) = grammar.sample(&mut rng);
            assert_eq!(tokens.len(), labels.len());
            let mut prev = "O".to_string();
            for l in &labels {
                if let Some(ty) = l.strip_prefix("I-") {
                    assert!(prev.ends_with(ty), "orphan {l} after {prev}");
                }
                prev = l.clone();
            }
        }
    }
}
