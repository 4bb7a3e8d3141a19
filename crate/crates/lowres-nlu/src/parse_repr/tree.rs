use serde::{Deserialize, Serialize};

/// Inclusive 1-based token range; the root of an n-token parse spans `[1, n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start >= 1 && start <= end, "span must satisfy 1 <= start <= end");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_token(&self, token: usize) -> bool {
        self.start <= token && token <= self.end
    }

    pub fn overlaps(&self, other: Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Intent,
    Slot,
}

/// One intent or slot node. Intent children may be slots or nested intents;
/// slot children are always intents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub label: String,
    pub span: Span,
    pub children: Vec<Node>,
}

impl Node {
    pub fn intent(label: impl Into<String>, span: Span, children: Vec<Node>) -> Self {
        Node { kind: NodeKind::Intent, label: label.into(), span, children }
    }

    pub fn slot(label: impl Into<String>, span: Span, children: Vec<Node>) -> Self {
        Node { kind: NodeKind::Slot, label: label.into(), span, children }
    }

    pub fn is_intent(&self) -> bool {
        self.kind == NodeKind::Intent
    }

    /// Depth-first walk over the node and its descendants.
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a Node>) {
        out.push(self);
        for child in &self.children {
            child.walk(out);
        }
    }
}

/// A hierarchical compositional parse over a token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTree {
    pub tokens: Vec<String>,
    pub root: Node,
}

impl ParseTree {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn nodes(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }
}

/// The decomposed training targets: one coarse intent, one BIO fine-intent
/// label per token, and one ordered slot-label stack per token (outermost
/// label first, the most fine-grained label last).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatLabels {
    pub coarse_intent: String,
    pub fine_intents: Vec<String>,
    pub slot_stacks: Vec<Vec<String>>,
}

impl FlatLabels {
    pub fn len(&self) -> usize {
        self.fine_intents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine_intents.is_empty()
    }

    /// Gold fertility: stack depth, with empty stacks promoted to one O slot.
    pub fn fertility(&self) -> Vec<usize> {
        self.slot_stacks.iter().map(|s| s.len().max(1)).collect()
    }

    /// Stacks concatenated in token order, `O` standing in for empty stacks.
    pub fn flattened_slots(&self) -> Vec<String> {
        let mut out = Vec::new();
        for stack in &self.slot_stacks {
            if stack.is_empty() {
                out.push("O".to_string());
            } else {
                out.extend(stack.iter().cloned());
            }
        }
        out
    }

    /// True when the utterance has no fine-grained intents and no nested
    /// slots (every stack depth <= 1).
    pub fn is_non_nested(&self) -> bool {
        self.fine_intents.iter().all(|l| l == "O")
            && self.slot_stacks.iter().all(|s| s.len() <= 1)
    }
}

/// Canonical label-string assembly: `B-`/`I-` prefix, slot or intent type
/// with `_` rendered as `-`, and an optional `-NESTED` suffix.
pub(crate) fn bio_label(begin: bool, label: &str, nested: bool) -> String {
    let mut out = String::from(if begin { "B-" } else { "I-" });
    out.push_str(&label.replace('_', "-"));
    if nested {
        out.push_str("-NESTED");
    }
    out
}

/// Splits a canonical BIO label back into (is_begin, type, nested).
/// Returns `None` for `O` or non-BIO strings.
pub(crate) fn split_bio_label(label: &str) -> Option<(bool, String, bool)> {
    let (begin, rest) = if let Some(rest) = label.strip_prefix("B-") {
        (true, rest)
    } else if let Some(rest) = label.strip_prefix("I-") {
        (false, rest)
    } else {
        return None;
    };
    let (body, nested) = match rest.strip_suffix("-NESTED") {
        Some(body) => (body, true),
        None => (rest, false),
    };
    Some((begin, body.replace('-', "_"), nested))
}
