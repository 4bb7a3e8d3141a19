use std::fmt;

use super::tree::{split_bio_label, Node, NodeKind, ParseTree, Span};

/// One named invariant violation with the token position it anchors to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: String,
    pub position: usize,
    pub detail: String,
}

impl Diagnostic {
    fn new(kind: &str, position: usize, detail: impl Into<String>) -> Self {
        Diagnostic { kind: kind.to_string(), position, detail: detail.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.detail.is_empty() {
            write!(f, "{}@{}", self.kind, self.position)
        } else {
            write!(f, "{}@{} ({})", self.kind, self.position, self.detail)
        }
    }
}

/// Checks every tree invariant plus codec representability. Empty result
/// means the tree is valid and losslessly flattenable.
pub fn validate_tree(tree: &ParseTree, max_fertility: usize) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = tree.tokens.len();
    if n == 0 {
        out.push(Diagnostic::new("EmptyUtterance", 0, ""));
        return out;
    }
    if tree.root.kind != NodeKind::Intent {
        out.push(Diagnostic::new("RootNotIntent", 1, ""));
    }
    if tree.root.span != Span::new(1, n) {
        out.push(Diagnostic::new(
            "RootSpanMismatch",
            1,
            format!("root spans [{},{}], utterance has {} tokens", tree.root.span.start, tree.root.span.end, n),
        ));
    }
    check_node(&tree.root, true, 0, &mut out);

    // Per-token slot depth against the fertility budget.
    let mut depth = vec![0usize; n];
    for node in tree.nodes() {
        if node.kind == NodeKind::Slot {
            for t in node.span.start..=node.span.end {
                depth[t - 1] += 1;
            }
        }
    }
    for (t, &d) in depth.iter().enumerate() {
        if d > max_fertility {
            out.push(Diagnostic::new(
                "FertilityOverflow",
                t + 1,
                format!("stack depth {d} exceeds {max_fertility}"),
            ));
        }
    }

    // Intent starts must be unique among non-root intents, otherwise the
    // flattened form cannot name both.
    let mut starts = std::collections::BTreeMap::new();
    collect_intent_starts(&tree.root, true, &mut starts, &mut out);
    out
}

fn check_node(node: &Node, is_root: bool, intent_ancestors: usize, out: &mut Vec<Diagnostic>) {
    if node.kind == NodeKind::Intent && !is_root && intent_ancestors >= 2 {
        out.push(Diagnostic::new(
            "IntentNestingTooDeep",
            node.span.start,
            format!("{} has {} non-root intent ancestors", node.label, intent_ancestors),
        ));
    }
    let mut prev_end: Option<usize> = None;
    for child in &node.children {
        if !node.span.contains(child.span) {
            out.push(Diagnostic::new(
                "SpanOutOfParent",
                child.span.start,
                format!("{} not inside {}", child.label, node.label),
            ));
        }
        if node.kind == NodeKind::Slot && child.kind == NodeKind::Slot {
            out.push(Diagnostic::new(
                "SlotInsideSlot",
                child.span.start,
                format!("{} directly inside {}", child.label, node.label),
            ));
        }
        if let Some(end) = prev_end {
            if child.span.start <= end {
                out.push(Diagnostic::new("SiblingOverlap", child.span.start, ""));
            }
        }
        prev_end = Some(child.span.end.max(prev_end.unwrap_or(0)));
        let child_ancestors =
            intent_ancestors + usize::from(node.kind == NodeKind::Intent && !is_root);
        check_node(child, false, child_ancestors, out);
    }
}

fn collect_intent_starts(
    node: &Node,
    is_root: bool,
    starts: &mut std::collections::BTreeMap<usize, String>,
    out: &mut Vec<Diagnostic>,
) {
    if node.kind == NodeKind::Intent && !is_root {
        if let Some(other) = starts.insert(node.span.start, node.label.clone()) {
            out.push(Diagnostic::new(
                "NestedIntentConflict",
                node.span.start,
                format!("{} and {} both start here", other, node.label),
            ));
        }
    }
    for child in &node.children {
        collect_intent_starts(child, false, starts, out);
    }
}

/// Checks the flattened-label invariants: aligned lengths, well-formed BIO
/// stacks with depth-consistent continuations, and an accepting fine-intent
/// automaton.
pub fn validate_flat(flat: &super::FlatLabels) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = flat.fine_intents.len();
    if flat.slot_stacks.len() != n {
        out.push(Diagnostic::new(
            "LengthMismatch",
            1,
            format!("{} fine intents vs {} stacks", n, flat.slot_stacks.len()),
        ));
        return out;
    }

    for (i, stack) in flat.slot_stacks.iter().enumerate() {
        for (level, label) in stack.iter().enumerate() {
            match split_bio_label(label) {
                Some((begin, ty, nested)) => {
                    if nested {
                        out.push(Diagnostic::new(
                            "MalformedBIO",
                            i + 1,
                            format!("slot label {label} carries a NESTED suffix"),
                        ));
                    }
                    if !begin {
                        let prev = if i > 0 { flat.slot_stacks[i - 1].get(level) } else { None };
                        let continues = prev
                            .and_then(|p| split_bio_label(p))
                            .map(|(_, pty, _)| pty == ty)
                            .unwrap_or(false);
                        if !continues {
                            out.push(Diagnostic::new(
                                "MalformedBIO",
                                i + 1,
                                format!("{label} at depth {} continues nothing", level + 1),
                            ));
                        }
                    }
                }
                None => out.push(Diagnostic::new(
                    "MalformedBIO",
                    i + 1,
                    format!("{label:?} is not a BIO slot label"),
                )),
            }
        }
    }

    // Fine-intent automaton: outer intents may be interrupted by one level
    // of NESTED intents and resume afterwards.
    let mut outer: Option<String> = None;
    let mut nested: Option<String> = None;
    for (i, label) in flat.fine_intents.iter().enumerate() {
        if label == "O" {
            outer = None;
            nested = None;
            continue;
        }
        match split_bio_label(label) {
            Some((begin, ty, is_nested)) => {
                if is_nested {
                    if outer.is_none() {
                        out.push(Diagnostic::new(
                            "MalformedBIO",
                            i + 1,
                            format!("{label} without an enclosing intent"),
                        ));
                    }
                    if begin {
                        nested = Some(ty);
                    } else if nested.as_deref() != Some(ty.as_str()) {
                        out.push(Diagnostic::new(
                            "MalformedBIO",
                            i + 1,
                            format!("{label} continues nothing"),
                        ));
                        nested = Some(ty);
                    }
                } else if begin {
                    outer = Some(ty);
                    nested = None;
                } else {
                    if outer.as_deref() != Some(ty.as_str()) {
                        out.push(Diagnostic::new(
                            "MalformedBIO",
                            i + 1,
                            format!("{label} continues nothing"),
                        ));
                        outer = Some(ty);
                    }
                    nested = None;
                }
            }
            None => out.push(Diagnostic::new(
                "MalformedBIO",
                i + 1,
                format!("{label:?} is not a fine-intent label"),
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_repr::tree::FlatLabels;
    use crate::parse_repr::DEFAULT_MAX_FERTILITY;

    #[test]
    fn valid_tree_has_no_diagnostics() {
        let tree = ParseTree {
            tokens: vec!["call".into(), "Grandma".into()],
            root: Node::intent(
                "CREATE_CALL",
                Span::new(1, 2),
                vec![Node::intent("GET_CONTACT", Span::new(2, 2), vec![])],
            ),
        };
        assert!(validate_tree(&tree, DEFAULT_MAX_FERTILITY).is_empty());
    }

    #[test]
    fn sibling_overlap_reported_at_second_start() {
        let tree = ParseTree {
            tokens: (0..4).map(|i| format!("t{i}")).collect(),
            root: Node::intent(
                "ROOT",
                Span::new(1, 4),
                vec![
                    Node::slot("A", Span::new(1, 3), vec![]),
                    Node::slot("B", Span::new(2, 4), vec![]),
                ],
            ),
        };
        let diags = validate_tree(&tree, DEFAULT_MAX_FERTILITY);
        assert!(diags.iter().any(|d| d.to_string().starts_with("SiblingOverlap@2")), "{diags:?}");
    }

    #[test]
    fn orphan_i_in_stack_reported() {
        let flat = FlatLabels {
            coarse_intent: "C".into(),
            fine_intents: vec!["O".into(), "O".into()],
            slot_stacks: vec![vec!["B-A".into()], vec!["B-A".into(), "I-B".into()]],
        };
        let diags = validate_flat(&flat);
        assert!(diags.iter().any(|d| d.kind == "MalformedBIO"), "{diags:?}");
    }

    #[test]
    fn fertility_overflow_flagged() {
        let tree = ParseTree {
            tokens: vec!["a".into()],
            root: Node::intent(
                "R",
                Span::new(1, 1),
                vec![Node::slot(
                    "S1",
                    Span::new(1, 1),
                    vec![Node::intent(
                        "I1",
                        Span::new(1, 1),
                        vec![Node::slot("S2", Span::new(1, 1), vec![])],
                    )],
                )],
            ),
        };
        assert!(validate_tree(&tree, 1)
            .iter()
            .any(|d| d.kind == "FertilityOverflow"));
        assert!(validate_tree(&tree, 2).iter().all(|d| d.kind != "FertilityOverflow"));
    }
}
