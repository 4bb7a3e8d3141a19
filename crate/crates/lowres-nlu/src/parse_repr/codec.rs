use serde::{Deserialize, Serialize};

use super::tree::{bio_label, split_bio_label, FlatLabels, Node, NodeKind, ParseTree, Span};
use super::ParseReprError;

/// Flattens a hierarchical parse: the root label becomes the coarse intent,
/// non-root intents become BIO fine-intent labels (inner intents of
/// intent-in-intent nesting carry the `NESTED` suffix and the outer
/// intent's BIO span extends over them), and each token's covering slots
/// become its stack, outermost first.
pub fn encode_flat(tree: &ParseTree, max_fertility: usize) -> Result<FlatLabels, ParseReprError> {
    let n = tree.tokens.len();
    let mut fine: Vec<String> = vec!["O".to_string(); n];
    let mut stacks: Vec<Vec<String>> = vec![Vec::new(); n];
    encode_node(&tree.root, true, 0, &mut fine, &mut stacks)?;
    for (t, stack) in stacks.iter().enumerate() {
        if stack.len() > max_fertility {
            return Err(ParseReprError::FertilityOverflow { token: t + 1, max: max_fertility });
        }
    }
    let mut starts = std::collections::BTreeSet::new();
    check_intent_starts(&tree.root, true, &mut starts)?;
    Ok(FlatLabels { coarse_intent: tree.root.label.clone(), fine_intents: fine, slot_stacks: stacks })
}

fn encode_node(
    node: &Node,
    is_root: bool,
    intent_ancestors: usize,
    fine: &mut [String],
    stacks: &mut [Vec<String>],
) -> Result<(), ParseReprError> {
    match node.kind {
        NodeKind::Intent if !is_root => {
            if intent_ancestors >= 2 {
                return Err(ParseReprError::NestedIntentConflict(format!(
                    "{} is nested deeper than one intent level",
                    node.label
                )));
            }
            let nested = intent_ancestors >= 1;
            for t in node.span.start..=node.span.end {
                fine[t - 1] = bio_label(t == node.span.start, &node.label, nested);
            }
        }
        NodeKind::Slot => {
            for t in node.span.start..=node.span.end {
                stacks[t - 1].push(bio_label(t == node.span.start, &node.label, false));
            }
        }
        NodeKind::Intent => {}
    }
    let child_ancestors = intent_ancestors + usize::from(node.kind == NodeKind::Intent && !is_root);
    for child in &node.children {
        encode_node(child, false, child_ancestors, fine, stacks)?;
    }
    Ok(())
}

fn check_intent_starts(
    node: &Node,
    is_root: bool,
    starts: &mut std::collections::BTreeSet<usize>,
) -> Result<(), ParseReprError> {
    if node.kind == NodeKind::Intent && !is_root && !starts.insert(node.span.start) {
        return Err(ParseReprError::NestedIntentConflict(format!(
            "two intents start at token {}",
            node.span.start
        )));
    }
    for child in &node.children {
        check_intent_starts(child, false, starts)?;
    }
    Ok(())
}

/// Counts of label repairs applied while decoding model predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCounts {
    /// Orphan `I-` labels rewritten to `B-`.
    pub orphan_i_to_b: usize,
    /// `NESTED` intent labels demoted for want of an enclosing intent.
    pub nested_without_outer: usize,
    /// Spans clipped to fit the node that should contain them.
    pub clipped: usize,
    /// Spans dropped because no legal attachment existed.
    pub dropped: usize,
}

impl RepairCounts {
    pub fn total(&self) -> usize {
        self.orphan_i_to_b + self.nested_without_outer + self.clipped + self.dropped
    }

    pub fn add(&mut self, other: &RepairCounts) {
        self.orphan_i_to_b += other.orphan_i_to_b;
        self.nested_without_outer += other.nested_without_outer;
        self.clipped += other.clipped;
        self.dropped += other.dropped;
    }
}

/// Reconstructs the unique tree whose encoding is `flat`. Malformed labels
/// yield an error, never a silent repair.
pub fn decode_flat(flat: &FlatLabels, tokens: &[String]) -> Result<ParseTree, ParseReprError> {
    let (tree, counts) = decode_inner(flat, tokens, false)?;
    debug_assert_eq!(counts.total(), 0);
    Ok(tree)
}

/// Repair-mode decoding for model predictions: orphan `I-` labels become
/// `B-`, overhanging spans are clipped to their parents, unattachable spans
/// are dropped, and every repair is counted.
pub fn decode_flat_with_repair(
    flat: &FlatLabels,
    tokens: &[String],
) -> Result<(ParseTree, RepairCounts), ParseReprError> {
    decode_inner(flat, tokens, true)
}

#[derive(Debug)]
struct PendingNode {
    kind: NodeKind,
    label: String,
    span: Span,
    slot_level: usize,
}

fn decode_inner(
    flat: &FlatLabels,
    tokens: &[String],
    repair: bool,
) -> Result<(ParseTree, RepairCounts), ParseReprError> {
    let n = tokens.len();
    if flat.fine_intents.len() != n || flat.slot_stacks.len() != n {
        return Err(ParseReprError::InvariantViolation(format!(
            "labels cover {} tokens, utterance has {n}",
            flat.fine_intents.len()
        )));
    }
    if n == 0 {
        return Err(ParseReprError::InvariantViolation("empty utterance".into()));
    }
    let mut counts = RepairCounts::default();
    let mut pending = Vec::new();

    // Level-l slot spans come from the l-th stack entries.
    let max_depth = flat.slot_stacks.iter().map(Vec::len).max().unwrap_or(0);
    for level in 0..max_depth {
        let mut open: Option<(String, usize)> = None;
        for (i, stack) in flat.slot_stacks.iter().enumerate() {
            let t = i + 1;
            let entry = stack.get(level);
            match entry.map(|l| (l, split_bio_label(l))) {
                None => {
                    close_slot(&mut open, t, level, &mut pending);
                }
                Some((raw, None)) => {
                    return Err(ParseReprError::MalformedBio(format!(
                        "{raw:?} in stack at token {t}"
                    )));
                }
                Some((_, Some((begin, ty, _)))) => {
                    if begin {
                        close_slot(&mut open, t, level, &mut pending);
                        open = Some((ty, t));
                    } else {
                        let continues = matches!(&open, Some((oty, _)) if *oty == ty);
                        if !continues {
                            if !repair {
                                return Err(ParseReprError::MalformedBio(format!(
                                    "orphan I- slot label at token {t}"
                                )));
                            }
                            counts.orphan_i_to_b += 1;
                            close_slot(&mut open, t, level, &mut pending);
                            open = Some((ty, t));
                        }
                    }
                }
            }
        }
        close_slot(&mut open, n + 1, level, &mut pending);
    }

    // Intent spans from the fine-intent automaton. An outer intent's span
    // extends over the NESTED tokens inside it.
    let mut outer: Option<(String, usize, usize)> = None;
    let mut nested: Option<(String, usize, usize)> = None;
    let close_nested = |slot: &mut Option<(String, usize, usize)>, pending: &mut Vec<PendingNode>| {
        if let Some((label, start, end)) = slot.take() {
            pending.push(PendingNode {
                kind: NodeKind::Intent,
                label,
                span: Span::new(start, end),
                slot_level: 0,
            });
        }
    };
    for (i, raw) in flat.fine_intents.iter().enumerate() {
        let t = i + 1;
        if raw == "O" {
            close_nested(&mut nested, &mut pending);
            close_nested(&mut outer, &mut pending);
            continue;
        }
        let Some((begin, ty, is_nested)) = split_bio_label(raw) else {
            return Err(ParseReprError::MalformedBio(format!(
                "{raw:?} is not a fine-intent label (token {t})"
            )));
        };
        let (begin, is_nested) = if is_nested && outer.is_none() {
            if !repair {
                return Err(ParseReprError::MalformedBio(format!(
                    "NESTED intent without an enclosing intent at token {t}"
                )));
            }
            counts.nested_without_outer += 1;
            (true, false)
        } else {
            (begin, is_nested)
        };
        if is_nested {
            let outer_state = outer.as_mut().expect("outer presence checked above");
            outer_state.2 = t;
            if begin {
                close_nested(&mut nested, &mut pending);
                nested = Some((ty, t, t));
            } else {
                match &mut nested {
                    Some((nty, _, end)) if *nty == ty => *end = t,
                    _ => {
                        if !repair {
                            return Err(ParseReprError::MalformedBio(format!(
                                "orphan I- intent label at token {t}"
                            )));
                        }
                        counts.orphan_i_to_b += 1;
                        close_nested(&mut nested, &mut pending);
                        nested = Some((ty, t, t));
                    }
                }
            }
        } else if begin {
            close_nested(&mut nested, &mut pending);
            close_nested(&mut outer, &mut pending);
            outer = Some((ty, t, t));
        } else {
            match &mut outer {
                Some((oty, _, end)) if *oty == ty => {
                    *end = t;
                    close_nested(&mut nested, &mut pending);
                }
                _ => {
                    if !repair {
                        return Err(ParseReprError::MalformedBio(format!(
                            "orphan I- intent label at token {t}"
                        )));
                    }
                    counts.orphan_i_to_b += 1;
                    close_nested(&mut nested, &mut pending);
                    close_nested(&mut outer, &mut pending);
                    outer = Some((ty, t, t));
                }
            }
        }
    }
    close_nested(&mut nested, &mut pending);
    close_nested(&mut outer, &mut pending);

    // Outermost-first insertion; for equal spans the slot is the parent.
    pending.sort_by(|a, b| {
        b.span
            .len()
            .cmp(&a.span.len())
            .then(a.span.start.cmp(&b.span.start))
            .then(kind_rank(a.kind).cmp(&kind_rank(b.kind)))
            .then(a.slot_level.cmp(&b.slot_level))
    });

    let mut root = Node::intent(flat.coarse_intent.clone(), Span::new(1, n), vec![]);
    let mut queue: std::collections::VecDeque<Node> = pending
        .into_iter()
        .map(|p| Node { kind: p.kind, label: p.label, span: p.span, children: vec![] })
        .collect();
    while let Some(node) = queue.pop_front() {
        // Clipped nodes re-enter at the back; their spans shrink strictly,
        // so this terminates.
        if let AttachResult::Requeue(clipped) = attach(&mut root, node, repair, &mut counts)? {
            queue.push_back(clipped);
        }
    }
    Ok((ParseTree { tokens: tokens.to_vec(), root }, counts))
}

enum AttachResult {
    Done,
    Requeue(Node),
}

fn kind_rank(kind: NodeKind) -> u8 {
    match kind {
        NodeKind::Slot => 0,
        NodeKind::Intent => 1,
    }
}

fn close_slot(
    open: &mut Option<(String, usize)>,
    t: usize,
    level: usize,
    pending: &mut Vec<PendingNode>,
) {
    if let Some((label, start)) = open.take() {
        pending.push(PendingNode {
            kind: NodeKind::Slot,
            label,
            span: Span::new(start, t - 1),
            slot_level: level,
        });
    }
}

fn attach(
    parent: &mut Node,
    mut node: Node,
    repair: bool,
    counts: &mut RepairCounts,
) -> Result<AttachResult, ParseReprError> {
    // Descend into the unique child that contains the new span.
    if let Some(child) = parent.children.iter_mut().find(|c| c.span.contains(node.span)) {
        return attach(child, node, repair, counts);
    }
    // Partial overlap with a child: clip in repair mode, else refuse.
    if let Some(child) = parent.children.iter().find(|c| c.span.overlaps(node.span)) {
        if !repair {
            return Err(ParseReprError::UnnestableSpans(format!(
                "{} [{},{}] overlaps {} [{},{}]",
                node.label, node.span.start, node.span.end,
                child.label, child.span.start, child.span.end
            )));
        }
        counts.clipped += 1;
        node.span = Span::new(
            node.span.start.max(child.span.start),
            node.span.end.min(child.span.end),
        );
        return Ok(AttachResult::Requeue(node));
    }
    if parent.kind == NodeKind::Slot && node.kind == NodeKind::Slot {
        if !repair {
            return Err(ParseReprError::UnnestableSpans(format!(
                "slot {} [{},{}] has no enclosing intent inside slot {}",
                node.label, node.span.start, node.span.end, parent.label
            )));
        }
        counts.dropped += 1;
        return Ok(AttachResult::Done);
    }
    let at = parent
        .children
        .iter()
        .position(|c| c.span.start > node.span.start)
        .unwrap_or(parent.children.len());
    parent.children.insert(at, node);
    Ok(AttachResult::Done)
}
