use super::tree::{Node, NodeKind, ParseTree, Span};
use super::validate::validate_tree;
use super::ParseReprError;

/// Parses the bracketed decoupled form, e.g.
/// `[IN:CREATE_CALL call [IN:GET_CONTACT Grandma ] ]`, against the token
/// list. Labels are upper-cased; an intent node carrying an equal-span slot
/// child is reoriented to the canonical slot-over-intent order.
pub fn parse_hierarchical(text: &str, tokens: &[String]) -> Result<ParseTree, ParseReprError> {
    let elements: Vec<&str> = text.split_whitespace().collect();
    let mut pos = 0usize; // token cursor, 0-based
    let mut idx = 0usize; // element cursor
    let root = parse_node(&elements, &mut idx, &mut pos, tokens)?;
    if idx != elements.len() {
        return Err(ParseReprError::UnbalancedBrackets(idx));
    }
    if pos != tokens.len() {
        return Err(ParseReprError::TokenMismatch {
            position: pos + 1,
            found: "<end of parse>".to_string(),
            expected: tokens.get(pos).cloned().unwrap_or_default(),
        });
    }
    if root.kind != NodeKind::Intent {
        return Err(ParseReprError::InvariantViolation("root must be an intent".into()));
    }
    let tree = ParseTree { tokens: tokens.to_vec(), root };
    let diagnostics = validate_tree(&tree, usize::MAX);
    if let Some(d) = diagnostics.first() {
        return Err(ParseReprError::InvariantViolation(d.to_string()));
    }
    Ok(tree)
}

fn parse_node(
    elements: &[&str],
    idx: &mut usize,
    pos: &mut usize,
    tokens: &[String],
) -> Result<Node, ParseReprError> {
    let opener = elements.get(*idx).ok_or(ParseReprError::UnbalancedBrackets(*idx))?;
    let (kind, label) = if let Some(rest) = opener.strip_prefix("[IN:") {
        (NodeKind::Intent, rest)
    } else if let Some(rest) = opener.strip_prefix("[SL:") {
        (NodeKind::Slot, rest)
    } else {
        return Err(ParseReprError::UnbalancedBrackets(*idx));
    };
    if label.is_empty() {
        return Err(ParseReprError::InvariantViolation(format!("empty label in {opener:?}")));
    }
    let label = label.to_uppercase();
    *idx += 1;
    let start = *pos + 1;
    let mut children = Vec::new();
    loop {
        let element = elements.get(*idx).ok_or(ParseReprError::UnbalancedBrackets(*idx))?;
        if *element == "]" {
            *idx += 1;
            break;
        } else if element.starts_with('[') {
            children.push(canonicalize(parse_node(elements, idx, pos, tokens)?));
        } else {
            let expected = tokens.get(*pos).ok_or_else(|| ParseReprError::TokenMismatch {
                position: *pos + 1,
                found: element.to_string(),
                expected: "<end of tokens>".to_string(),
            })?;
            if element != expected {
                return Err(ParseReprError::TokenMismatch {
                    position: *pos + 1,
                    found: element.to_string(),
                    expected: expected.clone(),
                });
            }
            *pos += 1;
            *idx += 1;
        }
    }
    if *pos + 1 <= start {
        return Err(ParseReprError::InvariantViolation(format!(
            "node {label} covers no tokens"
        )));
    }
    let span = Span::new(start, *pos);
    Ok(Node { kind, label, span, children })
}

/// Equal-span intent-over-slot pairs are rewritten so the intent is the
/// child of the slot, which is the orientation the codec reconstructs.
fn canonicalize(mut node: Node) -> Node {
    if node.kind == NodeKind::Intent && node.children.len() == 1 {
        let child_is_equal_slot =
            node.children[0].kind == NodeKind::Slot && node.children[0].span == node.span;
        if child_is_equal_slot {
            let mut slot = node.children.pop().expect("checked above");
            std::mem::swap(&mut node.children, &mut slot.children);
            slot.children = vec![node];
            return slot;
        }
    }
    node
}

/// Canonical serialization: elements joined by single spaces, labels
/// upper-case with `IN:`/`SL:` prefixes, tokens emitted at their innermost
/// covering node.
pub fn serialize(tree: &ParseTree) -> String {
    let mut out = Vec::new();
    serialize_node(&tree.root, &tree.tokens, &mut out);
    out.join(" ")
}

fn serialize_node(node: &Node, tokens: &[String], out: &mut Vec<String>) {
    let prefix = match node.kind {
        NodeKind::Intent => "IN:",
        NodeKind::Slot => "SL:",
    };
    out.push(format!("[{prefix}{}", node.label));
    let mut child_iter = node.children.iter().peekable();
    let mut pos = node.span.start;
    while pos <= node.span.end {
        if let Some(child) = child_iter.peek() {
            if child.span.start == pos {
                serialize_node(child, tokens, out);
                pos = child.span.end + 1;
                child_iter.next();
                continue;
            }
        }
        out.push(tokens[pos - 1].clone());
        pos += 1;
    }
    out.push("]".to_string());
}
