//! Compact JSON output for trees.

use std::fmt::Write as _;

use super::{JsonTree, Label, NodeType};

/// JSON string literal for `s`, quotes included.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Writes `t` as compact JSON. The empty tree yields the empty string.
pub(crate) fn serialize_tree(t: &JsonTree) -> String {
    let mut out = String::new();
    if t.is_empty() {
        return out;
    }
    // (node, children already emitted)
    let mut stack = vec![(t.root(), 0usize)];
    while let Some(&mut (v, ref mut done)) = stack.last_mut() {
        let node = t.node(v);
        match node.node_type() {
            NodeType::Literal => {
                if let Label::Literal(l) = node.label() {
                    let _ = write!(out, "{l}");
                }
                stack.pop();
            }
            NodeType::Key => {
                if *done == 0 {
                    out.push_str(&quote(node.key().unwrap_or("")));
                    out.push(':');
                    *done = 1;
                    stack.push((node.children()[0], 0));
                } else {
                    stack.pop();
                }
            }
            NodeType::Object | NodeType::Array => {
                let (open, close) = if node.node_type() == NodeType::Object {
                    ('{', '}')
                } else {
                    ('[', ']')
                };
                if *done == 0 {
                    out.push(open);
                }
                if *done < node.degree() {
                    if *done > 0 {
                        out.push(',');
                    }
                    let child = node.children()[*done];
                    *done += 1;
                    stack.push((child, 0));
                } else {
                    out.push(close);
                    stack.pop();
                }
            }
        }
    }
    out
}
