//! Plain-text views of fragments, used by search, diffing and word counts.

use crate::fragment::{FragNode, RichFragment};

/// Removes markup. Each block element starts a new line, whitespace runs
/// inside a line collapse to one space, and blank lines are dropped.
pub fn strip_plain_text(fragment: &RichFragment) -> String {
    nodes_plain_text(fragment.nodes())
}

pub(crate) fn nodes_plain_text(nodes: &[FragNode]) -> String {
    let mut raw = String::new();
    collect(nodes, &mut raw);
    raw.split('\n')
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn collect(nodes: &[FragNode], out: &mut String) {
    for node in nodes {
        match node {
            // Newlines inside text are ordinary whitespace; only block
            // boundaries produce line breaks.
            FragNode::Text(t) => out.extend(t.chars().map(|c| if c == '\n' { ' ' } else { c })),
            FragNode::Element(el) => {
                if el.tag.is_block() {
                    out.push('\n');
                }
                collect(&el.children, out);
                if el.tag.is_block() {
                    out.push('\n');
                }
            }
        }
    }
}

/// Whitespace-separated tokens of the plain text.
pub fn word_tokens(fragment: &RichFragment) -> Vec<String> {
    strip_plain_text(fragment)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}
