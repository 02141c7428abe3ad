use serde_json::{json, Value};
use treedoc_core::{strip_plain_text, DocumentTree, NodeId};

use crate::AiError;

/// Characters of context kept on each side of a match.
const SNIPPET_CONTEXT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchHit {
    pub id: NodeId,
    pub title: String,
    pub snippet: String,
}

impl SearchHit {
    pub fn to_json(&self) -> Value {
        json!({"id": self.id, "title": self.title, "snippet": self.snippet})
    }
}

/// Case-insensitive substring search over titles and plain-text content of
/// every node, in document order.
pub fn search_by_keyword(tree: &DocumentTree, keyword: &str) -> Result<Vec<SearchHit>, AiError> {
    let kw = keyword.trim().to_lowercase();
    if kw.is_empty() {
        return Err(AiError::EmptyKeyword);
    }
    let mut hits = Vec::new();
    for node in tree.nodes_in_order() {
        let text = strip_plain_text(&node.content).replace('\n', " ");
        let snippet = if let Some(s) = snippet(&text, &kw) {
            s
        } else if let Some(s) = snippet(&node.title, &kw) {
            s
        } else {
            continue;
        };
        hits.push(SearchHit { id: node.id.clone(), title: node.title.clone(), snippet });
    }
    Ok(hits)
}

fn snippet(hay: &str, kw_lower: &str) -> Option<String> {
    let lower = hay.to_lowercase();
    let at = lower.find(kw_lower)?;
    let chars: Vec<char> = hay.chars().collect();
    // Lowercasing can change lengths outside ASCII; fall back to the start.
    let (start, len) = if lower.len() == hay.len() {
        (hay[..at].chars().count(), kw_lower.chars().count())
    } else {
        (0, 0)
    };
    let from = start.saturating_sub(SNIPPET_CONTEXT);
    let to = (start + len + SNIPPET_CONTEXT).min(chars.len());
    let mut out = String::new();
    if from > 0 {
        out.push_str("...");
    }
    out.extend(&chars[from..to]);
    if to < chars.len() {
        out.push_str("...");
    }
    Some(out)
}
