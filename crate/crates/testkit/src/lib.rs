//! Test support: seeded random documents, the T1 fixture, and reference
//! oracles that work from node content strings and the public tree accessors
//! only, never through the linearizer, search or diff code they check.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use treedoc_core::{document_from_json, Document, DocumentTree, NodeId};

pub mod oracle;

const WORDS: &[&str] = &[
    "tree", "node", "outline", "draft", "export", "section", "idea", "claim", "evidence", "model",
    "writer", "paper", "summary", "child", "parent", "link", "data", "result", "method", "note",
];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn words(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn inline_text(rng: &mut impl Rng) -> String {
    let mut parts = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let w = words(rng, 1, 4);
        parts.push(match rng.random_range(0..6) {
            0 => format!("<b>{w}</b>"),
            1 => format!("<i>{w}</i>"),
            2 => format!("<a href=\"https://example.org/{}\">{w}</a>", rng.random_range(0..50)),
            3 => format!("<strong>{w}</strong>"),
            _ => w,
        });
    }
    parts.join(" ")
}

fn list(rng: &mut impl Rng, depth: usize) -> String {
    let tag = if rng.random_bool(0.7) { "ul" } else { "ol" };
    let mut out = format!("<{tag}>");
    for _ in 0..rng.random_range(1..=4) {
        out.push_str("<li>");
        out.push_str(&inline_text(rng));
        if depth < 2 && rng.random_bool(0.2) {
            out.push_str(&list(rng, depth + 1));
        }
        out.push_str("</li>");
    }
    out.push_str(&format!("</{tag}>"));
    out
}

/// Random block content without an export block.
pub fn random_blocks(rng: &mut impl Rng) -> String {
    let mut out = String::new();
    for _ in 0..rng.random_range(0..=3) {
        if rng.random_bool(0.6) {
            out.push_str(&format!("<p>{}</p>", inline_text(rng)));
        } else {
            out.push_str(&list(rng, 0));
        }
    }
    out
}

/// Random node content; sometimes ends in an export block, occasionally an
/// empty one.
pub fn random_content(rng: &mut impl Rng) -> String {
    let mut content = random_blocks(rng);
    if rng.random_bool(0.4) {
        let payload = if rng.random_bool(0.15) {
            String::new()
        } else {
            let b = random_blocks(rng);
            if b.is_empty() {
                format!("<p>{}</p>", words(rng, 1, 5))
            } else {
                b
            }
        };
        content.push_str(&format!("<div class=\"export\">{payload}</div>"));
    }
    content
}

/// A random tree with at most `max_nodes` nodes and depth at most
/// `max_depth` (root = depth 0).
pub fn random_tree(rng: &mut impl Rng, max_depth: usize, max_nodes: usize) -> DocumentTree {
    let mut tree = DocumentTree::create_with_rng(&words(rng, 1, 3), rng).expect("title");
    let root = tree.root().clone();
    tree.set_content(&root, &random_content(rng)).expect("content");
    let target = rng.random_range(1..=max_nodes);
    let mut depth: HashMap<NodeId, usize> = HashMap::from([(root.clone(), 0)]);
    let mut all = vec![root];
    while all.len() < target {
        let parent = all[rng.random_range(0..all.len())].clone();
        if depth[&parent] >= max_depth {
            continue;
        }
        let len = tree.get_children(&parent).unwrap().len();
        let pos = rng.random_range(0..=len);
        let title = if rng.random_bool(0.1) {
            String::new()
        } else {
            words(rng, 1, 3)
        };
        let id = tree
            .add_child(&parent, &title, &random_content(rng), Some(pos))
            .expect("valid child");
        depth.insert(id.clone(), depth[&parent] + 1);
        all.push(id);
    }
    tree
}

/// The T1 fixture: R{A, B{B1, B2}} with fixed ids.
pub const T1_JSON: &str = r#"{
  "format": "treedoc/1",
  "doc_id": "t1",
  "root": "R",
  "nodes": {
    "R": {"title": "Root", "content": "<p>Root summary</p>", "children": ["A", "B"]},
    "A": {"title": "A", "content": "<p>pA</p>", "children": []},
    "B": {"title": "B", "content": "<p>outline B</p><div class=\"export\"><p>eB</p></div>", "children": ["B1", "B2"]},
    "B1": {"title": "B1", "content": "<p>pB1</p>", "children": []},
    "B2": {"title": "B2", "content": "<p>pB2</p>", "children": []}
  },
  "created_ms": 1700000000000,
  "modified_ms": 1700000000000
}"#;

pub fn t1() -> DocumentTree {
    document_from_json(T1_JSON).expect("T1 fixture").tree
}

/// A short essay used by the AI fixtures.
pub const ESSAY_JSON: &str = r#"{
  "format": "treedoc/1",
  "doc_id": "essay",
  "root": "essay",
  "nodes": {
    "essay": {"title": "Academic Integrity", "content": "<ul><li>Why integrity matters</li><li>Plagiarism and its costs</li></ul>", "children": ["intro", "body", "concl"]},
    "intro": {"title": "Introduction", "content": "<p>Students face pressure to publish early.</p>", "children": []},
    "body": {"title": "Main Argument", "content": "<ul><li>Citation habits</li><li>Detection tools</li></ul><div class=\"export\"><p>Good citation habits protect writers.</p></div>", "children": ["cite", "detect"]},
    "cite": {"title": "Citation habits", "content": "<p>Cite every source with a <a href=\"https://example.org/apa\">style guide</a>.</p>", "children": []},
    "detect": {"title": "Detection tools", "content": "<p>Software flags plagiarism by comparing text against large corpora.</p>", "children": []},
    "concl": {"title": "Conclusion", "content": "<p>Integrity is a shared duty.</p>", "children": []}
  },
  "created_ms": 1700000000000,
  "modified_ms": 1700000000000
}"#;

pub fn essay() -> Document {
    document_from_json(ESSAY_JSON).expect("essay fixture")
}

pub fn id(s: &str) -> NodeId {
    NodeId::new(s).expect("fixture id")
}
