//! Reference implementations used as test oracles.

use std::collections::HashMap;

use treedoc_core::{DocumentTree, NodeId};

const EXPORT_OPEN: &str = "<div class=\"export\">";

/// Exported payload computed by string inspection of canonical content.
pub fn exported(content: &str, is_leaf: bool) -> Option<String> {
    let payload = match content.find(EXPORT_OPEN) {
        Some(start) => {
            assert!(content.ends_with("</div>"), "export block must close the content");
            content[start + EXPORT_OPEN.len()..content.len() - "</div>".len()].to_string()
        }
        None if is_leaf => content.to_string(),
        None => return None,
    };
    (!payload.is_empty()).then_some(payload)
}

/// Recursive preorder walk; `(node id, depth below document root, payload)`.
pub fn linearize(tree: &DocumentTree, root: &NodeId) -> Vec<(NodeId, usize, String)> {
    fn depth_of(tree: &DocumentTree, id: &NodeId) -> usize {
        match tree.get_parent(id).unwrap() {
            None => 0,
            Some(p) => 1 + depth_of(tree, p),
        }
    }
    fn walk(tree: &DocumentTree, id: &NodeId, depth: usize, out: &mut Vec<(NodeId, usize, String)>) {
        let node = tree.get_node(id).unwrap();
        if let Some(p) = exported(node.content.as_str(), node.children.is_empty()) {
            out.push((id.clone(), depth, p));
        }
        for c in &node.children {
            walk(tree, c, depth + 1, out);
        }
    }
    let mut out = Vec::new();
    walk(tree, root, depth_of(tree, root), &mut out);
    out
}

pub fn subtree_size(tree: &DocumentTree, id: &NodeId) -> usize {
    1 + tree
        .get_node(id)
        .unwrap()
        .children
        .iter()
        .map(|c| subtree_size(tree, c))
        .sum::<usize>()
}

pub fn preorder(tree: &DocumentTree, id: &NodeId) -> Vec<NodeId> {
    let mut out = vec![id.clone()];
    for c in &tree.get_node(id).unwrap().children {
        out.extend(preorder(tree, c));
    }
    out
}

fn decode(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&amp;", "&")
}

/// Naive tag strip: block tags become line breaks, other tags vanish,
/// whitespace collapses inside lines, blank lines are dropped.
pub fn strip(markup: &str) -> String {
    const BLOCK: &[&str] = &["p", "ul", "ol", "li", "div"];
    let flat: String = markup.chars().map(|c| if c.is_whitespace() { ' ' } else { c }).collect();
    let mut out = String::new();
    let mut rest = flat.as_str();
    while let Some(lt) = rest.find('<') {
        out.push_str(&decode(&rest[..lt]));
        let gt = rest[lt..].find('>').expect("closed tag") + lt;
        let name: String = rest[lt + 1..gt]
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect();
        if BLOCK.contains(&name.as_str()) {
            out.push('\n');
        }
        rest = &rest[gt + 1..];
    }
    out.push_str(&decode(rest));
    out.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Brute-force keyword scan over every node in preorder.
pub fn search(tree: &DocumentTree, keyword: &str) -> Vec<NodeId> {
    let kw = keyword.trim().to_lowercase();
    preorder(tree, tree.root())
        .into_iter()
        .filter(|id| {
            let n = tree.get_node(id).unwrap();
            n.title.to_lowercase().contains(&kw)
                || strip(n.content.as_str()).replace('\n', " ").to_lowercase().contains(&kw)
        })
        .collect()
}

/// LCS length by memoized recursion over prefixes.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == 0 || j == 0 {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i - 1] == b[j - 1] {
            go(a, b, i - 1, j - 1, memo) + 1
        } else {
            go(a, b, i - 1, j, memo).max(go(a, b, i, j - 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, a.len(), b.len(), &mut HashMap::new())
}
