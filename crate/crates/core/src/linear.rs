//! Exported content and the linear document.
//!
//! A node contributes to the final document through its export block, or,
//! when it has none, through its whole content if it is a leaf. The linear
//! document is the preorder sequence of those contributions.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fragment::{escape_text, Element, FragNode, RichFragment, Tag};
use crate::id::NodeId;
use crate::tree::{DocumentTree, Node, TreeError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedSegment {
    pub node_id: NodeId,
    /// Depth below the document root (root = 0), even when linearizing a
    /// subtree.
    pub depth: usize,
    pub title: String,
    /// Export payload, never wrapped in an export block.
    pub fragment: RichFragment,
}

/// What `node` contributes to the linear document. Empty payloads count as
/// nothing.
pub fn exported_content(node: &Node) -> Option<RichFragment> {
    let exported = match node.content.export_payload() {
        Some(payload) => payload,
        None if node.is_leaf() => node.content.clone(),
        None => return None,
    };
    (!exported.is_empty()).then_some(exported)
}

pub fn linearize(tree: &DocumentTree, root: &NodeId) -> Result<Vec<ExportedSegment>, TreeError> {
    let base = tree.depth(root)?;
    let mut out = Vec::new();
    let mut stack = vec![(root.clone(), base)];
    while let Some((id, depth)) = stack.pop() {
        let node = tree.get_node(&id)?;
        if let Some(fragment) = exported_content(node) {
            out.push(ExportedSegment {
                node_id: id.clone(),
                depth,
                title: node.title.clone(),
                fragment,
            });
        }
        stack.extend(node.children.iter().rev().map(|c| (c.clone(), depth + 1)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Html,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadingPolicy {
    TitlesAsHeadings,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported format {0:?}; expected html or markdown")]
pub struct UnsupportedFormat(pub String);

impl FromStr for RenderFormat {
    type Err = UnsupportedFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "html" => Ok(RenderFormat::Html),
            "md" | "markdown" => Ok(RenderFormat::Markdown),
            _ => Err(UnsupportedFormat(s.to_string())),
        }
    }
}

impl fmt::Display for RenderFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RenderFormat::Html => "html",
            RenderFormat::Markdown => "markdown",
        })
    }
}

/// Heading level for a segment: depth capped at 6; the document root
/// (depth 0) gets none.
pub fn heading_level(depth: usize) -> Option<usize> {
    (depth > 0).then(|| depth.min(6))
}

pub fn render(segments: &[ExportedSegment], format: RenderFormat, policy: HeadingPolicy) -> String {
    match format {
        RenderFormat::Html => render_html(segments, policy),
        RenderFormat::Markdown => render_markdown(segments, policy),
    }
}

fn heading_for(seg: &ExportedSegment, policy: HeadingPolicy) -> Option<usize> {
    match policy {
        HeadingPolicy::TitlesAsHeadings if !seg.title.trim().is_empty() => heading_level(seg.depth),
        _ => None,
    }
}

fn render_html(segments: &[ExportedSegment], policy: HeadingPolicy) -> String {
    let mut out = String::new();
    for seg in segments {
        if let Some(level) = heading_for(seg, policy) {
            out.push_str(&format!("<h{level}>"));
            escape_text(seg.title.trim(), &mut out);
            out.push_str(&format!("</h{level}>"));
        }
        out.push_str(seg.fragment.as_str());
    }
    out
}

fn render_markdown(segments: &[ExportedSegment], policy: HeadingPolicy) -> String {
    let mut blocks: Vec<String> = Vec::new();
    for seg in segments {
        if let Some(level) = heading_for(seg, policy) {
            blocks.push(format!("{} {}", "#".repeat(level), seg.title.trim()));
        }
        blocks.extend(fragment_to_markdown_blocks(&seg.fragment));
    }
    if blocks.is_empty() {
        return String::new();
    }
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}

/// Markdown for one fragment, blocks separated by a blank line.
pub fn fragment_to_markdown(fragment: &RichFragment) -> String {
    fragment_to_markdown_blocks(fragment).join("\n\n")
}

fn fragment_to_markdown_blocks(fragment: &RichFragment) -> Vec<String> {
    let mut blocks = Vec::new();
    block_sequence(fragment.nodes(), &mut blocks);
    blocks
}

fn block_sequence(nodes: &[FragNode], blocks: &mut Vec<String>) {
    let mut inline_run: Vec<&FragNode> = Vec::new();
    let flush = |run: &mut Vec<&FragNode>, blocks: &mut Vec<String>| {
        if !run.is_empty() {
            let text = inline_refs(run);
            if !text.is_empty() {
                blocks.push(text);
            }
            run.clear();
        }
    };
    for node in nodes {
        match node {
            FragNode::Element(el) if el.tag.is_block() => {
                flush(&mut inline_run, blocks);
                match el.tag {
                    Tag::P => {
                        let text = inline(&el.children);
                        if !text.is_empty() {
                            blocks.push(text);
                        }
                    }
                    Tag::Ul | Tag::Ol => blocks.push(list_lines(el, 0).join("\n")),
                    _ => block_sequence(&el.children, blocks),
                }
            }
            other => inline_run.push(other),
        }
    }
    flush(&mut inline_run, blocks);
}

fn inline_refs(nodes: &[&FragNode]) -> String {
    let mut raw = String::new();
    for n in nodes {
        inline_into(n, &mut raw);
    }
    collapse(&raw)
}

fn inline(nodes: &[FragNode]) -> String {
    let mut raw = String::new();
    for n in nodes {
        inline_into(n, &mut raw);
    }
    collapse(&raw)
}

fn collapse(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn inline_into(node: &FragNode, out: &mut String) {
    match node {
        FragNode::Text(t) => out.push_str(t),
        FragNode::Element(el) => {
            let mut inner = String::new();
            for c in &el.children {
                inline_into(c, &mut inner);
            }
            match el.tag {
                Tag::B | Tag::Strong => out.push_str(&format!("**{inner}**")),
                Tag::I | Tag::Em => out.push_str(&format!("*{inner}*")),
                Tag::A => match &el.href {
                    Some(h) => out.push_str(&format!("[{inner}]({h})")),
                    None => out.push_str(&inner),
                },
                // Blocks nested in inline context only occur inside list
                // items and are handled there.
                _ => {
                    out.push(' ');
                    out.push_str(&inner);
                    out.push(' ');
                }
            }
        }
    }
}

struct ItemLines<'a> {
    lines: &'a mut Vec<String>,
    first_line: String,
    continuation: String,
    first: bool,
}

impl ItemLines<'_> {
    fn emit(&mut self, text: String) {
        if self.first {
            self.lines.push(format!("{}{text}", self.first_line).trim_end().to_string());
            self.first = false;
        } else if !text.is_empty() {
            self.lines.push(format!("{}{text}", self.continuation));
        }
    }
}

fn list_lines(list: &Element, indent: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let pad = " ".repeat(indent);
    for (k, item) in list
        .children
        .iter()
        .filter_map(|n| match n {
            FragNode::Element(el) if el.tag == Tag::Li => Some(el),
            _ => None,
        })
        .enumerate()
    {
        let marker = if list.tag == Tag::Ol {
            format!("{}. ", k + 1)
        } else {
            "- ".to_string()
        };
        let child_indent = indent + marker.len();

        let mut item_lines = ItemLines {
            lines: &mut lines,
            first_line: format!("{pad}{marker}"),
            continuation: " ".repeat(child_indent),
            first: true,
        };
        let mut run: Vec<&FragNode> = Vec::new();
        for child in &item.children {
            match child {
                FragNode::Element(el) if matches!(el.tag, Tag::Ul | Tag::Ol) => {
                    if !run.is_empty() || item_lines.first {
                        item_lines.emit(inline_refs(&run));
                        run.clear();
                    }
                    item_lines.lines.extend(list_lines(el, child_indent));
                }
                FragNode::Element(el) if el.tag == Tag::P => {
                    if !run.is_empty() {
                        item_lines.emit(inline_refs(&run));
                        run.clear();
                    }
                    item_lines.emit(inline(&el.children));
                }
                other => run.push(other),
            }
        }
        if !run.is_empty() || item_lines.first {
            item_lines.emit(inline_refs(&run));
        }
    }
    lines
}
