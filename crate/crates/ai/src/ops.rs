//! The four editing-button operations.
//!
//! Each op runs in two halves so callers can drop their document lock while
//! the model works: [`prepare`] reads the tree and renders the prompt,
//! [`finish`] validates the reply into a [`PendingSuggestion`]. Neither half
//! touches the tree.

use std::collections::HashMap;
use std::str::FromStr;

use serde_json::Value;
use treedoc_core::fragment::{FragNode, Tag};
use treedoc_core::{
    ChildProposal, DocumentTree, NodeId, Origin, PendingSuggestion, RichFragment, SuggestionPayload,
};
use treedoc_llm::{ChatModel, ChatRequest, Message, Temperature, Tier};

use crate::prompt;
use crate::AiError;

pub const MAX_SPLIT_CHILDREN: usize = 5;
pub const MAX_KEY_POINTS: usize = 5;
/// A key point must stay strictly below this many words.
pub const MAX_POINT_WORDS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AiOp {
    Split,
    OutlineFromChildren,
    Paragraph,
    OutlineFromParagraph,
}

impl AiOp {
    pub const ALL: [AiOp; 4] = [AiOp::Split, AiOp::OutlineFromChildren, AiOp::Paragraph, AiOp::OutlineFromParagraph];

    /// Name used in API paths.
    pub fn as_str(self) -> &'static str {
        match self {
            AiOp::Split => "split",
            AiOp::OutlineFromChildren => "outline_from_children",
            AiOp::Paragraph => "paragraph",
            AiOp::OutlineFromParagraph => "outline_from_paragraph",
        }
    }

    /// Name recorded in suggestion origins and version labels.
    pub fn origin_name(self) -> &'static str {
        match self {
            AiOp::Split => "split_into_subsections",
            AiOp::OutlineFromChildren => "generate_outline_from_children",
            AiOp::Paragraph => "generate_paragraph",
            AiOp::OutlineFromParagraph => "generate_outline_from_paragraph",
        }
    }

    pub fn origin(self) -> Origin {
        Origin::Button(self.origin_name().to_string())
    }
}

impl FromStr for AiOp {
    type Err = String;

    fn from_str(s: &str) -> Result<AiOp, String> {
        AiOp::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| format!("unknown operation {s:?}"))
    }
}

/// Everything [`finish`] needs, captured from the tree at prepare time.
#[derive(Debug, Clone)]
pub struct PreparedOp {
    pub op: AiOp,
    pub node: NodeId,
    pub request: ChatRequest,
    /// Full node content at prepare time.
    content: RichFragment,
}

fn request(prompt: String, temperature: Temperature) -> ChatRequest {
    ChatRequest {
        tier: Tier::Buttons,
        temperature,
        messages: vec![Message::system(prompt)],
        tools: Vec::new(),
    }
}

/// Checks preconditions and renders the prompt.
pub fn prepare(
    op: AiOp,
    tree: &DocumentTree,
    node: &NodeId,
    user_prompt: Option<&str>,
) -> Result<PreparedOp, AiError> {
    let n = tree.get_node(node)?;
    let content = n.content.clone();
    let text = match op {
        AiOp::Split => {
            if content.is_empty() {
                return Err(AiError::EmptyContent);
            }
            prompt::render(prompt::SPLIT, &[("parentContent", content.as_str())])
        }
        AiOp::OutlineFromChildren => {
            if n.children.is_empty() {
                return Err(AiError::NoChildren);
            }
            let children: Vec<String> = n
                .children
                .iter()
                .map(|c| {
                    let child = tree.get_node(c).expect("child of a live node");
                    format!("<child title=\"{}\">\n{}\n</child>", child.title, child.content.as_str())
                })
                .collect();
            prompt::render(
                prompt::OUTLINE_FROM_CHILDREN,
                &[
                    ("originalContent", content.without_export().as_str()),
                    ("childrenContent", &children.join("\n")),
                ],
            )
        }
        AiOp::Paragraph => {
            let raw = content.without_export();
            if treedoc_core::strip_plain_text(&raw).is_empty() {
                return Err(AiError::EmptyOutline);
            }
            let existing = content.export_payload().unwrap_or_else(RichFragment::empty);
            let title_block = if n.title.is_empty() {
                String::new()
            } else {
                format!("<node_title>\n{}\n</node_title>\n\n", n.title)
            };
            let user_prompt = user_prompt.map(str::trim).filter(|p| !p.is_empty());
            let instructions = match user_prompt {
                Some(p) => format!("\n<user_instructions>\n{p}\n</user_instructions>\n\n"),
                None => "\n".to_string(),
            };
            let follow = if user_prompt.is_some() {
                "- Follow any additional instructions provided above"
            } else {
                ""
            };
            prompt::render(
                prompt::PARAGRAPH,
                &[
                    ("nodeTitleBlock", &title_block),
                    ("contentExceptExports", raw.as_str()),
                    ("existingExportContent", existing.as_str()),
                    ("userInstructionsBlock", &instructions),
                    ("followInstructionsLine", follow),
                ],
            )
        }
        AiOp::OutlineFromParagraph => {
            let payload = content
                .export_payload()
                .filter(|p| !p.is_empty())
                .ok_or(AiError::NoExportBlock)?;
            prompt::render(
                prompt::OUTLINE_FROM_PARAGRAPH,
                &[
                    ("exportContent", payload.as_str()),
                    ("currentOutline", content.without_export().as_str()),
                ],
            )
        }
    };
    let temperature = match op {
        AiOp::Paragraph => Temperature::Creative,
        _ => Temperature::Deterministic,
    };
    Ok(PreparedOp { op, node: node.clone(), request: request(text, temperature), content })
}

/// Validates the model reply and builds the suggestion.
pub fn finish(prepared: &PreparedOp, reply: Option<&str>) -> Result<PendingSuggestion, AiError> {
    let raw = reply.unwrap_or("");
    let malformed = |reason: String| AiError::MalformedModelOutput { reason, raw: raw.to_string() };
    let content = &prepared.content;
    let payload = match prepared.op {
        AiOp::Split => {
            let children = parse_split_reply(raw, content).map_err(malformed)?;
            SuggestionPayload::Children(children)
        }
        AiOp::OutlineFromChildren => {
            let outline = parse_outline_reply(raw).map_err(malformed)?;
            let new = match content.export_payload() {
                Some(p) => outline.with_export(&p).map_err(|e| malformed(e.to_string()))?,
                None => outline,
            };
            SuggestionPayload::Content(new)
        }
        AiOp::Paragraph => {
            let para = parse_fragment_reply(raw).map_err(malformed)?;
            if para.is_empty() {
                return Err(malformed("empty reply".into()));
            }
            if para.has_export_block() {
                return Err(malformed("reply contains an export block".into()));
            }
            let source = content.without_export();
            if let Some(missing) = missing_href(&source, &para) {
                return Err(malformed(format!("link dropped: {missing}")));
            }
            SuggestionPayload::Content(source.with_export(&para).map_err(|e| malformed(e.to_string()))?)
        }
        AiOp::OutlineFromParagraph => {
            let outline = parse_outline_reply(raw).map_err(malformed)?;
            let payload = content.export_payload().expect("checked at prepare");
            SuggestionPayload::Content(outline.with_export(&payload).map_err(|e| malformed(e.to_string()))?)
        }
    };
    payload.validate().map_err(|e| malformed(e.to_string()))?;
    Ok(PendingSuggestion { target: prepared.node.clone(), payload, origin: prepared.op.origin() })
}

/// Prepare, call the model, finish.
pub fn run(
    op: AiOp,
    tree: &DocumentTree,
    node: &NodeId,
    user_prompt: Option<&str>,
    model: &dyn ChatModel,
) -> Result<PendingSuggestion, AiError> {
    let prepared = prepare(op, tree, node, user_prompt)?;
    let reply = model.chat(&prepared.request)?;
    finish(&prepared, reply.text.as_deref())
}

pub fn split_into_subsections(
    tree: &DocumentTree,
    node: &NodeId,
    model: &dyn ChatModel,
) -> Result<PendingSuggestion, AiError> {
    run(AiOp::Split, tree, node, None, model)
}

pub fn generate_outline_from_children(
    tree: &DocumentTree,
    node: &NodeId,
    model: &dyn ChatModel,
) -> Result<PendingSuggestion, AiError> {
    run(AiOp::OutlineFromChildren, tree, node, None, model)
}

pub fn generate_paragraph(
    tree: &DocumentTree,
    node: &NodeId,
    user_prompt: Option<&str>,
    model: &dyn ChatModel,
) -> Result<PendingSuggestion, AiError> {
    run(AiOp::Paragraph, tree, node, user_prompt, model)
}

pub fn generate_outline_from_paragraph(
    tree: &DocumentTree,
    node: &NodeId,
    model: &dyn ChatModel,
) -> Result<PendingSuggestion, AiError> {
    run(AiOp::OutlineFromParagraph, tree, node, None, model)
}

/// Removes one enclosing Markdown code fence, if the whole reply is fenced.
pub fn strip_code_fence(reply: &str) -> &str {
    let t = reply.trim();
    let Some(body) = t.strip_prefix("```") else { return t };
    let Some(body) = body.strip_suffix("```") else { return t };
    match body.find('\n') {
        Some(nl) if body[..nl].chars().all(|c| c.is_ascii_alphanumeric()) => body[nl + 1..].trim(),
        _ => t,
    }
}

fn parse_fragment_reply(raw: &str) -> Result<RichFragment, String> {
    RichFragment::parse(strip_code_fence(raw)).map_err(|e| format!("invalid fragment: {e}"))
}

/// Parses a split reply: a JSON array of 1 to 5 `{title, content}` objects
/// whose content uses no element kind absent from `source`.
pub fn parse_split_reply(raw: &str, source: &RichFragment) -> Result<Vec<ChildProposal>, String> {
    let value: Value =
        serde_json::from_str(strip_code_fence(raw)).map_err(|e| format!("reply is not JSON: {e}"))?;
    let items = value.as_array().ok_or("reply is not a JSON array")?;
    if items.is_empty() {
        return Err("reply has no children".into());
    }
    if items.len() > MAX_SPLIT_CHILDREN {
        return Err(format!("{} children, at most {MAX_SPLIT_CHILDREN} allowed", items.len()));
    }
    let allowed = source.tags_used();
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let title = item
            .get("title")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| format!("child {i} has no title"))?;
        let content = item
            .get("content")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("child {i} has no content"))?;
        let content = RichFragment::parse(content).map_err(|e| format!("child {i}: invalid fragment: {e}"))?;
        if let Some(tag) = content.tags_used().difference(&allowed).next() {
            return Err(format!("child {i} uses <{tag}>, which the source does not"));
        }
        out.push(ChildProposal { title: title.to_string(), content });
    }
    Ok(out)
}

/// Parses an outline reply: at least one top-level list, at most 5
/// top-level points, and every point (nested ones too) under 30 words of its
/// own text.
pub fn parse_outline_reply(raw: &str) -> Result<RichFragment, String> {
    let frag = parse_fragment_reply(raw)?;
    if frag.has_export_block() {
        return Err("reply contains an export block".into());
    }
    let lists: Vec<&[FragNode]> = frag
        .nodes()
        .iter()
        .filter_map(|n| match n {
            FragNode::Element(el) if matches!(el.tag, Tag::Ul | Tag::Ol) => Some(el.children.as_slice()),
            _ => None,
        })
        .collect();
    if lists.is_empty() {
        return Err("reply is not a list".into());
    }
    let points: usize = lists.iter().map(|items| items.len()).sum();
    if points > MAX_KEY_POINTS {
        return Err(format!("{points} key points, at most {MAX_KEY_POINTS} allowed"));
    }
    check_point_words(frag.nodes())?;
    Ok(frag)
}

fn check_point_words(nodes: &[FragNode]) -> Result<(), String> {
    for node in nodes {
        if let FragNode::Element(el) = node {
            if el.tag == Tag::Li {
                let words = point_words(&el.children);
                if words >= MAX_POINT_WORDS {
                    return Err(format!("a key point has {words} words, limit is under {MAX_POINT_WORDS}"));
                }
            }
            check_point_words(&el.children)?;
        }
    }
    Ok(())
}

/// Words of a point's own text; nested lists count as their own points.
pub fn point_words(children: &[FragNode]) -> usize {
    fn collect(nodes: &[FragNode], out: &mut String) {
        for n in nodes {
            match n {
                FragNode::Text(t) => out.push_str(t),
                FragNode::Element(el) if matches!(el.tag, Tag::Ul | Tag::Ol) => out.push(' '),
                FragNode::Element(el) => {
                    out.push(' ');
                    collect(&el.children, out);
                    out.push(' ');
                }
            }
        }
    }
    let mut text = String::new();
    collect(children, &mut text);
    text.split_whitespace().count()
}

/// First source href whose count in `reply` is lower than in `source`.
pub fn missing_href(source: &RichFragment, reply: &RichFragment) -> Option<String> {
    let mut have: HashMap<String, usize> = HashMap::new();
    for h in reply.hrefs() {
        *have.entry(h).or_default() += 1;
    }
    for h in source.hrefs() {
        match have.get_mut(&h) {
            Some(n) if *n > 0 => *n -= 1,
            _ => return Some(h),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frag(s: &str) -> RichFragment {
        RichFragment::parse(s).unwrap()
    }

    #[test]
    fn fences_are_stripped() {
        assert_eq!(strip_code_fence("```json\n[1]\n```"), "[1]");
        assert_eq!(strip_code_fence("```\n<p>x</p>\n```"), "<p>x</p>");
        assert_eq!(strip_code_fence("<p>x</p>"), "<p>x</p>");
        assert_eq!(strip_code_fence("```x y\n1```"), "```x y\n1```");
    }

    #[test]
    fn split_rejects_foreign_tags() {
        let src = frag("<ul><li>a</li></ul>");
        let ok = r#"[{"title":"A","content":"<ul><li>a</li></ul>"}]"#;
        assert_eq!(parse_split_reply(ok, &src).unwrap().len(), 1);
        let bad = r#"[{"title":"A","content":"<p>a</p>"}]"#;
        assert!(parse_split_reply(bad, &src).unwrap_err().contains("<p>"));
        assert!(parse_split_reply(r#"[{"title":" ","content":""}]"#, &src).is_err());
        assert!(parse_split_reply("[]", &src).is_err());
        assert!(parse_split_reply(r#"{"title":"A"}"#, &src).is_err());
    }

    #[test]
    fn point_words_skip_nested_lists() {
        let f = frag("<ul><li>one <b>two</b><ul><li>three four</li></ul></li></ul>");
        let FragNode::Element(ul) = &f.nodes()[0] else { panic!() };
        let FragNode::Element(li) = &ul.children[0] else { panic!() };
        assert_eq!(point_words(&li.children), 2);
    }

    #[test]
    fn outline_limits() {
        let w = |n: usize| vec!["w"; n].join(" ");
        assert!(parse_outline_reply(&format!("<ul><li>{}</li></ul>", w(29))).is_ok());
        assert!(parse_outline_reply(&format!("<ul><li>{}</li></ul>", w(30))).is_err());
        let nested = format!("<ul><li>a<ul><li>{}</li></ul></li></ul>", w(30));
        assert!(parse_outline_reply(&nested).is_err());
        let five: String = (0..5).map(|_| "<li>p</li>").collect();
        assert!(parse_outline_reply(&format!("<ol>{five}</ol>")).is_ok());
        assert!(parse_outline_reply(&format!("<ol>{five}<li>p</li></ol>")).is_err());
        assert!(parse_outline_reply(&format!("<ul>{five}</ul><ul><li>x</li></ul>")).is_err());
        assert!(parse_outline_reply("<p>no list</p>").is_err());
        assert!(parse_outline_reply("<ul><li>a</li></ul><div class=\"export\"></div>").is_err());
    }

    #[test]
    fn href_multiset() {
        let src = frag(r#"<p><a href="x">1</a><a href="x">2</a></p>"#);
        assert_eq!(missing_href(&src, &frag(r#"<p><a href="x">a</a></p>"#)), Some("x".into()));
        assert_eq!(missing_href(&src, &frag(r#"<p><a href="x">a</a> <a href="x">b</a></p>"#)), None);
    }

    #[test]
    fn op_names_round_trip() {
        for op in AiOp::ALL {
            assert_eq!(op.as_str().parse::<AiOp>().unwrap(), op);
        }
        assert!("nope".parse::<AiOp>().is_err());
    }
}
