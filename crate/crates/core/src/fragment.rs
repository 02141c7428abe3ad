//! Restricted HTML fragments.
//!
//! Node content is a small HTML subset: `p`, `ul`, `ol`, `li`, `strong`, `b`,
//! `em`, `i`, `a` (with an optional `href`) and `div class="export"`. The
//! parser is strict: unknown elements, unknown attributes, mismatched tags and
//! misplaced blocks are rejected rather than repaired. Serialization is
//! canonical (lowercase tags, double-quoted attributes, minimal escaping,
//! whitespace-only text between blocks dropped), so two fragments that parse
//! to the same tree always serialize to the same bytes.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("element <{0}> is not allowed")]
    DisallowedElement(String),
    #[error("attribute `{attr}` is not allowed on <{tag}>")]
    DisallowedAttribute { tag: String, attr: String },
    #[error("<div> must carry class=\"export\"")]
    PlainDiv,
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("<{child}> cannot appear inside {parent}")]
    Misplaced { child: String, parent: String },
    #[error("text cannot appear directly inside <{0}>")]
    MisplacedText(String),
    #[error("unexpected closing tag </{found}>, expected {expected}")]
    MismatchedClose { found: String, expected: String },
    #[error("unclosed <{0}>")]
    Unclosed(String),
    #[error("more than one export block")]
    MultipleExportBlocks,
    #[error("export block must be the last top-level element")]
    ExportNotLast,
    #[error("malformed markup at byte {0}")]
    Syntax(usize),
}

/// The whitelisted element names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    P,
    Ul,
    Ol,
    Li,
    Strong,
    B,
    Em,
    I,
    A,
    /// Always the export container; plain divs are rejected.
    Div,
}

impl Tag {
    pub fn from_name(name: &str) -> Option<Tag> {
        Some(match name.to_ascii_lowercase().as_str() {
            "p" => Tag::P,
            "ul" => Tag::Ul,
            "ol" => Tag::Ol,
            "li" => Tag::Li,
            "strong" => Tag::Strong,
            "b" => Tag::B,
            "em" => Tag::Em,
            "i" => Tag::I,
            "a" => Tag::A,
            "div" => Tag::Div,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::P => "p",
            Tag::Ul => "ul",
            Tag::Ol => "ol",
            Tag::Li => "li",
            Tag::Strong => "strong",
            Tag::B => "b",
            Tag::Em => "em",
            Tag::I => "i",
            Tag::A => "a",
            Tag::Div => "div",
        }
    }

    /// Block-level elements start a new line in plain-text extraction.
    pub fn is_block(self) -> bool {
        matches!(self, Tag::P | Tag::Ul | Tag::Ol | Tag::Li | Tag::Div)
    }

    pub fn is_inline(self) -> bool {
        !self.is_block()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FragNode {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: Tag,
    /// Only ever set on `a`.
    pub href: Option<String>,
    pub children: Vec<FragNode>,
}

impl Element {
    pub fn is_export(&self) -> bool {
        self.tag == Tag::Div
    }
}

/// A validated, canonically serialized content fragment.
#[derive(Clone, PartialEq, Eq)]
pub struct RichFragment {
    nodes: Vec<FragNode>,
    canonical: String,
}

impl fmt::Debug for RichFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RichFragment({:?})", self.canonical)
    }
}

impl fmt::Display for RichFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl Default for RichFragment {
    fn default() -> Self {
        RichFragment::empty()
    }
}

impl std::str::FromStr for RichFragment {
    type Err = FragmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RichFragment::parse(s)
    }
}

impl RichFragment {
    pub fn empty() -> RichFragment {
        RichFragment {
            nodes: Vec::new(),
            canonical: String::new(),
        }
    }

    /// Parses and validates markup, producing its canonical form.
    pub fn parse(input: &str) -> Result<RichFragment, FragmentError> {
        let nodes = Parser::new(input).parse()?;
        RichFragment::from_nodes(nodes)
    }

    /// Builds a fragment from an already-constructed node list, re-running
    /// the structural checks.
    pub fn from_nodes(nodes: Vec<FragNode>) -> Result<RichFragment, FragmentError> {
        let mut nodes = nodes;
        normalize_children(None, &mut nodes);
        validate_children(None, &nodes)?;
        validate_export_position(&nodes)?;
        let mut canonical = String::new();
        serialize_nodes(&nodes, &mut canonical);
        Ok(RichFragment { nodes, canonical })
    }

    pub fn as_str(&self) -> &str {
        &self.canonical
    }

    pub fn nodes(&self) -> &[FragNode] {
        &self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The trailing export container, if any.
    pub fn export_block(&self) -> Option<&Element> {
        match self.nodes.last() {
            Some(FragNode::Element(el)) if el.is_export() => Some(el),
            _ => None,
        }
    }

    pub fn has_export_block(&self) -> bool {
        self.export_block().is_some()
    }

    /// The inner content of the export block, unwrapped.
    pub fn export_payload(&self) -> Option<RichFragment> {
        self.export_block().map(|el| {
            RichFragment::from_nodes(el.children.clone())
                .expect("export payload of a valid fragment is valid")
        })
    }

    /// Everything except the export block.
    pub fn without_export(&self) -> RichFragment {
        let mut nodes = self.nodes.clone();
        if self.has_export_block() {
            nodes.pop();
        }
        RichFragment::from_nodes(nodes).expect("prefix of a valid fragment is valid")
    }

    /// Replaces (or adds) the export block with `payload` as its contents.
    pub fn with_export(&self, payload: &RichFragment) -> Result<RichFragment, FragmentError> {
        let mut nodes = self.without_export().nodes;
        nodes.push(FragNode::Element(Element {
            tag: Tag::Div,
            href: None,
            children: payload.nodes.clone(),
        }));
        RichFragment::from_nodes(nodes)
    }

    /// Appends another fragment's nodes after this one's.
    pub fn concat(&self, other: &RichFragment) -> Result<RichFragment, FragmentError> {
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().cloned());
        RichFragment::from_nodes(nodes)
    }

    /// Every `href` value in document order.
    pub fn hrefs(&self) -> Vec<String> {
        let mut out = Vec::new();
        walk(&self.nodes, &mut |el| {
            if let Some(h) = &el.href {
                out.push(h.clone());
            }
        });
        out
    }

    /// The set of element kinds that occur anywhere in the fragment.
    pub fn tags_used(&self) -> BTreeSet<Tag> {
        let mut out = BTreeSet::new();
        walk(&self.nodes, &mut |el| {
            out.insert(el.tag);
        });
        out
    }
}

fn walk<'a>(nodes: &'a [FragNode], f: &mut impl FnMut(&'a Element)) {
    for node in nodes {
        if let FragNode::Element(el) = node {
            f(el);
            walk(&el.children, f);
        }
    }
}

fn context_name(parent: Option<Tag>) -> String {
    match parent {
        None => "the top level".to_string(),
        Some(t) => format!("<{t}>"),
    }
}

fn is_whitespace_text(node: &FragNode) -> bool {
    matches!(node, FragNode::Text(t) if t.chars().all(char::is_whitespace))
}

fn is_block_node(node: Option<&FragNode>) -> bool {
    match node {
        None => true,
        Some(FragNode::Element(el)) => el.tag.is_block(),
        Some(FragNode::Text(_)) => false,
    }
}

/// Drops empty text, merges adjacent text and removes whitespace-only text
/// that sits next to a block boundary.
fn normalize_children(parent: Option<Tag>, nodes: &mut Vec<FragNode>) {
    let mut merged: Vec<FragNode> = Vec::with_capacity(nodes.len());
    for node in nodes.drain(..) {
        match node {
            FragNode::Text(t) if t.is_empty() => {}
            FragNode::Text(t) => {
                if let Some(FragNode::Text(prev)) = merged.last_mut() {
                    prev.push_str(&t);
                } else {
                    merged.push(FragNode::Text(t));
                }
            }
            FragNode::Element(mut el) => {
                normalize_children(Some(el.tag), &mut el.children);
                merged.push(FragNode::Element(el));
            }
        }
    }

    match parent {
        Some(Tag::Ul) | Some(Tag::Ol) => merged.retain(|n| !is_whitespace_text(n)),
        None | Some(Tag::Div) | Some(Tag::Li) => {
            let keep: Vec<bool> = (0..merged.len())
                .map(|i| {
                    if !is_whitespace_text(&merged[i]) {
                        return true;
                    }
                    let prev = if i == 0 { None } else { merged.get(i - 1) };
                    let next = merged.get(i + 1);
                    !(is_block_node(prev) || is_block_node(next))
                })
                .collect();
            let mut flags = keep.into_iter();
            merged.retain(|_| flags.next().unwrap_or(true));
        }
        _ => {}
    }
    *nodes = merged;
}

fn validate_children(parent: Option<Tag>, nodes: &[FragNode]) -> Result<(), FragmentError> {
    for node in nodes {
        match node {
            FragNode::Text(_) => {
                if let Some(t @ (Tag::Ul | Tag::Ol)) = parent {
                    return Err(FragmentError::MisplacedText(t.name().to_string()));
                }
            }
            FragNode::Element(el) => {
                check_placement(parent, el.tag)?;
                if el.href.is_some() && el.tag != Tag::A {
                    return Err(FragmentError::DisallowedAttribute {
                        tag: el.tag.name().to_string(),
                        attr: "href".to_string(),
                    });
                }
                validate_children(Some(el.tag), &el.children)?;
            }
        }
    }
    Ok(())
}

fn check_placement(parent: Option<Tag>, child: Tag) -> Result<(), FragmentError> {
    let ok = match child {
        Tag::Div => parent.is_none(),
        Tag::Li => matches!(parent, Some(Tag::Ul | Tag::Ol)),
        Tag::P | Tag::Ul | Tag::Ol => matches!(parent, None | Some(Tag::Li) | Some(Tag::Div)),
        Tag::A => !matches!(parent, Some(Tag::Ul | Tag::Ol | Tag::A)),
        Tag::Strong | Tag::B | Tag::Em | Tag::I => !matches!(parent, Some(Tag::Ul | Tag::Ol)),
    };
    if ok {
        Ok(())
    } else {
        Err(FragmentError::Misplaced {
            child: child.name().to_string(),
            parent: context_name(parent),
        })
    }
}

fn validate_export_position(nodes: &[FragNode]) -> Result<(), FragmentError> {
    let exports: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, FragNode::Element(el) if el.is_export()))
        .map(|(i, _)| i)
        .collect();
    if exports.len() > 1 {
        return Err(FragmentError::MultipleExportBlocks);
    }
    if let Some(&i) = exports.first() {
        if i + 1 != nodes.len() {
            return Err(FragmentError::ExportNotLast);
        }
    }
    Ok(())
}

pub(crate) fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
}

fn serialize_nodes(nodes: &[FragNode], out: &mut String) {
    for node in nodes {
        match node {
            FragNode::Text(t) => escape_text(t, out),
            FragNode::Element(el) => {
                out.push('<');
                out.push_str(el.tag.name());
                match el.tag {
                    Tag::Div => out.push_str(" class=\"export\""),
                    Tag::A => {
                        if let Some(h) = &el.href {
                            out.push_str(" href=\"");
                            escape_attr(h, out);
                            out.push('"');
                        }
                    }
                    _ => {}
                }
                out.push('>');
                serialize_nodes(&el.children, out);
                out.push_str("</");
                out.push_str(el.tag.name());
                out.push('>');
            }
        }
    }
}

/// Decodes the character references we recognize; anything else is literal.
pub(crate) fn decode_entities(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        match tail.find(';').filter(|&semi| semi <= 10) {
            Some(semi) => {
                let name = &tail[1..semi];
                match decode_reference(name) {
                    Some(c) => {
                        out.push(c);
                        rest = &tail[semi + 1..];
                    }
                    None => {
                        out.push('&');
                        rest = &tail[1..];
                    }
                }
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_reference(name: &str) -> Option<char> {
    match name {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some('\u{a0}'),
        _ => {
            let num = name.strip_prefix('#')?;
            let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
                u32::from_str_radix(hex, 16).ok()?
            } else {
                num.parse::<u32>().ok()?
            };
            char::from_u32(code).filter(|&c| c != '\0')
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

struct OpenElement {
    el: Element,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn parse(mut self) -> Result<Vec<FragNode>, FragmentError> {
        let mut top: Vec<FragNode> = Vec::new();
        let mut stack: Vec<OpenElement> = Vec::new();

        while self.pos < self.src.len() {
            let rest = self.rest();
            if rest.starts_with("</") {
                let name = self.parse_close()?;
                let open = stack.pop().ok_or_else(|| FragmentError::MismatchedClose {
                    found: name.clone(),
                    expected: "no closing tag".to_string(),
                })?;
                if Tag::from_name(&name) != Some(open.el.tag) {
                    return Err(FragmentError::MismatchedClose {
                        found: name,
                        expected: format!("</{}>", open.el.tag),
                    });
                }
                push_node(&mut top, &mut stack, FragNode::Element(open.el));
            } else if rest.starts_with("<!") || rest.starts_with("<?") {
                return Err(FragmentError::Syntax(self.pos));
            } else if opens_tag(rest) {
                let el = self.parse_open()?;
                stack.push(OpenElement { el });
            } else {
                let text = self.parse_text();
                push_node(&mut top, &mut stack, FragNode::Text(text));
            }
        }
        if let Some(open) = stack.pop() {
            return Err(FragmentError::Unclosed(open.el.tag.name().to_string()));
        }
        Ok(top)
    }

    fn parse_text(&mut self) -> String {
        let rest = self.rest();
        // The first character is known not to open a tag; any later '<' that
        // does not open a tag is literal text.
        let mut from = rest.chars().next().map_or(0, char::len_utf8);
        let mut end = rest.len();
        while let Some(i) = rest[from..].find('<') {
            let at = from + i;
            if opens_tag(&rest[at..]) {
                end = at;
                break;
            }
            from = at + 1;
        }
        self.pos += end;
        decode_entities(&rest[..end])
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        let trimmed = rest.trim_start_matches([' ', '\t', '\n', '\r', '\u{c}']);
        self.pos += rest.len() - trimmed.len();
    }

    fn take_name(&mut self) -> String {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == ':'))
            .unwrap_or(rest.len());
        self.pos += len;
        rest[..len].to_string()
    }

    fn parse_close(&mut self) -> Result<String, FragmentError> {
        let start = self.pos;
        self.pos += 2;
        let name = self.take_name();
        self.skip_ws();
        if name.is_empty() || !self.rest().starts_with('>') {
            return Err(FragmentError::Syntax(start));
        }
        self.pos += 1;
        Ok(name.to_ascii_lowercase())
    }

    fn parse_open(&mut self) -> Result<Element, FragmentError> {
        let start = self.pos;
        self.pos += 1;
        let name = self.take_name();
        let tag =
            Tag::from_name(&name).ok_or_else(|| FragmentError::DisallowedElement(name.clone()))?;
        let mut attrs: Vec<(String, String)> = Vec::new();
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.starts_with('>') {
                self.pos += 1;
                break;
            }
            if rest.starts_with("/>") {
                // No void elements in the whitelist.
                return Err(FragmentError::Syntax(start));
            }
            let attr = self.take_name().to_ascii_lowercase();
            if attr.is_empty() {
                return Err(FragmentError::Syntax(self.pos));
            }
            self.skip_ws();
            if !self.rest().starts_with('=') {
                return Err(FragmentError::DisallowedAttribute {
                    tag: tag.name().to_string(),
                    attr,
                });
            }
            self.pos += 1;
            self.skip_ws();
            let value = self.parse_attr_value().ok_or(FragmentError::Syntax(self.pos))?;
            if attrs.iter().any(|(a, _)| *a == attr) {
                return Err(FragmentError::DuplicateAttribute(attr));
            }
            attrs.push((attr, value));
        }

        let mut href = None;
        let mut export_class = false;
        for (attr, value) in attrs {
            match (tag, attr.as_str()) {
                (Tag::A, "href") => href = Some(value),
                (Tag::Div, "class") if value.trim() == "export" => export_class = true,
                _ => {
                    return Err(FragmentError::DisallowedAttribute {
                        tag: tag.name().to_string(),
                        attr,
                    })
                }
            }
        }
        if tag == Tag::Div && !export_class {
            return Err(FragmentError::PlainDiv);
        }
        Ok(Element {
            tag,
            href,
            children: Vec::new(),
        })
    }

    fn parse_attr_value(&mut self) -> Option<String> {
        let rest = self.rest();
        let quote = rest.chars().next()?;
        if quote == '"' || quote == '\'' {
            let end = rest[1..].find(quote)?;
            self.pos += end + 2;
            Some(decode_entities(&rest[1..1 + end]))
        } else {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == '>')
                .unwrap_or(rest.len());
            if end == 0 || rest[..end].contains(['"', '\'', '<', '=', '`']) {
                return None;
            }
            self.pos += end;
            Some(decode_entities(&rest[..end]))
        }
    }
}

fn opens_tag(s: &str) -> bool {
    match s.strip_prefix('<') {
        Some(after) => after.starts_with(|c: char| c.is_ascii_alphabetic() || c == '/'),
        None => false,
    }
}

fn push_node(top: &mut Vec<FragNode>, stack: &mut [OpenElement], node: FragNode) {
    match stack.last_mut() {
        Some(open) => open.el.children.push(node),
        None => top.push(node),
    }
}
