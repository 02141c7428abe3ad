//! Markdown import.
//!
//! ATX or setext headings h1..h6 become nodes at the same depth below the
//! root. A skipped level is bridged by an untitled, empty node so heading
//! levels survive a round trip through the exporter. Body text goes to the
//! most recent heading; text before the first heading goes to the root.
//! Bodies of nodes that end up with children are wrapped in an export block,
//! since the exporter would otherwise drop them.

use pulldown_cmark::{Event, HeadingLevel, Options, Parser, Tag as MdTag, TagEnd};
use rand::Rng;
use treedoc_core::fragment::{Element, FragNode};
use treedoc_core::tree::validate_title;
use treedoc_core::{now_ms, Document, DocumentTree, Node, NodeId, RichFragment, Tag, TreeError};

struct Section {
    depth: usize,
    title: String,
    body: Vec<FragNode>,
}

/// Open containers; `None` marks one that contributes no element of its own.
#[derive(Default)]
struct Builder {
    stack: Vec<Option<Element>>,
    out: Vec<FragNode>,
}

fn push_merged(list: &mut Vec<FragNode>, node: FragNode) {
    if let (Some(FragNode::Text(prev)), FragNode::Text(t)) = (list.last_mut(), &node) {
        prev.push_str(t);
        return;
    }
    list.push(node);
}

impl Builder {
    fn in_element(&self) -> bool {
        self.stack.iter().any(Option::is_some)
    }

    fn push(&mut self, node: FragNode) {
        match self.stack.iter_mut().rev().find_map(Option::as_mut) {
            Some(el) => push_merged(&mut el.children, node),
            None => push_merged(&mut self.out, node),
        }
    }

    fn open(&mut self, tag: Tag, href: Option<String>) {
        self.stack.push(Some(Element { tag, href, children: Vec::new() }));
    }

    fn open_transparent(&mut self) {
        self.stack.push(None);
    }

    fn close(&mut self) {
        if let Some(Some(el)) = self.stack.pop() {
            if el.tag == Tag::P && el.children.iter().all(is_blank) {
                return;
            }
            self.push(FragNode::Element(el));
        }
    }

    fn text(&mut self, t: &str) {
        self.push(FragNode::Text(t.to_string()));
    }
}

fn is_blank(n: &FragNode) -> bool {
    matches!(n, FragNode::Text(t) if t.trim().is_empty())
}

fn level(l: HeadingLevel) -> usize {
    match l {
        HeadingLevel::H1 => 1,
        HeadingLevel::H2 => 2,
        HeadingLevel::H3 => 3,
        HeadingLevel::H4 => 4,
        HeadingLevel::H5 => 5,
        HeadingLevel::H6 => 6,
    }
}

/// Splits markdown into the preamble and one section per heading.
fn sections(md: &str) -> (Vec<FragNode>, Vec<Section>) {
    let mut preamble = Vec::new();
    let mut done: Vec<Section> = Vec::new();
    let mut b = Builder::default();
    // Plain-text title of the structural heading being read.
    let mut heading: Option<(usize, String)> = None;
    // Nesting of non-structural headings, which become bold paragraphs.
    let mut inline_heading = 0usize;

    let flush = |b: &mut Builder, done: &mut Vec<Section>, preamble: &mut Vec<FragNode>| {
        let body = std::mem::take(&mut b.out);
        match done.last_mut() {
            Some(s) => s.body.extend(body),
            None => preamble.extend(body),
        }
    };

    for ev in Parser::new_ext(md, Options::empty()) {
        if let Some((_, title)) = heading.as_mut() {
            match ev {
                Event::End(TagEnd::Heading(_)) => {
                    let (depth, title) = heading.take().unwrap();
                    let title = title.split_whitespace().collect::<Vec<_>>().join(" ");
                    done.push(Section { depth, title, body: Vec::new() });
                }
                Event::Text(t) | Event::Code(t) => title.push_str(&t),
                Event::SoftBreak | Event::HardBreak => title.push(' '),
                _ => {}
            }
            continue;
        }
        match ev {
            Event::Start(MdTag::Heading { level: l, .. }) => {
                if b.in_element() {
                    inline_heading += 1;
                    b.open(Tag::P, None);
                    b.open(Tag::Strong, None);
                } else {
                    flush(&mut b, &mut done, &mut preamble);
                    heading = Some((level(l), String::new()));
                }
            }
            Event::End(TagEnd::Heading(_)) => {
                inline_heading -= 1;
                b.close();
                b.close();
            }
            Event::Start(MdTag::Paragraph) => b.open(Tag::P, None),
            Event::Start(MdTag::CodeBlock(_)) => b.open(Tag::P, None),
            Event::Start(MdTag::List(None)) => b.open(Tag::Ul, None),
            Event::Start(MdTag::List(Some(_))) => b.open(Tag::Ol, None),
            Event::Start(MdTag::Item) => b.open(Tag::Li, None),
            Event::Start(MdTag::Strong) => b.open(Tag::Strong, None),
            Event::Start(MdTag::Emphasis) => b.open(Tag::Em, None),
            Event::Start(MdTag::Link { dest_url, .. }) => b.open(Tag::A, Some(dest_url.to_string())),
            Event::Start(_) => b.open_transparent(),
            Event::End(_) => b.close(),
            Event::Text(t) | Event::Code(t) => b.text(&t),
            Event::SoftBreak | Event::HardBreak => b.text(" "),
            // Raw HTML, rules and the rest carry nothing the fragment
            // whitelist can hold.
            _ => {}
        }
    }
    debug_assert_eq!(inline_heading, 0);
    flush(&mut b, &mut done, &mut preamble);
    (preamble, done)
}

fn fragment(body: Vec<FragNode>, as_export: bool) -> Result<RichFragment, TreeError> {
    let nodes = if as_export && !body.is_empty() {
        vec![FragNode::Element(Element { tag: Tag::Div, href: None, children: body })]
    } else {
        body
    };
    Ok(RichFragment::from_nodes(nodes)?)
}

/// Builds a document from markdown text.
pub fn import(md: &str, doc_id: &str, root_title: &str, rng: &mut impl Rng) -> Result<Document, TreeError> {
    let root_title = root_title.trim();
    if root_title.is_empty() {
        return Err(TreeError::EmptyTitle);
    }
    validate_title(root_title)?;
    let (preamble, secs) = sections(md);

    struct Draft {
        id: NodeId,
        title: String,
        body: Vec<FragNode>,
        children: Vec<usize>,
    }
    let mut drafts = vec![Draft { id: NodeId::random(rng), title: root_title.into(), body: preamble, children: vec![] }];
    // (depth, draft index) of the open heading chain.
    let mut chain: Vec<(usize, usize)> = vec![(0, 0)];
    for s in secs {
        validate_title(&s.title)?;
        while chain.last().unwrap().0 >= s.depth {
            chain.pop();
        }
        loop {
            let (d, parent) = *chain.last().unwrap();
            let filler = d + 1 < s.depth;
            let idx = drafts.len();
            drafts.push(Draft {
                id: NodeId::random(rng),
                title: if filler { String::new() } else { s.title.clone() },
                body: Vec::new(),
                children: vec![],
            });
            drafts[parent].children.push(idx);
            chain.push((d + 1, idx));
            if !filler {
                drafts[idx].body = s.body;
                break;
            }
        }
    }

    let ids: Vec<NodeId> = drafts.iter().map(|d| d.id.clone()).collect();
    let mut nodes = Vec::with_capacity(drafts.len());
    for d in drafts {
        let content = fragment(d.body, !d.children.is_empty())?;
        nodes.push(Node {
            id: d.id,
            title: d.title,
            content,
            children: d.children.iter().map(|&i| ids[i].clone()).collect(),
        });
    }
    let now = now_ms();
    let tree = DocumentTree::from_parts(doc_id.to_string(), ids[0].clone(), nodes, now, now)
        .expect("importer builds a well-formed tree");
    Ok(Document::new(tree))
}
