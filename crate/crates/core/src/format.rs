//! The `treedoc/1` JSON file format.
//!
//! ```text
//! {"format":"treedoc/1","doc_id":..,"root":..,
//!  "nodes":{<id>:{"title":..,"content":..,"children":[..]}, ...},
//!  "created_ms":..,"modified_ms":..,
//!  "suggestions":[..],"versions":{<id>:[..]}}
//! ```
//!
//! Keys are written in exactly that order and `nodes` is written in preorder,
//! so saving an unchanged document reproduces the same bytes.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

use crate::fragment::RichFragment;
use crate::id::{is_valid_id, NodeId};
use crate::revision::{
    ChildProposal, Document, Origin, Suggestion, SuggestionPayload, SuggestionStatus, Version,
    VersionLog,
};
use crate::tree::{DocumentTree, Node};

pub const FORMAT_TAG: &str = "treedoc/1";

/// A file that is not a valid `treedoc/1` document. `path` names the JSON
/// location of the failure (`.` for the top level).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct FormatError {
    pub path: String,
    pub message: String,
    /// 1-based position of a syntax or type error, when known.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.path, self.message)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        Ok(())
    }
}

impl FormatError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> FormatError {
        FormatError {
            path: path.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }
}

struct PreorderNodes<'a>(&'a DocumentTree);

impl Serialize for PreorderNodes<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for node in self.0.nodes_in_order() {
            map.serialize_entry(
                node.id.as_str(),
                &NodeOut {
                    title: &node.title,
                    content: node.content.as_str(),
                    children: node.children.iter().map(NodeId::as_str).collect(),
                },
            )?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct NodeOut<'a> {
    title: &'a str,
    content: &'a str,
    children: Vec<&'a str>,
}

#[derive(Serialize)]
struct TreeOut<'a> {
    format: &'static str,
    doc_id: &'a str,
    root: &'a str,
    nodes: PreorderNodes<'a>,
    created_ms: i64,
    modified_ms: i64,
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    format: &'static str,
    doc_id: &'a str,
    root: &'a str,
    nodes: PreorderNodes<'a>,
    created_ms: i64,
    modified_ms: i64,
    suggestions: Vec<Value>,
    versions: BTreeMap<&'a str, Vec<Value>>,
}

pub fn payload_to_json(payload: &SuggestionPayload) -> Value {
    let child = |c: &ChildProposal| json!({"title": c.title, "content": c.content.as_str()});
    match payload {
        SuggestionPayload::Title(t) => json!({ "title": t }),
        SuggestionPayload::Content(c) => json!({ "content": c.as_str() }),
        SuggestionPayload::Child(c) => child(c),
        SuggestionPayload::Children(cs) => json!({ "children": cs.iter().map(child).collect::<Vec<_>>() }),
    }
}

pub fn suggestion_to_json(s: &Suggestion) -> Value {
    // serde_json's map keeps keys sorted unless preserve_order is on; build
    // the object through a struct so field order is fixed.
    #[derive(Serialize)]
    struct Out<'a> {
        id: &'a str,
        kind: &'static str,
        target: &'a str,
        payload: Value,
        origin: String,
        status: &'static str,
        created_ms: i64,
    }
    serde_json::to_value(Out {
        id: &s.id,
        kind: s.kind().as_str(),
        target: s.target.as_str(),
        payload: payload_to_json(&s.payload),
        origin: s.origin.to_string(),
        status: s.status.as_str(),
        created_ms: s.created_ms,
    })
    .expect("plain data serializes")
}

pub fn version_to_json(v: &Version) -> Value {
    #[derive(Serialize)]
    struct Out<'a> {
        seq: u32,
        label: &'a str,
        title: &'a str,
        content: &'a str,
        created_ms: i64,
    }
    serde_json::to_value(Out {
        seq: v.seq,
        label: &v.label,
        title: &v.title,
        content: v.content.as_str(),
        created_ms: v.created_ms,
    })
    .expect("plain data serializes")
}

/// Serializes only the tree portion of the format.
pub fn tree_to_json(tree: &DocumentTree) -> String {
    serde_json::to_string_pretty(&TreeOut {
        format: FORMAT_TAG,
        doc_id: tree.doc_id(),
        root: tree.root().as_str(),
        nodes: PreorderNodes(tree),
        created_ms: tree.created_ms(),
        modified_ms: tree.modified_ms(),
    })
    .expect("plain data serializes")
}

/// Serializes a full document, suggestions and versions included.
pub fn document_to_json(doc: &Document) -> String {
    let tree = &doc.tree;
    let versions = doc
        .versions()
        .iter()
        .map(|(id, vs)| (id.as_str(), vs.iter().map(version_to_json).collect()))
        .collect();
    let mut out = serde_json::to_string_pretty(&DocumentOut {
        format: FORMAT_TAG,
        doc_id: tree.doc_id(),
        root: tree.root().as_str(),
        nodes: PreorderNodes(tree),
        created_ms: tree.created_ms(),
        modified_ms: tree.modified_ms(),
        suggestions: doc.suggestions().iter().map(suggestion_to_json).collect(),
        versions,
    })
    .expect("plain data serializes");
    out.push('\n');
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    format: String,
    doc_id: String,
    root: String,
    nodes: BTreeMap<String, NodeIn>,
    created_ms: i64,
    modified_ms: i64,
    #[serde(default)]
    suggestions: Vec<SuggestionIn>,
    #[serde(default)]
    versions: BTreeMap<String, Vec<VersionIn>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeIn {
    title: String,
    content: String,
    children: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuggestionIn {
    id: String,
    kind: String,
    target: String,
    payload: Value,
    origin: String,
    status: String,
    created_ms: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VersionIn {
    seq: u32,
    label: String,
    title: String,
    content: String,
    created_ms: i64,
}

fn node_id(raw: &str, path: &str) -> Result<NodeId, FormatError> {
    if !is_valid_id(raw) {
        return Err(FormatError::at(path, format!("invalid node id {raw:?}")));
    }
    Ok(NodeId::new(raw).expect("validated"))
}

fn fragment(raw: &str, path: &str) -> Result<RichFragment, FormatError> {
    RichFragment::parse(raw).map_err(|e| FormatError::at(path, format!("invalid fragment: {e}")))
}

/// Parses a payload object of the given kind name; `path` prefixes error
/// locations.
pub fn payload_from_json(kind: &str, v: &Value, path: &str) -> Result<SuggestionPayload, FormatError> {
    let field = |obj: &Value, name: &str, p: &str| -> Result<String, FormatError> {
        obj.get(name)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| FormatError::at(format!("{p}.{name}"), "expected a string"))
    };
    let child = |obj: &Value, p: &str| -> Result<ChildProposal, FormatError> {
        Ok(ChildProposal {
            title: field(obj, "title", p)?,
            content: fragment(&field(obj, "content", p)?, &format!("{p}.content"))?,
        })
    };
    Ok(match kind {
        "new_title" => SuggestionPayload::Title(field(v, "title", path)?),
        "new_content" => SuggestionPayload::Content(fragment(
            &field(v, "content", path)?,
            &format!("{path}.content"),
        )?),
        "new_child" => SuggestionPayload::Child(child(v, path)?),
        "new_children_batch" => {
            let items = v
                .get("children")
                .and_then(Value::as_array)
                .ok_or_else(|| FormatError::at(format!("{path}.children"), "expected an array"))?;
            SuggestionPayload::Children(
                items
                    .iter()
                    .enumerate()
                    .map(|(i, c)| child(c, &format!("{path}.children[{i}]")))
                    .collect::<Result<_, _>>()?,
            )
        }
        other => return Err(FormatError::at(path, format!("unknown suggestion kind {other:?}"))),
    })
}

/// Parses a `treedoc/1` file, validating every structural invariant.
pub fn document_from_json(input: &str) -> Result<Document, FormatError> {
    let mut de = serde_json::Deserializer::from_str(input);
    let raw: DocumentIn = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        FormatError {
            path: e.path().to_string(),
            message: inner.to_string(),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })?;
    de.end().map_err(|e| FormatError {
        path: ".".into(),
        message: e.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
    })?;

    if raw.format != FORMAT_TAG {
        return Err(FormatError::at(
            "format",
            format!("expected {FORMAT_TAG:?}, found {:?}", raw.format),
        ));
    }
    let root = node_id(&raw.root, "root")?;
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (key, n) in raw.nodes {
        let path = format!("nodes.{key}");
        let id = node_id(&key, &path)?;
        let children = n
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| node_id(c, &format!("{path}.children[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        nodes.push(Node {
            id,
            title: n.title,
            content: fragment(&n.content, &format!("{path}.content"))?,
            children,
        });
    }
    let tree = DocumentTree::from_parts(raw.doc_id, root, nodes, raw.created_ms, raw.modified_ms)
        .map_err(|e| FormatError::at("nodes", e.to_string()))?;

    let mut suggestions = Vec::with_capacity(raw.suggestions.len());
    for (i, s) in raw.suggestions.into_iter().enumerate() {
        let path = format!("suggestions[{i}]");
        suggestions.push(Suggestion {
            target: node_id(&s.target, &format!("{path}.target"))?,
            payload: payload_from_json(&s.kind, &s.payload, &format!("{path}.payload"))?,
            origin: Origin::parse(&s.origin)
                .ok_or_else(|| FormatError::at(format!("{path}.origin"), "unknown origin"))?,
            status: SuggestionStatus::parse(&s.status)
                .ok_or_else(|| FormatError::at(format!("{path}.status"), "unknown status"))?,
            id: s.id,
            created_ms: s.created_ms,
        });
    }

    let mut records = Vec::new();
    for (key, vs) in raw.versions {
        let id = node_id(&key, &format!("versions.{key}"))?;
        for (i, v) in vs.into_iter().enumerate() {
            records.push(Version {
                node_id: id.clone(),
                seq: v.seq,
                label: v.label,
                title: v.title,
                content: fragment(&v.content, &format!("versions.{key}[{i}].content"))?,
                created_ms: v.created_ms,
            });
        }
    }
    let versions = VersionLog::from_records(records).map_err(|m| FormatError::at("versions", m))?;
    Ok(Document::from_parts(tree, suggestions, versions))
}
