//! Suggestions awaiting review, and per-node version history.
//!
//! AI features never write to the tree. They produce a [`PendingSuggestion`]
//! that is queued on the [`Document`]; only [`Document::apply_suggestion`]
//! and [`Document::restore_version`] change node title or content on their
//! behalf, and both record a [`Version`].

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::diff::{compute_diff, compute_text_diff, Diff};
use crate::fragment::RichFragment;
use crate::id::NodeId;
use crate::now_ms;
use crate::tree::{validate_title, DocumentTree, TreeError};

/// Most children a single batch suggestion may propose.
pub const MAX_BATCH_CHILDREN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RevisionError {
    #[error("unknown suggestion {0}")]
    UnknownSuggestion(String),
    #[error("suggestion {0} was already resolved")]
    AlreadyResolved(String),
    #[error("node {node} has no version {seq}")]
    UnknownVersion { node: NodeId, seq: u32 },
    #[error("invalid suggestion payload: {0}")]
    InvalidPayload(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuggestionKind {
    NewTitle,
    NewContent,
    NewChild,
    NewChildrenBatch,
}

impl SuggestionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionKind::NewTitle => "new_title",
            SuggestionKind::NewContent => "new_content",
            SuggestionKind::NewChild => "new_child",
            SuggestionKind::NewChildrenBatch => "new_children_batch",
        }
    }

    pub fn parse(s: &str) -> Option<SuggestionKind> {
        Some(match s {
            "new_title" => SuggestionKind::NewTitle,
            "new_content" => SuggestionKind::NewContent,
            "new_child" => SuggestionKind::NewChild,
            "new_children_batch" => SuggestionKind::NewChildrenBatch,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildProposal {
    pub title: String,
    pub content: RichFragment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuggestionPayload {
    Title(String),
    Content(RichFragment),
    Child(ChildProposal),
    Children(Vec<ChildProposal>),
}

impl SuggestionPayload {
    pub fn kind(&self) -> SuggestionKind {
        match self {
            SuggestionPayload::Title(_) => SuggestionKind::NewTitle,
            SuggestionPayload::Content(_) => SuggestionKind::NewContent,
            SuggestionPayload::Child(_) => SuggestionKind::NewChild,
            SuggestionPayload::Children(_) => SuggestionKind::NewChildrenBatch,
        }
    }

    pub fn validate(&self) -> Result<(), RevisionError> {
        let child_title = |t: &str| -> Result<(), RevisionError> {
            if t.trim().is_empty() {
                return Err(RevisionError::InvalidPayload("child title is empty".into()));
            }
            validate_title(t).map_err(|e| RevisionError::InvalidPayload(e.to_string()))
        };
        match self {
            SuggestionPayload::Title(t) => {
                validate_title(t).map_err(|e| RevisionError::InvalidPayload(e.to_string()))
            }
            SuggestionPayload::Content(_) => Ok(()),
            SuggestionPayload::Child(c) => child_title(&c.title),
            SuggestionPayload::Children(cs) => {
                if cs.is_empty() || cs.len() > MAX_BATCH_CHILDREN {
                    return Err(RevisionError::InvalidPayload(format!(
                        "a batch holds 1 to {MAX_BATCH_CHILDREN} children, got {}",
                        cs.len()
                    )));
                }
                cs.iter().try_for_each(|c| child_title(&c.title))
            }
        }
    }
}

/// Who proposed a change.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    Assistant,
    /// One of the editing buttons, by operation name.
    Button(String),
}

impl Origin {
    pub fn parse(s: &str) -> Option<Origin> {
        match s {
            "assistant" => Some(Origin::Assistant),
            _ => s
                .strip_prefix("button:")
                .filter(|op| !op.is_empty())
                .map(|op| Origin::Button(op.to_string())),
        }
    }

    /// Operation name used in version labels.
    pub fn op_name(&self) -> &str {
        match self {
            Origin::Assistant => "assistant",
            Origin::Button(op) => op,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Assistant => f.write_str("assistant"),
            Origin::Button(op) => write!(f, "button:{op}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuggestionStatus {
    Pending,
    Accepted,
    Rejected,
}

impl SuggestionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionStatus::Pending => "pending",
            SuggestionStatus::Accepted => "accepted",
            SuggestionStatus::Rejected => "rejected",
        }
    }

    pub fn parse(s: &str) -> Option<SuggestionStatus> {
        Some(match s {
            "pending" => SuggestionStatus::Pending,
            "accepted" => SuggestionStatus::Accepted,
            "rejected" => SuggestionStatus::Rejected,
            _ => return None,
        })
    }
}

/// A proposal that has not been queued yet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingSuggestion {
    /// The node to change, or the parent for child kinds.
    pub target: NodeId,
    pub payload: SuggestionPayload,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    pub id: String,
    pub target: NodeId,
    pub payload: SuggestionPayload,
    pub origin: Origin,
    pub status: SuggestionStatus,
    pub created_ms: i64,
}

impl Suggestion {
    pub fn kind(&self) -> SuggestionKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Version {
    pub node_id: NodeId,
    pub seq: u32,
    pub label: String,
    pub title: String,
    pub content: RichFragment,
    pub created_ms: i64,
}

/// Append-only per-node history.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersionLog {
    by_node: BTreeMap<NodeId, Vec<Version>>,
}

impl VersionLog {
    pub fn history(&self, node: &NodeId) -> &[Version] {
        self.by_node.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get(&self, node: &NodeId, seq: u32) -> Option<&Version> {
        // seq values are 1..=k without gaps.
        self.history(node).get((seq as usize).checked_sub(1)?)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &[Version])> {
        self.by_node.iter().map(|(k, v)| (k, v.as_slice()))
    }

    fn record(&mut self, node: &NodeId, label: String, title: &str, content: &RichFragment) -> u32 {
        let entries = self.by_node.entry(node.clone()).or_default();
        let seq = entries.len() as u32 + 1;
        entries.push(Version {
            node_id: node.clone(),
            seq,
            label,
            title: title.to_string(),
            content: content.clone(),
            created_ms: now_ms(),
        });
        seq
    }

    /// Rebuilds a log from stored records. Sequence numbers must run 1..=k.
    pub fn from_records(records: Vec<Version>) -> Result<VersionLog, String> {
        let mut log = VersionLog::default();
        for v in records {
            let entries = log.by_node.entry(v.node_id.clone()).or_default();
            let expected = entries.len() as u32 + 1;
            if v.seq != expected {
                return Err(format!(
                    "version seq {} of node {} should be {expected}",
                    v.seq, v.node_id
                ));
            }
            entries.push(v);
        }
        Ok(log)
    }
}

/// What accepting a suggestion did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedChange {
    pub suggestion_id: String,
    /// Nodes that received a new version.
    pub touched: Vec<NodeId>,
    /// Nodes created by child suggestions.
    pub created: Vec<NodeId>,
    /// Old versus effective payload, as shown in the review dialog.
    pub diff: Diff,
}

/// A tree together with its suggestion queue and version history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub tree: DocumentTree,
    suggestions: Vec<Suggestion>,
    versions: VersionLog,
}

impl Document {
    pub fn new(tree: DocumentTree) -> Document {
        Document {
            tree,
            suggestions: Vec::new(),
            versions: VersionLog::default(),
        }
    }

    pub fn from_parts(tree: DocumentTree, suggestions: Vec<Suggestion>, versions: VersionLog) -> Document {
        Document {
            tree,
            suggestions,
            versions,
        }
    }

    pub fn suggestions(&self) -> &[Suggestion] {
        &self.suggestions
    }

    pub fn suggestions_with_status(&self, status: Option<SuggestionStatus>) -> Vec<&Suggestion> {
        self.suggestions
            .iter()
            .filter(|s| status.is_none_or(|st| s.status == st))
            .collect()
    }

    pub fn suggestion(&self, id: &str) -> Result<&Suggestion, RevisionError> {
        self.suggestions
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| RevisionError::UnknownSuggestion(id.to_string()))
    }

    pub fn versions(&self) -> &VersionLog {
        &self.versions
    }

    /// Validates and queues a proposal, returning its id. Ids are `s1`,
    /// `s2`, ... in queue order, so replays produce identical queues.
    pub fn enqueue(&mut self, pending: PendingSuggestion) -> Result<String, RevisionError> {
        self.tree.get_node(&pending.target)?;
        pending.payload.validate()?;
        let id = format!("s{}", self.suggestions.len() + 1);
        self.suggestions.push(Suggestion {
            id: id.clone(),
            target: pending.target,
            payload: pending.payload,
            origin: pending.origin,
            status: SuggestionStatus::Pending,
            created_ms: now_ms(),
        });
        Ok(id)
    }

    fn pending_index(&self, id: &str) -> Result<usize, RevisionError> {
        let idx = self
            .suggestions
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| RevisionError::UnknownSuggestion(id.to_string()))?;
        if self.suggestions[idx].status != SuggestionStatus::Pending {
            return Err(RevisionError::AlreadyResolved(id.to_string()));
        }
        Ok(idx)
    }

    /// Accepts a pending suggestion, optionally with a human-edited payload
    /// of the same kind.
    pub fn apply_suggestion(
        &mut self,
        id: &str,
        edited: Option<SuggestionPayload>,
    ) -> Result<AppliedChange, RevisionError> {
        let idx = self.pending_index(id)?;
        let suggestion = self.suggestions[idx].clone();
        let payload = match edited {
            Some(p) if p.kind() != suggestion.kind() => {
                return Err(RevisionError::InvalidPayload(format!(
                    "edited payload is {}, suggestion is {}",
                    p.kind().as_str(),
                    suggestion.kind().as_str()
                )))
            }
            Some(p) => p,
            None => suggestion.payload.clone(),
        };
        payload.validate()?;
        let target = suggestion.target.clone();
        let current = self.tree.get_node(&target)?.clone();
        let label = format!("AI: {}", suggestion.origin.op_name());

        let mut touched = Vec::new();
        let mut created = Vec::new();
        let diff = match &payload {
            SuggestionPayload::Title(title) => {
                self.tree.set_title(&target, title)?;
                self.versions.record(&target, label, title, &current.content);
                touched.push(target.clone());
                compute_text_diff(&current.title, title)
            }
            SuggestionPayload::Content(content) => {
                self.tree.set_content_fragment(&target, content.clone())?;
                self.versions.record(&target, label, &current.title, content);
                touched.push(target.clone());
                compute_diff(&current.content, content)
            }
            SuggestionPayload::Child(child) => {
                let new_id = self.add_child_with_version(&target, child, &label)?;
                touched.push(new_id.clone());
                created.push(new_id);
                compute_diff(&RichFragment::empty(), &child.content)
            }
            SuggestionPayload::Children(children) => {
                let mut all = RichFragment::empty();
                for child in children {
                    let new_id = self.add_child_with_version(&target, child, &label)?;
                    touched.push(new_id.clone());
                    created.push(new_id);
                    all = all
                        .without_export()
                        .concat(&child.content.without_export())
                        .unwrap_or(all);
                }
                compute_diff(&RichFragment::empty(), &all)
            }
        };
        self.suggestions[idx].status = SuggestionStatus::Accepted;
        Ok(AppliedChange {
            suggestion_id: id.to_string(),
            touched,
            created,
            diff,
        })
    }

    fn add_child_with_version(
        &mut self,
        parent: &NodeId,
        child: &ChildProposal,
        label: &str,
    ) -> Result<NodeId, RevisionError> {
        let new_id =
            self.tree
                .add_child_fragment(parent, &child.title, child.content.clone(), None)?;
        self.versions
            .record(&new_id, label.to_string(), &child.title, &child.content);
        Ok(new_id)
    }

    pub fn reject_suggestion(&mut self, id: &str) -> Result<(), RevisionError> {
        let idx = self.pending_index(id)?;
        self.suggestions[idx].status = SuggestionStatus::Rejected;
        Ok(())
    }

    /// Diff between a node's current content and what a pending content
    /// suggestion (or its edited replacement) would set.
    pub fn preview_diff(
        &self,
        id: &str,
        edited: Option<&SuggestionPayload>,
    ) -> Result<Diff, RevisionError> {
        let s = self.suggestion(id)?;
        let payload = edited.unwrap_or(&s.payload);
        let node = self.tree.get_node(&s.target)?;
        Ok(match payload {
            SuggestionPayload::Title(t) => compute_text_diff(&node.title, t),
            SuggestionPayload::Content(c) => compute_diff(&node.content, c),
            SuggestionPayload::Child(c) => compute_diff(&RichFragment::empty(), &c.content),
            SuggestionPayload::Children(cs) => {
                let all = cs.iter().fold(RichFragment::empty(), |acc, c| {
                    acc.concat(&c.content.without_export()).unwrap_or(acc)
                });
                compute_diff(&RichFragment::empty(), &all)
            }
        })
    }

    /// Records the node's current state under a free-text label.
    pub fn snapshot(&mut self, node: &NodeId, label: &str) -> Result<u32, RevisionError> {
        let n = self.tree.get_node(node)?.clone();
        Ok(self
            .versions
            .record(node, label.to_string(), &n.title, &n.content))
    }

    /// Sets the node back to a recorded snapshot and appends a new version
    /// saying so.
    pub fn restore_version(&mut self, node: &NodeId, seq: u32) -> Result<u32, RevisionError> {
        self.tree.get_node(node)?;
        let v = self
            .versions
            .get(node, seq)
            .cloned()
            .ok_or_else(|| RevisionError::UnknownVersion {
                node: node.clone(),
                seq,
            })?;
        self.tree.set_title(node, &v.title)?;
        self.tree.set_content_fragment(node, v.content.clone())?;
        Ok(self
            .versions
            .record(node, format!("restore of v{seq}"), &v.title, &v.content))
    }
}
