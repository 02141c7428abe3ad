//! The document tree: a single-rooted, ordered tree of titled content nodes.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use thiserror::Error;

use crate::fragment::{FragmentError, RichFragment};
use crate::id::{random_token, NodeId};
use crate::now_ms;

pub const MAX_TITLE_CHARS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("title must not be empty")]
    EmptyTitle,
    #[error("title is {0} characters, the limit is 200")]
    TitleTooLong(usize),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("position {position} is outside 0..={len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("invalid fragment: {0}")]
    InvalidFragment(#[from] FragmentError),
    #[error("the root node cannot be deleted")]
    CannotDeleteRoot,
    #[error("moving {node} under {new_parent} would create a cycle")]
    CycleWouldForm { node: NodeId, new_parent: NodeId },
}

/// Violations found by [`DocumentTree::audit`] or while assembling a tree
/// from stored parts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("root {0} is not in the node map")]
    MissingRoot(NodeId),
    #[error("node {parent} lists unknown child {child}")]
    DanglingChild { parent: NodeId, child: NodeId },
    #[error("node {0} is reachable more than once")]
    SharedOrCyclic(NodeId),
    #[error("node {0} is not reachable from the root")]
    Orphan(NodeId),
    #[error("node map key {key} does not match node id {id}")]
    KeyMismatch { key: NodeId, id: NodeId },
    #[error("parent index disagrees with children lists at {0}")]
    ParentIndex(NodeId),
    #[error("node {0} has an invalid title: {1}")]
    Title(NodeId, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub title: String,
    pub content: RichFragment,
    pub children: Vec<NodeId>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

pub fn validate_title(title: &str) -> Result<(), TreeError> {
    let n = title.chars().count();
    if n > MAX_TITLE_CHARS {
        return Err(TreeError::TitleTooLong(n));
    }
    Ok(())
}

/// A document: the node map plus its root and timestamps.
///
/// Mutations take `&mut self`; callers that share a tree across threads wrap
/// it in a lock so each document has a single writer.
#[derive(Debug, Clone)]
pub struct DocumentTree {
    doc_id: String,
    root: NodeId,
    nodes: HashMap<NodeId, Node>,
    parents: HashMap<NodeId, NodeId>,
    // Ids deleted during this process lifetime; minting skips them.
    retired: HashSet<NodeId>,
    created_ms: i64,
    modified_ms: i64,
}

impl PartialEq for DocumentTree {
    fn eq(&self, other: &Self) -> bool {
        self.doc_id == other.doc_id
            && self.root == other.root
            && self.nodes == other.nodes
            && self.created_ms == other.created_ms
            && self.modified_ms == other.modified_ms
    }
}

impl Eq for DocumentTree {}

impl DocumentTree {
    pub fn create(title: &str) -> Result<DocumentTree, TreeError> {
        DocumentTree::create_with_rng(title, &mut rand::rng())
    }

    pub fn create_with_rng(title: &str, rng: &mut impl Rng) -> Result<DocumentTree, TreeError> {
        let title = title.trim();
        if title.is_empty() {
            return Err(TreeError::EmptyTitle);
        }
        validate_title(title)?;
        let root = NodeId::random(rng);
        let now = now_ms();
        let mut nodes = HashMap::new();
        nodes.insert(
            root.clone(),
            Node {
                id: root.clone(),
                title: title.to_string(),
                content: RichFragment::empty(),
                children: Vec::new(),
            },
        );
        Ok(DocumentTree {
            doc_id: random_token(rng, 12),
            root,
            nodes,
            parents: HashMap::new(),
            retired: HashSet::new(),
            created_ms: now,
            modified_ms: now,
        })
    }

    /// Assembles a tree from stored parts, checking every structural
    /// invariant.
    pub fn from_parts(
        doc_id: String,
        root: NodeId,
        nodes: Vec<Node>,
        created_ms: i64,
        modified_ms: i64,
    ) -> Result<DocumentTree, StructureError> {
        let mut map = HashMap::with_capacity(nodes.len());
        for node in nodes {
            if let Err(e) = validate_title(&node.title) {
                return Err(StructureError::Title(node.id.clone(), e.to_string()));
            }
            if map.contains_key(&node.id) {
                return Err(StructureError::SharedOrCyclic(node.id));
            }
            map.insert(node.id.clone(), node);
        }
        let mut tree = DocumentTree {
            doc_id,
            root,
            nodes: map,
            parents: HashMap::new(),
            retired: HashSet::new(),
            created_ms,
            modified_ms,
        };
        tree.rebuild_parents()?;
        tree.audit()?;
        Ok(tree)
    }

    fn rebuild_parents(&mut self) -> Result<(), StructureError> {
        self.parents.clear();
        for node in self.nodes.values() {
            for child in &node.children {
                if !self.nodes.contains_key(child) {
                    return Err(StructureError::DanglingChild {
                        parent: node.id.clone(),
                        child: child.clone(),
                    });
                }
                if self.parents.insert(child.clone(), node.id.clone()).is_some() {
                    return Err(StructureError::SharedOrCyclic(child.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn root(&self) -> &NodeId {
        &self.root
    }

    pub fn created_ms(&self) -> i64 {
        self.created_ms
    }

    pub fn modified_ms(&self) -> i64 {
        self.modified_ms
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn get_node(&self, id: &NodeId) -> Result<&Node, TreeError> {
        self.nodes
            .get(id)
            .ok_or_else(|| TreeError::UnknownNode(id.clone()))
    }

    pub fn get_children(&self, id: &NodeId) -> Result<&[NodeId], TreeError> {
        Ok(&self.get_node(id)?.children)
    }

    /// `None` for the root.
    pub fn get_parent(&self, id: &NodeId) -> Result<Option<&NodeId>, TreeError> {
        self.get_node(id)?;
        Ok(self.parents.get(id))
    }

    /// Ids of `id`'s siblings, excluding `id` itself, in child order.
    pub fn get_siblings(&self, id: &NodeId) -> Result<Vec<NodeId>, TreeError> {
        match self.get_parent(id)? {
            None => Ok(Vec::new()),
            Some(p) => Ok(self.nodes[p]
                .children
                .iter()
                .filter(|c| *c != id)
                .cloned()
                .collect()),
        }
    }

    /// Number of edges between the document root and `id`.
    pub fn depth(&self, id: &NodeId) -> Result<usize, TreeError> {
        self.get_node(id)?;
        let mut depth = 0;
        let mut cur = id;
        while let Some(p) = self.parents.get(cur) {
            depth += 1;
            cur = p;
        }
        Ok(depth)
    }

    pub fn is_ancestor_or_self(&self, ancestor: &NodeId, id: &NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parents.get(c);
        }
        false
    }

    /// Preorder ids of the subtree rooted at `from`.
    pub fn preorder(&self, from: &NodeId) -> Result<Vec<NodeId>, TreeError> {
        self.get_node(from)?;
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            out.push(id.clone());
            stack.extend(self.nodes[id].children.iter().rev());
        }
        Ok(out)
    }

    /// Preorder ids of the whole document.
    pub fn preorder_all(&self) -> Vec<NodeId> {
        self.preorder(&self.root).expect("root is always present")
    }

    /// Nodes in document (preorder) order.
    pub fn nodes_in_order(&self) -> impl Iterator<Item = &Node> {
        self.preorder_all().into_iter().map(move |id| &self.nodes[&id])
    }

    fn mint_id(&self) -> NodeId {
        let mut rng = rand::rng();
        loop {
            let id = NodeId::random(&mut rng);
            if !self.nodes.contains_key(&id) && !self.retired.contains(&id) {
                return id;
            }
        }
    }

    fn touch(&mut self) {
        self.modified_ms = now_ms().max(self.modified_ms);
    }

    pub fn add_child(
        &mut self,
        parent: &NodeId,
        title: &str,
        content: &str,
        position: Option<usize>,
    ) -> Result<NodeId, TreeError> {
        let content = RichFragment::parse(content)?;
        self.add_child_fragment(parent, title, content, position)
    }

    /// Inserts a new node under `parent` at `position` (or at the end).
    pub fn add_child_fragment(
        &mut self,
        parent: &NodeId,
        title: &str,
        content: RichFragment,
        position: Option<usize>,
    ) -> Result<NodeId, TreeError> {
        let len = self.get_node(parent)?.children.len();
        let position = position.unwrap_or(len);
        if position > len {
            return Err(TreeError::PositionOutOfRange { position, len });
        }
        validate_title(title)?;
        let id = self.mint_id();
        self.nodes.insert(
            id.clone(),
            Node {
                id: id.clone(),
                title: title.to_string(),
                content,
                children: Vec::new(),
            },
        );
        self.nodes
            .get_mut(parent)
            .expect("checked above")
            .children
            .insert(position, id.clone());
        self.parents.insert(id.clone(), parent.clone());
        self.touch();
        Ok(id)
    }

    /// Removes `id` and its whole subtree, returning how many nodes went.
    pub fn delete_node(&mut self, id: &NodeId) -> Result<usize, TreeError> {
        self.get_node(id)?;
        if *id == self.root {
            return Err(TreeError::CannotDeleteRoot);
        }
        let doomed = self.preorder(id)?;
        let parent = self.parents[id].clone();
        self.nodes
            .get_mut(&parent)
            .expect("parent exists")
            .children
            .retain(|c| c != id);
        for d in &doomed {
            self.nodes.remove(d);
            self.parents.remove(d);
            self.retired.insert(d.clone());
        }
        self.touch();
        Ok(doomed.len())
    }

    /// Detaches `id` and reinserts it under `new_parent` at `position`.
    /// The position indexes the destination's child list after detaching.
    pub fn move_node(
        &mut self,
        id: &NodeId,
        new_parent: &NodeId,
        position: usize,
    ) -> Result<(), TreeError> {
        self.get_node(id)?;
        self.get_node(new_parent)?;
        if self.is_ancestor_or_self(id, new_parent) {
            return Err(TreeError::CycleWouldForm {
                node: id.clone(),
                new_parent: new_parent.clone(),
            });
        }
        let old_parent = self.parents[id].clone();
        let len_after_detach = self.nodes[new_parent].children.len()
            - usize::from(old_parent == *new_parent);
        if position > len_after_detach {
            return Err(TreeError::PositionOutOfRange {
                position,
                len: len_after_detach,
            });
        }
        self.nodes
            .get_mut(&old_parent)
            .expect("parent exists")
            .children
            .retain(|c| c != id);
        self.nodes
            .get_mut(new_parent)
            .expect("checked above")
            .children
            .insert(position, id.clone());
        self.parents.insert(id.clone(), new_parent.clone());
        self.touch();
        Ok(())
    }

    pub fn set_content(&mut self, id: &NodeId, content: &str) -> Result<(), TreeError> {
        let content = RichFragment::parse(content)?;
        self.set_content_fragment(id, content)
    }

    pub fn set_content_fragment(
        &mut self,
        id: &NodeId,
        content: RichFragment,
    ) -> Result<(), TreeError> {
        self.nodes
            .get_mut(id)
            .ok_or_else(|| TreeError::UnknownNode(id.clone()))?
            .content = content;
        self.touch();
        Ok(())
    }

    pub fn set_title(&mut self, id: &NodeId, title: &str) -> Result<(), TreeError> {
        self.get_node(id)?;
        validate_title(title)?;
        if *id == self.root && title.trim().is_empty() {
            return Err(TreeError::EmptyTitle);
        }
        self.nodes.get_mut(id).expect("checked above").title = title.to_string();
        self.touch();
        Ok(())
    }

    /// Full structural check: the root exists, every node is reachable
    /// exactly once, no orphans remain and the parent index is consistent.
    pub fn audit(&self) -> Result<(), StructureError> {
        if !self.nodes.contains_key(&self.root) {
            return Err(StructureError::MissingRoot(self.root.clone()));
        }
        for (key, node) in &self.nodes {
            if *key != node.id {
                return Err(StructureError::KeyMismatch {
                    key: key.clone(),
                    id: node.id.clone(),
                });
            }
        }
        let mut seen: HashSet<&NodeId> = HashSet::new();
        let mut stack = vec![&self.root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                return Err(StructureError::SharedOrCyclic(id.clone()));
            }
            let node = self
                .nodes
                .get(id)
                .ok_or_else(|| StructureError::Orphan(id.clone()))?;
            for child in &node.children {
                if !self.nodes.contains_key(child) {
                    return Err(StructureError::DanglingChild {
                        parent: id.clone(),
                        child: child.clone(),
                    });
                }
                if self.parents.get(child) != Some(id) {
                    return Err(StructureError::ParentIndex(child.clone()));
                }
                stack.push(child);
            }
        }
        if let Some(orphan) = self.nodes.keys().find(|k| !seen.contains(k)) {
            return Err(StructureError::Orphan(orphan.clone()));
        }
        if self.parents.contains_key(&self.root) || self.parents.len() + 1 != self.nodes.len() {
            return Err(StructureError::ParentIndex(self.root.clone()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(tree: &DocumentTree, of: &NodeId) -> Vec<NodeId> {
        tree.get_children(of).unwrap().to_vec()
    }

    #[test]
    fn create_document() {
        let t = DocumentTree::create("Doc").unwrap();
        assert_eq!(t.len(), 1);
        let root = t.get_node(t.root()).unwrap();
        assert_eq!(root.title, "Doc");
        assert_eq!(root.content.as_str(), "");
        assert!(root.is_leaf());
        assert_eq!(DocumentTree::create(""), Err(TreeError::EmptyTitle));
        assert_eq!(DocumentTree::create("   "), Err(TreeError::EmptyTitle));
    }

    #[test]
    fn add_child_positions() {
        let mut t = DocumentTree::create("Doc").unwrap();
        let r = t.root().clone();
        let a = t.add_child(&r, "A", "", None).unwrap();
        assert_eq!(ids(&t, &r), vec![a.clone()]);
        let b = t.add_child(&r, "B", "", None).unwrap();
        let n = t.add_child(&r, "N", "", Some(0)).unwrap();
        assert_eq!(ids(&t, &r), vec![n, a, b]);
        assert!(matches!(
            t.add_child(&r, "X", "", Some(4)),
            Err(TreeError::PositionOutOfRange { position: 4, len: 3 })
        ));
        let ghost = NodeId::new("ghost").unwrap();
        assert!(matches!(
            t.add_child(&ghost, "X", "", None),
            Err(TreeError::UnknownNode(_))
        ));
        assert_eq!(
            t.add_child(&r, "X", "<p>x</p><div class=\"export\"><p>y</p></div><p>z</p>", None),
            Err(TreeError::InvalidFragment(FragmentError::ExportNotLast))
        );
        assert!(matches!(
            t.add_child(&r, &"t".repeat(201), "", None),
            Err(TreeError::TitleTooLong(201))
        ));
        t.audit().unwrap();
    }

    #[test]
    fn delete_counts_subtree() {
        let mut t = DocumentTree::create("Doc").unwrap();
        let r = t.root().clone();
        let a = t.add_child(&r, "A", "", None).unwrap();
        let b = t.add_child(&r, "B", "", None).unwrap();
        t.add_child(&b, "B1", "", None).unwrap();
        t.add_child(&b, "B2", "", None).unwrap();
        assert_eq!(t.delete_node(&a), Ok(1));
        assert_eq!(t.delete_node(&b), Ok(3));
        assert_eq!(t.delete_node(&r), Err(TreeError::CannotDeleteRoot));
        assert!(matches!(t.delete_node(&b), Err(TreeError::UnknownNode(_))));
        assert_eq!(t.len(), 1);
        t.audit().unwrap();
    }

    #[test]
    fn move_reorders_and_guards_cycles() {
        let mut t = DocumentTree::create("Doc").unwrap();
        let r = t.root().clone();
        let a = t.add_child(&r, "A", "", None).unwrap();
        let b = t.add_child(&r, "B", "", None).unwrap();
        let b1 = t.add_child(&b, "B1", "", None).unwrap();
        let a1 = t.add_child(&a, "A1", "", None).unwrap();

        t.move_node(&b, &r, 0).unwrap();
        assert_eq!(ids(&t, &r), vec![b.clone(), a.clone()]);

        t.move_node(&a, &b, 1).unwrap();
        assert_eq!(ids(&t, &b), vec![b1.clone(), a.clone()]);
        assert_eq!(ids(&t, &a), vec![a1.clone()]);
        assert_eq!(t.depth(&a1), Ok(3));

        assert!(matches!(
            t.move_node(&b, &b1, 0),
            Err(TreeError::CycleWouldForm { .. })
        ));
        assert!(matches!(
            t.move_node(&b, &b, 0),
            Err(TreeError::CycleWouldForm { .. })
        ));
        assert!(matches!(
            t.move_node(&r, &a, 0),
            Err(TreeError::CycleWouldForm { .. })
        ));
        assert!(matches!(
            t.move_node(&a1, &r, 3),
            Err(TreeError::PositionOutOfRange { .. })
        ));
        t.audit().unwrap();
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn set_content_and_title() {
        let mut t = DocumentTree::create("Doc").unwrap();
        let r = t.root().clone();
        let a = t.add_child(&r, "A", "", None).unwrap();
        t.set_content(&a, "<p>hi</p>").unwrap();
        assert_eq!(t.get_node(&a).unwrap().content.as_str(), "<p>hi</p>");
        assert!(matches!(
            t.set_content(&a, "<script>x</script>"),
            Err(TreeError::InvalidFragment(_))
        ));
        t.set_content(&a, "<ul><li><b>key</b> point</li></ul>").unwrap();
        t.set_title(&a, "A2").unwrap();
        assert_eq!(t.get_node(&a).unwrap().title, "A2");
        assert_eq!(t.set_title(&r, " "), Err(TreeError::EmptyTitle));
    }

    #[test]
    fn from_parts_rejects_bad_structure() {
        let id = |s: &str| NodeId::new(s).unwrap();
        let node = |i: &str, kids: &[&str]| Node {
            id: id(i),
            title: i.to_string(),
            content: RichFragment::empty(),
            children: kids.iter().map(|k| id(k)).collect(),
        };
        assert!(DocumentTree::from_parts("d".into(), id("R"), vec![node("R", &["A"]), node("A", &[])], 0, 0).is_ok());
        assert_eq!(
            DocumentTree::from_parts("d".into(), id("R"), vec![node("R", &[]), node("A", &[])], 0, 0),
            Err(StructureError::Orphan(id("A")))
        );
        assert!(matches!(
            DocumentTree::from_parts("d".into(), id("R"), vec![node("R", &["A"]), node("A", &["R"])], 0, 0),
            Err(StructureError::SharedOrCyclic(_))
        ));
        assert!(matches!(
            DocumentTree::from_parts("d".into(), id("R"), vec![node("R", &["X"])], 0, 0),
            Err(StructureError::DanglingChild { .. })
        ));
        assert!(matches!(
            DocumentTree::from_parts("d".into(), id("Q"), vec![node("R", &[])], 0, 0),
            Err(StructureError::MissingRoot(_))
        ));
    }
}
