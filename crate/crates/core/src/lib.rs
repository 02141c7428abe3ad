//! Core model for hierarchical documents.
//!
//! A document is an ordered tree of nodes, each holding a title and a
//! restricted HTML fragment. Parents usually hold outlines; the text that
//! reaches the final document is selected by export blocks and collected by
//! a preorder walk ([`linear`]). Changes proposed by AI features wait in a
//! suggestion queue until a person accepts or rejects them ([`revision`]).

pub mod diff;
pub mod error;
pub mod format;
pub mod fragment;
pub mod id;
pub mod linear;
pub mod revision;
pub mod text;
pub mod tree;

pub use diff::{apply_diff, compute_diff, Diff, DiffOp, Hunk};
pub use error::{ErrorCode, HasErrorCode};
pub use format::{document_from_json, document_to_json, tree_to_json, FormatError};
pub use fragment::{FragmentError, RichFragment, Tag};
pub use id::NodeId;
pub use linear::{exported_content, linearize, render, ExportedSegment, HeadingPolicy, RenderFormat};
pub use revision::{
    AppliedChange, ChildProposal, Document, Origin, PendingSuggestion, RevisionError, Suggestion,
    SuggestionKind, SuggestionPayload, SuggestionStatus, Version,
};
pub use text::strip_plain_text;
pub use tree::{DocumentTree, Node, StructureError, TreeError};

/// Current UTC time in integer milliseconds.
pub fn now_ms() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}
