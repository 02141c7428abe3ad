//! AI features over a document: the editing buttons ([`ops`]) and the
//! tool-using assistant ([`assistant`]). Both only ever produce pending
//! suggestions; applying them is the revision module's job.

pub mod assistant;
pub mod ops;
pub mod prompt;
pub mod search;

use treedoc_core::{ErrorCode, HasErrorCode, RevisionError, TreeError};
use treedoc_llm::GatewayError;

pub use assistant::{assemble_context, run_turn, AgentSession, ToolRecord, TurnOutcome, STEP_BUDGET};
pub use ops::{AiOp, PreparedOp};
pub use search::{search_by_keyword, SearchHit};

#[derive(Debug, thiserror::Error)]
pub enum AiError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Revision(#[from] RevisionError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("node has no content")]
    EmptyContent,
    #[error("node has no children")]
    NoChildren,
    #[error("node has no outline outside its export block")]
    EmptyOutline,
    #[error("node has no export block")]
    NoExportBlock,
    #[error("keyword is empty")]
    EmptyKeyword,
    #[error("session is closed")]
    SessionClosed,
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("malformed model output: {reason}")]
    MalformedModelOutput { reason: String, raw: String },
}

impl HasErrorCode for AiError {
    fn code(&self) -> ErrorCode {
        match self {
            AiError::Tree(e) => e.code(),
            AiError::Revision(e) => e.code(),
            AiError::Gateway(e) => e.code(),
            AiError::EmptyContent => ErrorCode::EmptyContent,
            AiError::NoChildren => ErrorCode::NoChildren,
            AiError::EmptyOutline => ErrorCode::EmptyOutline,
            AiError::NoExportBlock => ErrorCode::NoExportBlock,
            AiError::EmptyKeyword => ErrorCode::EmptyKeyword,
            AiError::SessionClosed => ErrorCode::SessionClosed,
            AiError::UnknownSession(_) => ErrorCode::UnknownSession,
            AiError::MalformedModelOutput { .. } => ErrorCode::MalformedModelOutput,
        }
    }
}
