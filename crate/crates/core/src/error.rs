//! Stable error codes shared by the HTTP API and the CLI.

use crate::format::FormatError;
use crate::linear::UnsupportedFormat;
use crate::revision::RevisionError;
use crate::tree::TreeError;

macro_rules! error_codes {
    ($($variant:ident => $code:literal, $status:literal;)*) => {
        /// Every domain error the engine can report, with its wire code and
        /// HTTP status.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum ErrorCode {
            $($variant,)*
        }

        impl ErrorCode {
            pub const ALL: &'static [ErrorCode] = &[$(ErrorCode::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ErrorCode::$variant => $code,)*
                }
            }

            pub fn http_status(self) -> u16 {
                match self {
                    $(ErrorCode::$variant => $status,)*
                }
            }

            pub fn parse(s: &str) -> Option<ErrorCode> {
                match s {
                    $($code => Some(ErrorCode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

error_codes! {
    EmptyTitle => "empty_title", 422;
    TitleTooLong => "title_too_long", 422;
    UnknownDoc => "unknown_doc", 404;
    DocExists => "doc_exists", 409;
    UnknownNode => "unknown_node", 404;
    UnknownSuggestion => "unknown_suggestion", 404;
    UnknownVersion => "unknown_version", 404;
    UnknownSession => "unknown_session", 404;
    PositionOutOfRange => "position_out_of_range", 422;
    InvalidFragment => "invalid_fragment", 422;
    InvalidPayload => "invalid_payload", 422;
    CannotDeleteRoot => "cannot_delete_root", 409;
    CycleWouldForm => "cycle_would_form", 409;
    AlreadyResolved => "already_resolved", 409;
    SessionClosed => "session_closed", 409;
    UnsupportedFormat => "unsupported_format", 422;
    EmptyContent => "empty_content", 422;
    NoChildren => "no_children", 422;
    EmptyOutline => "empty_outline", 422;
    NoExportBlock => "no_export_block", 422;
    EmptyKeyword => "empty_keyword", 422;
    MalformedModelOutput => "malformed_model_output", 422;
    ProviderError => "provider_error", 502;
    FixtureMiss => "fixture_miss", 502;
    Timeout => "timeout", 504;
    FormatError => "format_error", 500;
    IoError => "io_error", 500;
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Errors that carry a stable code.
pub trait HasErrorCode {
    fn code(&self) -> ErrorCode;
}

impl HasErrorCode for TreeError {
    fn code(&self) -> ErrorCode {
        match self {
            TreeError::EmptyTitle => ErrorCode::EmptyTitle,
            TreeError::TitleTooLong(_) => ErrorCode::TitleTooLong,
            TreeError::UnknownNode(_) => ErrorCode::UnknownNode,
            TreeError::PositionOutOfRange { .. } => ErrorCode::PositionOutOfRange,
            TreeError::InvalidFragment(_) => ErrorCode::InvalidFragment,
            TreeError::CannotDeleteRoot => ErrorCode::CannotDeleteRoot,
            TreeError::CycleWouldForm { .. } => ErrorCode::CycleWouldForm,
        }
    }
}

impl HasErrorCode for RevisionError {
    fn code(&self) -> ErrorCode {
        match self {
            RevisionError::UnknownSuggestion(_) => ErrorCode::UnknownSuggestion,
            RevisionError::AlreadyResolved(_) => ErrorCode::AlreadyResolved,
            RevisionError::UnknownVersion { .. } => ErrorCode::UnknownVersion,
            RevisionError::InvalidPayload(_) => ErrorCode::InvalidPayload,
            RevisionError::Tree(e) => e.code(),
        }
    }
}

impl HasErrorCode for FormatError {
    fn code(&self) -> ErrorCode {
        ErrorCode::FormatError
    }
}

impl HasErrorCode for UnsupportedFormat {
    fn code(&self) -> ErrorCode {
        ErrorCode::UnsupportedFormat
    }
}
