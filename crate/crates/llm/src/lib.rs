//! Chat gateway used by every AI feature.
//!
//! One trait, [`ChatModel`], with three interchangeable backends: a live
//! client for chat-completions style endpoints, a [`Recorder`] that wraps
//! another model and writes fixtures, and a [`Replayer`] that answers from
//! fixtures keyed by the SHA-256 of the canonical request JSON. [`Scripted`]
//! serves canned replies for tests and fixture authoring.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use treedoc_core::{ErrorCode, HasErrorCode};

pub mod canonical;
pub mod fixture;
pub mod live;
pub mod types;

pub use canonical::{canonical_json, request_hash};
pub use fixture::{FixtureEntry, Recorder, Replayer};
pub use live::LiveClient;
pub use types::{ChatRequest, ChatResponse, Message, Role, Temperature, Tier, ToolCall, ToolSchema};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("provider error{}: {detail}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Provider { status: Option<u16>, detail: String },
    #[error("no fixture for request hash {hash}")]
    FixtureMiss { hash: String },
    #[error("model call timed out")]
    Timeout,
    #[error("fixture io: {0}")]
    Fixture(String),
    #[error("configuration: {0}")]
    Config(String),
}

impl HasErrorCode for GatewayError {
    fn code(&self) -> ErrorCode {
        match self {
            GatewayError::FixtureMiss { .. } => ErrorCode::FixtureMiss,
            GatewayError::Timeout => ErrorCode::Timeout,
            GatewayError::Fixture(_) => ErrorCode::IoError,
            GatewayError::InvalidRequest(_) | GatewayError::Provider { .. } | GatewayError::Config(_) => {
                ErrorCode::ProviderError
            }
        }
    }
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        match self.messages.first() {
            None => Err(GatewayError::InvalidRequest("no messages".into())),
            Some(m) if m.role != Role::System => {
                Err(GatewayError::InvalidRequest("first message must be the system prompt".into()))
            }
            Some(_) => Ok(()),
        }
    }
}

pub trait ChatModel: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<M: ChatModel + ?Sized> ChatModel for Box<M> {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).chat(req)
    }
}

impl<M: ChatModel + ?Sized> ChatModel for Arc<M> {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).chat(req)
    }
}

impl<M: ChatModel + ?Sized> ChatModel for &M {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).chat(req)
    }
}

/// Replies with queued responses in order and keeps every request it saw.
#[derive(Debug, Default)]
pub struct Scripted {
    replies: Mutex<VecDeque<ChatResponse>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl Scripted {
    pub fn new(replies: impl IntoIterator<Item = ChatResponse>) -> Scripted {
        Scripted { replies: Mutex::new(replies.into_iter().collect()), seen: Mutex::default() }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }
}

impl ChatModel for Scripted {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        self.seen.lock().unwrap().push(req.clone());
        self.replies.lock().unwrap().pop_front().ok_or_else(|| GatewayError::Provider {
            status: None,
            detail: "script exhausted".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatewayMode {
    Live,
    Record(PathBuf),
    Replay(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub mode: GatewayMode,
    pub base_url: String,
    pub api_key: Option<String>,
    pub model_assistant: String,
    pub model_buttons: String,
    pub timeout: Duration,
}

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

impl GatewayConfig {
    pub fn from_env() -> Result<GatewayConfig, GatewayError> {
        GatewayConfig::from_lookup(|k| std::env::var(k).ok())
    }

    /// `TREEDOC_GATEWAY_MODE` is `live` (default), `record` or `replay`; the
    /// latter two need `TREEDOC_FIXTURES`.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<GatewayConfig, GatewayError> {
        let fixtures = get("TREEDOC_FIXTURES").filter(|s| !s.is_empty()).map(PathBuf::from);
        let need = |m: &str| {
            fixtures
                .clone()
                .ok_or_else(|| GatewayError::Config(format!("{m} mode needs TREEDOC_FIXTURES")))
        };
        let mode = match get("TREEDOC_GATEWAY_MODE").as_deref().unwrap_or("live") {
            "live" | "" => GatewayMode::Live,
            "record" => GatewayMode::Record(need("record")?),
            "replay" => GatewayMode::Replay(need("replay")?),
            other => return Err(GatewayError::Config(format!("unknown gateway mode {other:?}"))),
        };
        let model_assistant = get("TREEDOC_LLM_MODEL_ASSISTANT").unwrap_or_else(|| "gpt-4o".into());
        let model_buttons = get("TREEDOC_LLM_MODEL_BUTTONS").unwrap_or_else(|| "gpt-4o-mini".into());
        let timeout = get("TREEDOC_LLM_TIMEOUT_SECS")
            .and_then(|s| s.parse().ok())
            .map(Duration::from_secs)
            .unwrap_or(Duration::from_secs(120));
        Ok(GatewayConfig {
            mode,
            base_url: get("TREEDOC_LLM_BASE_URL").unwrap_or_else(|| DEFAULT_BASE_URL.into()),
            api_key: get("TREEDOC_LLM_API_KEY").filter(|s| !s.is_empty()),
            model_assistant,
            model_buttons,
            timeout,
        })
    }

    fn live(&self) -> LiveClient {
        LiveClient::new(
            &self.base_url,
            self.api_key.clone(),
            &self.model_assistant,
            &self.model_buttons,
            self.timeout,
        )
    }

    pub fn build(&self) -> Result<Arc<dyn ChatModel>, GatewayError> {
        Ok(match &self.mode {
            GatewayMode::Live => Arc::new(self.live()),
            GatewayMode::Record(path) => Arc::new(Recorder::new(self.live(), path)?),
            GatewayMode::Replay(path) => Arc::new(Replayer::load(path)?),
        })
    }
}
