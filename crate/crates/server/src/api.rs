use std::collections::HashMap;
use std::fmt::Display;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use treedoc_ai::{AgentSession, AiError, AiOp};
use treedoc_core::format::{payload_from_json, suggestion_to_json, version_to_json};
use treedoc_core::linear::UnsupportedFormat;
use treedoc_core::{
    linearize, render, tree_to_json, Document, DocumentTree, ErrorCode, HasErrorCode, HeadingPolicy,
    NodeId, RenderFormat, RevisionError, RichFragment, SuggestionStatus, TreeError,
};
use treedoc_llm::ChatModel;

use crate::store::{DocumentStore, StoreError};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub detail: String,
    pub raw: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::from_u16(code.http_status()).expect("valid status"),
            code: code.as_str().to_string(),
            detail: detail.into(),
            raw: None,
        }
    }

    /// Request-level problems that are not engine errors.
    pub fn bad_request(detail: impl Into<String>) -> ApiError {
        ApiError { status: StatusCode::BAD_REQUEST, code: "bad_request".into(), detail: detail.into(), raw: None }
    }

    pub fn not_found(detail: impl Into<String>) -> ApiError {
        ApiError { status: StatusCode::NOT_FOUND, code: "not_found".into(), detail: detail.into(), raw: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.code, "detail": self.detail});
        if let Some(raw) = self.raw {
            body["raw"] = json!(raw);
        }
        (self.status, Json(body)).into_response()
    }
}

fn coded<E: HasErrorCode + Display>(e: E) -> ApiError {
    ApiError::new(e.code(), e.to_string())
}

macro_rules! from_coded {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> ApiError { coded(e) }
        }
    )*};
}

from_coded!(TreeError, RevisionError, StoreError, UnsupportedFormat, treedoc_llm::GatewayError);

impl From<AiError> for ApiError {
    fn from(e: AiError) -> ApiError {
        let raw = match &e {
            AiError::MalformedModelOutput { raw, .. } => Some(raw.clone()),
            _ => None,
        };
        ApiError { raw, ..coded(e) }
    }
}

type ApiResult<T = Json<Value>> = Result<T, ApiError>;

pub struct AppState {
    store: DocumentStore,
    docs: Mutex<HashMap<String, Arc<Mutex<Document>>>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<AgentSession>>>>,
    model: Arc<dyn ChatModel>,
}

impl AppState {
    pub fn new(store: DocumentStore, model: Arc<dyn ChatModel>) -> Arc<AppState> {
        Arc::new(AppState { store, docs: Mutex::default(), sessions: Mutex::default(), model })
    }

    pub fn store(&self) -> &DocumentStore {
        &self.store
    }

    /// The live in-memory document, loaded on first use.
    pub fn doc(&self, doc_id: &str) -> Result<Arc<Mutex<Document>>, ApiError> {
        let mut docs = self.docs.lock().unwrap();
        if let Some(d) = docs.get(doc_id) {
            return Ok(d.clone());
        }
        let doc = Arc::new(Mutex::new(self.store.load(doc_id)?));
        docs.insert(doc_id.to_string(), doc.clone());
        Ok(doc)
    }

    /// Runs `f` under the document lock and persists the result. A failed
    /// save drops the cached copy so the next access rereads the disk.
    fn mutate<T>(&self, doc_id: &str, f: impl FnOnce(&mut Document) -> Result<T, ApiError>) -> ApiResult<T> {
        let cell = self.doc(doc_id)?;
        let mut doc = cell.lock().unwrap();
        let out = f(&mut doc)?;
        self.persist(doc_id, &doc)?;
        Ok(out)
    }

    fn persist(&self, doc_id: &str, doc: &Document) -> Result<(), ApiError> {
        if let Err(e) = self.store.save(doc) {
            self.docs.lock().unwrap().remove(doc_id);
            return Err(e.into());
        }
        Ok(())
    }

    fn read<T>(&self, doc_id: &str, f: impl FnOnce(&Document) -> Result<T, ApiError>) -> ApiResult<T> {
        let cell = self.doc(doc_id)?;
        let doc = cell.lock().unwrap();
        f(&doc)
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let raw: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(raw).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn node_id(raw: &str) -> Result<NodeId, ApiError> {
    NodeId::new(raw).map_err(|_| ApiError::new(ErrorCode::UnknownNode, format!("unknown node {raw}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/docs", post(create_doc).get(list_docs))
        .route("/docs/{d}/tree", get(get_tree))
        .route("/docs/{d}/nodes", post(add_node))
        .route("/docs/{d}/nodes/{n}", patch(patch_node).delete(delete_node))
        .route("/docs/{d}/nodes/{n}/move", post(move_node))
        .route("/docs/{d}/linear", get(get_linear))
        .route("/docs/{d}/search", get(search))
        .route("/docs/{d}/nodes/{n}/ai/{op}", post(run_ai))
        .route("/docs/{d}/chat", post(chat))
        .route("/docs/{d}/chat/{s}", axum::routing::delete(close_session))
        .route("/docs/{d}/chat/{s}/reset", post(reset_session))
        .route("/docs/{d}/suggestions", get(list_suggestions))
        .route("/docs/{d}/suggestions/{s}/accept", post(accept))
        .route("/docs/{d}/suggestions/{s}/reject", post(reject))
        .route("/docs/{d}/nodes/{n}/versions", get(list_versions))
        .route("/docs/{d}/nodes/{n}/versions/{v}/restore", post(restore))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateDoc {
    title: String,
}

async fn create_doc(State(st): State<Arc<AppState>>, raw: Bytes) -> ApiResult {
    let req: CreateDoc = body(&raw)?;
    let tree = DocumentTree::create(&req.title)?;
    let doc = Document::new(tree);
    let (doc_id, root) = (doc.tree.doc_id().to_string(), doc.tree.root().clone());
    st.store.create(&doc)?;
    st.docs.lock().unwrap().insert(doc_id.clone(), Arc::new(Mutex::new(doc)));
    Ok(Json(json!({"doc_id": doc_id, "root": root})))
}

async fn list_docs(State(st): State<Arc<AppState>>) -> ApiResult {
    let mut out = Vec::new();
    for id in st.store.list()? {
        let title = st.read(&id, |d| Ok(d.tree.get_node(d.tree.root())?.title.clone()));
        if let Ok(title) = title {
            out.push(json!({"doc_id": id, "title": title}));
        }
    }
    Ok(Json(Value::Array(out)))
}

async fn get_tree(State(st): State<Arc<AppState>>, Path(d): Path<String>) -> ApiResult {
    st.read(&d, |doc| Ok(Json(serde_json::from_str(&tree_to_json(&doc.tree)).expect("valid json"))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddNode {
    parent: String,
    title: String,
    #[serde(default)]
    content: String,
    position: Option<usize>,
}

async fn add_node(State(st): State<Arc<AppState>>, Path(d): Path<String>, raw: Bytes) -> ApiResult {
    let req: AddNode = body(&raw)?;
    st.mutate(&d, |doc| {
        let content = RichFragment::parse(&req.content).map_err(TreeError::from)?;
        let id = doc.tree.add_child_fragment(&node_id(&req.parent)?, &req.title, content, req.position)?;
        Ok(Json(json!({"id": id})))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchNode {
    title: Option<String>,
    content: Option<String>,
}

async fn patch_node(State(st): State<Arc<AppState>>, Path((d, n)): Path<(String, String)>, raw: Bytes) -> ApiResult {
    let req: PatchNode = body(&raw)?;
    st.mutate(&d, |doc| {
        let id = node_id(&n)?;
        doc.tree.get_node(&id)?;
        let content = match &req.content {
            Some(c) => Some(RichFragment::parse(c).map_err(TreeError::from)?),
            None => None,
        };
        if let Some(t) = &req.title {
            doc.tree.set_title(&id, t)?;
        }
        if let Some(c) = content {
            doc.tree.set_content_fragment(&id, c)?;
        }
        Ok(Json(json!({})))
    })
}

async fn delete_node(State(st): State<Arc<AppState>>, Path((d, n)): Path<(String, String)>) -> ApiResult {
    st.mutate(&d, |doc| Ok(Json(json!({"removed": doc.tree.delete_node(&node_id(&n)?)?}))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveNode {
    new_parent: String,
    position: Option<usize>,
}

async fn move_node(State(st): State<Arc<AppState>>, Path((d, n)): Path<(String, String)>, raw: Bytes) -> ApiResult {
    let req: MoveNode = body(&raw)?;
    st.mutate(&d, |doc| {
        let id = node_id(&n)?;
        let parent = node_id(&req.new_parent)?;
        let position = match req.position {
            Some(p) => p,
            None => {
                let kids = doc.tree.get_children(&parent)?;
                kids.len() - usize::from(kids.contains(&id))
            }
        };
        doc.tree.move_node(&id, &parent, position)?;
        Ok(Json(json!({})))
    })
}

async fn get_linear(
    State(st): State<Arc<AppState>>,
    Path(d): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let format: RenderFormat = q.get("format").map(String::as_str).unwrap_or("html").parse()?;
    let policy = match q.get("headings").map(String::as_str).unwrap_or("on") {
        "on" => HeadingPolicy::TitlesAsHeadings,
        "off" => HeadingPolicy::None,
        other => return Err(ApiError::bad_request(format!("headings must be on or off, got {other:?}"))),
    };
    st.read(&d, |doc| {
        let root = match q.get("root") {
            Some(r) => node_id(r)?,
            None => doc.tree.root().clone(),
        };
        let segments = linearize(&doc.tree, &root)?;
        Ok(Json(json!({"text": render(&segments, format, policy)})))
    })
}

async fn search(
    State(st): State<Arc<AppState>>,
    Path(d): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let kw = q.get("q").cloned().unwrap_or_default();
    st.read(&d, |doc| {
        let hits = treedoc_ai::search_by_keyword(&doc.tree, &kw)?;
        Ok(Json(Value::Array(hits.iter().map(|h| h.to_json()).collect())))
    })
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AiBody {
    user_prompt: Option<String>,
}

async fn run_ai(
    State(st): State<Arc<AppState>>,
    Path((d, n, op)): Path<(String, String, String)>,
    raw: Bytes,
) -> ApiResult {
    let op: AiOp = op.parse().map_err(ApiError::not_found)?;
    let req: AiBody = body(&raw)?;
    let prepared = st.read(&d, |doc| {
        Ok(treedoc_ai::ops::prepare(op, &doc.tree, &node_id(&n)?, req.user_prompt.as_deref())?)
    })?;
    let model = st.model.clone();
    let request = prepared.request.clone();
    let reply = tokio::task::spawn_blocking(move || model.chat(&request))
        .await
        .map_err(|e| ApiError::new(ErrorCode::ProviderError, e.to_string()))??;
    st.mutate(&d, |doc| {
        let pending = treedoc_ai::ops::finish(&prepared, reply.text.as_deref())?;
        Ok(Json(json!({"suggestion_id": doc.enqueue(pending)?})))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatBody {
    session_id: Option<String>,
    selected: String,
    marked: Option<Vec<String>>,
    message: String,
}

async fn chat(State(st): State<Arc<AppState>>, Path(d): Path<String>, raw: Bytes) -> ApiResult {
    let req: ChatBody = body(&raw)?;
    let cell = st.doc(&d)?;
    let selected = node_id(&req.selected)?;
    let marked = match &req.marked {
        Some(m) => Some(m.iter().map(|s| node_id(s)).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let session = match &req.session_id {
        Some(sid) => {
            let s = st.sessions.lock().unwrap().get(sid).cloned();
            let s = s
                .filter(|s| s.lock().unwrap().doc_id == d)
                .ok_or_else(|| ApiError::from(AiError::UnknownSession(sid.to_string())))?;
            s
        }
        None => {
            let sid = format!("c{}", NodeId::random(&mut rand::rng()));
            let s = Arc::new(Mutex::new(AgentSession::new(&sid, &d, selected.clone(), Vec::new())));
            st.sessions.lock().unwrap().insert(sid, s.clone());
            s
        }
    };
    let model = st.model.clone();
    let doc = cell.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let mut s = session.lock().unwrap();
        if !s.is_closed() {
            s.select(selected);
            if let Some(m) = marked {
                s.set_marked(m);
            }
        }
        let out = treedoc_ai::run_turn(&mut s, &doc, &*model, &req.message);
        (s.session_id.clone(), out)
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::ProviderError, e.to_string()))?;
    let (sid, outcome) = outcome;
    let outcome = outcome?;
    if !outcome.suggestion_ids.is_empty() {
        let doc = cell.lock().unwrap();
        st.persist(&d, &doc)?;
    }
    let tools: Vec<Value> = outcome
        .tool_calls
        .iter()
        .map(|r| json!({"name": r.call.name, "arguments": r.call.arguments, "result": r.result}))
        .collect();
    Ok(Json(json!({
        "session_id": sid,
        "assistant_text": outcome.assistant_text,
        "suggestion_ids": outcome.suggestion_ids,
        "budget_exhausted": outcome.budget_exhausted,
        "tool_calls": tools,
    })))
}

fn session(st: &AppState, d: &str, sid: &str) -> Result<Arc<Mutex<AgentSession>>, ApiError> {
    st.sessions
        .lock()
        .unwrap()
        .get(sid)
        .filter(|s| s.lock().unwrap().doc_id == d)
        .cloned()
        .ok_or_else(|| ApiError::from(AiError::UnknownSession(sid.to_string())))
}

async fn close_session(State(st): State<Arc<AppState>>, Path((d, s)): Path<(String, String)>) -> ApiResult {
    session(&st, &d, &s)?.lock().unwrap().close();
    Ok(Json(json!({})))
}

async fn reset_session(State(st): State<Arc<AppState>>, Path((d, s)): Path<(String, String)>) -> ApiResult {
    let s = session(&st, &d, &s)?;
    let mut s = s.lock().unwrap();
    if s.is_closed() {
        return Err(AiError::SessionClosed.into());
    }
    s.reset();
    Ok(Json(json!({})))
}

async fn list_suggestions(
    State(st): State<Arc<AppState>>,
    Path(d): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let status = match q.get("status") {
        Some(s) => Some(
            SuggestionStatus::parse(s)
                .ok_or_else(|| ApiError::bad_request(format!("status must be pending, accepted or rejected, got {s:?}")))?,
        ),
        None => None,
    };
    st.read(&d, |doc| {
        Ok(Json(Value::Array(
            doc.suggestions_with_status(status).into_iter().map(suggestion_to_json).collect(),
        )))
    })
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AcceptBody {
    edited_payload: Option<Value>,
}

async fn accept(State(st): State<Arc<AppState>>, Path((d, s)): Path<(String, String)>, raw: Bytes) -> ApiResult {
    let req: AcceptBody = body(&raw)?;
    st.mutate(&d, |doc| {
        let edited = match &req.edited_payload {
            Some(v) => {
                let kind = doc.suggestion(&s)?.kind();
                Some(
                    payload_from_json(kind.as_str(), v, "edited_payload")
                        .map_err(|e| ApiError::new(ErrorCode::InvalidPayload, e.to_string()))?,
                )
            }
            None => None,
        };
        let applied = doc.apply_suggestion(&s, edited)?;
        Ok(Json(json!({"touched": applied.touched, "created": applied.created})))
    })
}

async fn reject(State(st): State<Arc<AppState>>, Path((d, s)): Path<(String, String)>) -> ApiResult {
    st.mutate(&d, |doc| {
        doc.reject_suggestion(&s)?;
        Ok(Json(json!({})))
    })
}

async fn list_versions(State(st): State<Arc<AppState>>, Path((d, n)): Path<(String, String)>) -> ApiResult {
    st.read(&d, |doc| {
        let id = node_id(&n)?;
        doc.tree.get_node(&id)?;
        Ok(Json(Value::Array(doc.versions().history(&id).iter().map(version_to_json).collect())))
    })
}

async fn restore(
    State(st): State<Arc<AppState>>,
    Path((d, n, v)): Path<(String, String, String)>,
) -> ApiResult {
    st.mutate(&d, |doc| {
        let id = node_id(&n)?;
        let seq: u32 = v
            .parse()
            .map_err(|_| ApiError::new(ErrorCode::UnknownVersion, format!("node {n} has no version {v}")))?;
        Ok(Json(json!({"seq": doc.restore_version(&id, seq)?})))
    })
}
