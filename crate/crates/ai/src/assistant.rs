//! The chat assistant: context assembly and the tool loop.

use std::collections::BTreeSet;
use std::sync::Mutex;

use serde_json::{json, Value};
use treedoc_core::{
    ChildProposal, Document, DocumentTree, NodeId, Origin, PendingSuggestion, RichFragment, SuggestionPayload,
};
use treedoc_llm::{ChatModel, ChatRequest, Message, Role, Temperature, Tier, ToolCall, ToolSchema};

use crate::prompt;
use crate::search::search_by_keyword;
use crate::AiError;

pub const STEP_BUDGET: usize = 16;
pub const LOAD_GATE_ERROR: &str = "node not loaded; call load_node_content first";

pub const TOOL_NAMES: [&str; 6] = [
    "load_node_content",
    "load_node_children",
    "suggest_new_title",
    "suggest_new_content",
    "suggest_new_child",
    "search_by_keyword",
];

fn string_props(props: &[(&str, &str)]) -> Value {
    let properties: serde_json::Map<String, Value> = props
        .iter()
        .map(|(k, d)| (k.to_string(), json!({"type": "string", "description": d})))
        .collect();
    let required: Vec<&str> = props.iter().map(|(k, _)| *k).collect();
    json!({"type": "object", "properties": properties, "required": required, "additionalProperties": false})
}

/// The six tool schemas, in a fixed order. Changing any byte here changes
/// request hashes and invalidates recorded fixtures.
pub fn tool_schemas() -> Vec<ToolSchema> {
    let tool = |name: &str, description: &str, params: Value| ToolSchema {
        name: name.to_string(),
        description: description.to_string(),
        parameters: params,
    };
    vec![
        tool(
            "load_node_content",
            "Loads a node’s content into the context by its ID.",
            string_props(&[("node_id", "ID of the node to load")]),
        ),
        tool(
            "load_node_children",
            "Loads the ID and title of the child nodes of a node into the context.",
            string_props(&[("node_id", "ID of the parent node")]),
        ),
        tool(
            "suggest_new_title",
            "Suggests a new title of a node for the user to review.",
            string_props(&[("node_id", "ID of the node"), ("title", "The proposed title")]),
        ),
        tool(
            "suggest_new_content",
            "Suggests a new version of the content of a node for the user to review.",
            string_props(&[("node_id", "ID of the node"), ("content", "The proposed HTML content")]),
        ),
        tool(
            "suggest_new_child",
            "Suggests a new child to a certain node for the user to review.",
            string_props(&[
                ("parent_id", "ID of the parent node"),
                ("title", "Title of the new child"),
                ("content", "HTML content of the new child"),
            ]),
        ),
        tool(
            "search_by_keyword",
            "Searches for nodes that contain a given keyword from the whole tree.",
            string_props(&[("keyword", "The keyword to search for")]),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSession {
    pub session_id: String,
    pub doc_id: String,
    selected: NodeId,
    /// Kept in insertion order; context lists them in document order.
    marked: Vec<NodeId>,
    transcript: Vec<Message>,
    loaded: BTreeSet<NodeId>,
    pub step_budget: usize,
    closed: bool,
}

impl AgentSession {
    pub fn new(session_id: &str, doc_id: &str, selected: NodeId, marked: Vec<NodeId>) -> AgentSession {
        let mut s = AgentSession {
            session_id: session_id.to_string(),
            doc_id: doc_id.to_string(),
            selected: selected.clone(),
            marked: Vec::new(),
            transcript: Vec::new(),
            loaded: BTreeSet::from([selected]),
            step_budget: STEP_BUDGET,
            closed: false,
        };
        s.set_marked(marked);
        s
    }

    pub fn selected(&self) -> &NodeId {
        &self.selected
    }

    pub fn marked(&self) -> &[NodeId] {
        &self.marked
    }

    pub fn transcript(&self) -> &[Message] {
        &self.transcript
    }

    pub fn loaded(&self) -> &BTreeSet<NodeId> {
        &self.loaded
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn select(&mut self, node: NodeId) {
        self.loaded.insert(node.clone());
        self.selected = node;
    }

    pub fn set_marked(&mut self, marked: Vec<NodeId>) {
        self.marked.clear();
        for m in marked {
            if !self.marked.contains(&m) {
                self.marked.push(m);
            }
        }
    }

    /// Clears the chat history, as the reset button does.
    pub fn reset(&mut self) {
        self.transcript.clear();
        self.loaded = BTreeSet::from([self.selected.clone()]);
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    /// Nodes whose content the model has already seen.
    fn visible(&self, tree: &DocumentTree, node: &NodeId) -> bool {
        self.loaded.contains(node)
            || self.marked.contains(node)
            || tree.get_parent(&self.selected).ok().flatten() == Some(node)
    }
}

/// Renders the system prompt for the session's current selection.
pub fn assemble_context(session: &AgentSession, tree: &DocumentTree) -> Result<String, AiError> {
    let sel = tree.get_node(&session.selected)?;
    let parent = match tree.get_parent(&sel.id)? {
        Some(p) => {
            let p = tree.get_node(p)?;
            format!(
                "Parent node (ID: {}, title: {}):\n<parentContent>\n{}\n</parentContent>",
                p.id,
                p.title,
                p.content.as_str()
            )
        }
        None => String::new(),
    };
    for m in &session.marked {
        tree.get_node(m)?;
    }
    let marked: Vec<String> = tree
        .preorder_all()
        .into_iter()
        .filter(|id| session.marked.contains(id))
        .map(|id| {
            let n = tree.get_node(&id).expect("listed node");
            format!(
                "Marked node (ID: {}, title: {}):\n<markedContent>\n{}\n</markedContent>",
                n.id,
                n.title,
                n.content.as_str()
            )
        })
        .collect();
    let listing = |heading: &str, ids: &[NodeId]| -> String {
        if ids.is_empty() {
            return String::new();
        }
        let mut out = heading.to_string();
        for id in ids {
            let n = tree.get_node(id).expect("listed node");
            out.push_str(&format!("\n- {} (ID: {})", n.title, n.id));
        }
        out
    };
    let children = listing("Children of the selected node:", &sel.children);
    let siblings = listing("Siblings of the selected node:", &tree.get_siblings(&sel.id)?);
    Ok(prompt::render(
        prompt::ASSISTANT_SYSTEM,
        &[
            ("nodeM.id", sel.id.as_str()),
            ("originalContent", sel.content.as_str()),
            ("parentContent", &parent),
            ("markedNodeContent", &marked.join("\n\n")),
            ("childrenInfo", &children),
            ("siblingsInfo", &siblings),
        ],
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolRecord {
    pub call: ToolCall,
    pub result: Value,
}

impl ToolRecord {
    pub fn is_error(&self) -> bool {
        self.result.get("error").is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TurnOutcome {
    pub assistant_text: String,
    pub tool_calls: Vec<ToolRecord>,
    pub suggestion_ids: Vec<String>,
    /// The step budget ran out while the model still wanted tools.
    pub budget_exhausted: bool,
}

/// Runs one user turn. The document lock is held only while reading the
/// tree and executing tools, never across a model call.
pub fn run_turn(
    session: &mut AgentSession,
    doc: &Mutex<Document>,
    model: &dyn ChatModel,
    user_message: &str,
) -> Result<TurnOutcome, AiError> {
    if session.closed {
        return Err(AiError::SessionClosed);
    }
    let system = assemble_context(session, &doc.lock().unwrap().tree)?;
    session.transcript.push(Message::user(user_message));
    let tools = tool_schemas();
    let mut outcome = TurnOutcome::default();
    let mut texts = Vec::new();
    let mut finished = false;
    for _ in 0..session.step_budget {
        let mut messages = Vec::with_capacity(session.transcript.len() + 1);
        messages.push(Message::system(system.clone()));
        messages.extend(session.transcript.iter().cloned());
        let req = ChatRequest {
            tier: Tier::Assistant,
            temperature: Temperature::Deterministic,
            messages,
            tools: tools.clone(),
        };
        let reply = model.chat(&req)?;
        if let Some(t) = reply.text.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
            texts.push(t.to_string());
        }
        session
            .transcript
            .push(Message::assistant(reply.text.clone().unwrap_or_default(), reply.tool_calls.clone()));
        if reply.tool_calls.is_empty() {
            finished = true;
            break;
        }
        let mut guard = doc.lock().unwrap();
        for call in reply.tool_calls {
            let result = execute_tool(session, &mut guard, &call, &mut outcome.suggestion_ids);
            session.transcript.push(Message::tool_result(call.id.clone(), result.to_string()));
            outcome.tool_calls.push(ToolRecord { call, result });
        }
    }
    outcome.budget_exhausted = !finished;
    outcome.assistant_text = texts.join("\n\n");
    Ok(outcome)
}

fn arg<'a>(call: &'a ToolCall, name: &str) -> Result<&'a str, Value> {
    call.arguments
        .get(name)
        .and_then(Value::as_str)
        .ok_or_else(|| json!({"error": format!("missing string argument {name}")}))
}

fn node_arg(tree: &DocumentTree, call: &ToolCall, name: &str) -> Result<NodeId, Value> {
    let raw = arg(call, name)?;
    NodeId::new(raw)
        .ok()
        .filter(|id| tree.contains(id))
        .ok_or_else(|| json!({"error": "unknown node", "node_id": raw}))
}

fn fragment_arg(call: &ToolCall, name: &str) -> Result<RichFragment, Value> {
    RichFragment::parse(arg(call, name)?).map_err(|e| json!({"error": format!("invalid fragment: {e}")}))
}

/// Executes one tool call. Failures come back as `{"error": ...}` results
/// for the model to act on.
pub fn execute_tool(
    session: &mut AgentSession,
    doc: &mut Document,
    call: &ToolCall,
    queued: &mut Vec<String>,
) -> Value {
    match try_tool(session, doc, call, queued) {
        Ok(v) | Err(v) => v,
    }
}

fn try_tool(
    session: &mut AgentSession,
    doc: &mut Document,
    call: &ToolCall,
    queued: &mut Vec<String>,
) -> Result<Value, Value> {
    let tree = &doc.tree;
    let gate = |session: &AgentSession, id: &NodeId| {
        if session.visible(tree, id) {
            Ok(())
        } else {
            Err(json!({"error": LOAD_GATE_ERROR, "node_id": id}))
        }
    };
    let pending = match call.name.as_str() {
        "load_node_content" => {
            let id = node_arg(tree, call, "node_id")?;
            let n = tree.get_node(&id).expect("checked");
            session.loaded.insert(id.clone());
            return Ok(json!({"id": n.id, "title": n.title, "content": n.content.as_str()}));
        }
        "load_node_children" => {
            let id = node_arg(tree, call, "node_id")?;
            let children: Vec<Value> = tree
                .get_children(&id)
                .expect("checked")
                .iter()
                .map(|c| json!({"id": c, "title": tree.get_node(c).expect("child").title}))
                .collect();
            return Ok(json!({"id": id, "children": children}));
        }
        "search_by_keyword" => {
            let kw = arg(call, "keyword")?;
            let hits = search_by_keyword(tree, kw).map_err(|_| json!({"error": "empty keyword"}))?;
            return Ok(json!({"results": hits.iter().map(|h| h.to_json()).collect::<Vec<_>>()}));
        }
        "suggest_new_title" => {
            let id = node_arg(tree, call, "node_id")?;
            gate(session, &id)?;
            PendingSuggestion {
                target: id,
                payload: SuggestionPayload::Title(arg(call, "title")?.trim().to_string()),
                origin: Origin::Assistant,
            }
        }
        "suggest_new_content" => {
            let id = node_arg(tree, call, "node_id")?;
            gate(session, &id)?;
            PendingSuggestion {
                target: id,
                payload: SuggestionPayload::Content(fragment_arg(call, "content")?),
                origin: Origin::Assistant,
            }
        }
        "suggest_new_child" => {
            let id = node_arg(tree, call, "parent_id")?;
            PendingSuggestion {
                target: id,
                payload: SuggestionPayload::Child(ChildProposal {
                    title: arg(call, "title")?.trim().to_string(),
                    content: fragment_arg(call, "content")?,
                }),
                origin: Origin::Assistant,
            }
        }
        other => return Err(json!({"error": format!("unknown tool {other}")})),
    };
    let sid = doc.enqueue(pending).map_err(|e| json!({"error": e.to_string()}))?;
    queued.push(sid.clone());
    Ok(json!({"suggestion_id": sid, "status": "pending"}))
}

/// True for transcript messages a person would see in the chat panel.
pub fn is_visible_message(m: &Message) -> bool {
    matches!(m.role, Role::User) || (m.role == Role::Assistant && !m.content.trim().is_empty())
}
