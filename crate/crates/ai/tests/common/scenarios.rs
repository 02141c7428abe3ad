//! Frozen AI scenarios: the document and inputs, the scripted model replies
//! used once to author the fixture files, and the expected outcome.
//!
//! Shared by the ai integration tests, the fixture author example and the
//! acceptance suite; paths are therefore spelled relative to this crate.

#![allow(dead_code)]

use std::path::PathBuf;

use serde_json::{json, Value};
use treedoc_ai::AiOp;
use treedoc_core::format::suggestion_to_json;
use treedoc_core::{Document, DocumentTree};
use treedoc_llm::{ChatResponse, ToolCall};
use treedoc_testkit::{essay, t1};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../ai/fixtures"))
}

pub fn t1_doc() -> Document {
    Document::new(t1())
}

pub enum ButtonExpect {
    /// Titles of the proposed children.
    Children(&'static [&'static str]),
    /// Exact canonical content of the proposal.
    Content(&'static str),
    /// A substring of the rejection reason.
    Malformed(&'static str),
}

pub struct ButtonCase {
    pub name: &'static str,
    pub doc: fn() -> Document,
    pub node: &'static str,
    pub op: AiOp,
    pub prompt: Option<&'static str>,
    pub reply: &'static str,
    pub expect: ButtonExpect,
}

impl ButtonCase {
    pub fn fixture(&self) -> PathBuf {
        fixtures_dir().join(format!("button_{}.json", self.name))
    }
}

pub fn button_cases() -> Vec<ButtonCase> {
    use ButtonExpect::*;
    vec![
        ButtonCase {
            name: "split_ok",
            doc: essay,
            node: "body",
            op: AiOp::Split,
            prompt: None,
            reply: r#"[{"title": "Citation habits", "content": "<ul><li>Citation habits</li></ul>"}, {"title": "Detection tools", "content": "<ul><li>Detection tools</li></ul>"}]"#,
            expect: Children(&["Citation habits", "Detection tools"]),
        },
        ButtonCase {
            name: "split_fenced_ok",
            doc: essay,
            node: "essay",
            op: AiOp::Split,
            prompt: None,
            reply: "```json\n[{\"title\": \"Why integrity matters\", \"content\": \"<ul><li>Why integrity matters</li></ul>\"}]\n```",
            expect: Children(&["Why integrity matters"]),
        },
        ButtonCase {
            name: "split_six_children",
            doc: essay,
            node: "body",
            op: AiOp::Split,
            prompt: None,
            reply: r#"[{"title": "1", "content": "<p>a</p>"}, {"title": "2", "content": "<p>b</p>"}, {"title": "3", "content": "<p>c</p>"}, {"title": "4", "content": "<p>d</p>"}, {"title": "5", "content": "<p>e</p>"}, {"title": "6", "content": "<p>f</p>"}]"#,
            expect: Malformed("6 children"),
        },
        ButtonCase {
            name: "split_not_json",
            doc: essay,
            node: "body",
            op: AiOp::Split,
            prompt: None,
            reply: "Sure! Here are two sections: Citation habits and Detection tools.",
            expect: Malformed("not JSON"),
        },
        ButtonCase {
            name: "split_foreign_element",
            doc: essay,
            node: "essay",
            op: AiOp::Split,
            prompt: None,
            reply: r#"[{"title": "Costs", "content": "<ul><li><b>Plagiarism</b> and its costs</li></ul>"}]"#,
            expect: Malformed("uses <b>"),
        },
        ButtonCase {
            name: "outline_ok",
            doc: t1_doc,
            node: "B",
            op: AiOp::OutlineFromChildren,
            prompt: None,
            reply: "<ul><li>pB1 in brief</li><li>pB2 in brief</li></ul>",
            expect: Content("<ul><li>pB1 in brief</li><li>pB2 in brief</li></ul><div class=\"export\"><p>eB</p></div>"),
        },
        ButtonCase {
            name: "outline_six_points",
            doc: t1_doc,
            node: "B",
            op: AiOp::OutlineFromChildren,
            prompt: None,
            reply: "<ul><li>one</li><li>two</li><li>three</li><li>four</li><li>five</li><li>six</li></ul>",
            expect: Malformed("6 key points"),
        },
        ButtonCase {
            name: "outline_long_point",
            doc: t1_doc,
            node: "B",
            op: AiOp::OutlineFromChildren,
            prompt: None,
            reply: "<ul><li>This single key point keeps going far beyond the limit because it lists every detail of both children and then repeats them again with more words than any reader would want in a short outline</li><li>short</li></ul>",
            expect: Malformed("35 words"),
        },
        ButtonCase {
            name: "para_ok",
            doc: essay,
            node: "essay",
            op: AiOp::Paragraph,
            prompt: None,
            reply: "<p>Integrity matters because plagiarism carries real costs.</p>",
            expect: Content("<ul><li>Why integrity matters</li><li>Plagiarism and its costs</li></ul><div class=\"export\"><p>Integrity matters because plagiarism carries real costs.</p></div>"),
        },
        ButtonCase {
            name: "para_with_prompt_keeps_link",
            doc: essay,
            node: "cite",
            op: AiOp::Paragraph,
            prompt: Some("Keep it to one sentence."),
            reply: "<p>Writers should cite every source using a <a href=\"https://example.org/apa\">recognised style guide</a>.</p>",
            expect: Content("<p>Cite every source with a <a href=\"https://example.org/apa\">style guide</a>.</p><div class=\"export\"><p>Writers should cite every source using a <a href=\"https://example.org/apa\">recognised style guide</a>.</p></div>"),
        },
        ButtonCase {
            name: "para_dropped_link",
            doc: essay,
            node: "cite",
            op: AiOp::Paragraph,
            prompt: None,
            reply: "<p>Writers should cite every source using a style guide.</p>",
            expect: Malformed("link dropped: https://example.org/apa"),
        },
        ButtonCase {
            name: "outline_from_para_ok",
            doc: essay,
            node: "body",
            op: AiOp::OutlineFromParagraph,
            prompt: None,
            reply: "<ul><li>Citation habits protect writers</li></ul>",
            expect: Content("<ul><li>Citation habits protect writers</li></ul><div class=\"export\"><p>Good citation habits protect writers.</p></div>"),
        },
        ButtonCase {
            name: "outline_from_para_six_points",
            doc: essay,
            node: "body",
            op: AiOp::OutlineFromParagraph,
            prompt: None,
            reply: "<ol><li>a</li><li>b</li><li>c</li><li>d</li><li>e</li><li>f</li></ol>",
            expect: Malformed("6 key points"),
        },
    ]
}

pub fn call(id: &str, name: &str, args: Value) -> ToolCall {
    ToolCall { id: id.to_string(), name: name.to_string(), arguments: args }
}

fn calls(text: Option<&str>, cs: Vec<ToolCall>) -> ChatResponse {
    ChatResponse::calls(text, cs)
}

fn say(text: &str) -> ChatResponse {
    ChatResponse::text(text)
}

pub struct AgentCase {
    pub name: &'static str,
    pub doc: fn() -> Document,
    pub selected: &'static str,
    pub marked: &'static [&'static str],
    pub turns: &'static [&'static str],
    pub script: fn() -> Vec<ChatResponse>,
    /// Tool names in call order across all turns.
    pub expect_tools: &'static [&'static str],
    /// How many tool results were errors.
    pub expect_tool_errors: usize,
    /// The final queue, each entry as `{id, kind, target, origin, payload}`.
    pub expect_queue: fn() -> Value,
    pub expect_exhausted: bool,
}

impl AgentCase {
    pub fn fixture(&self) -> PathBuf {
        fixtures_dir().join(format!("agent_{}.json", self.name))
    }
}

/// The queue in the shape used by `expect_queue`.
pub fn queue_json(doc: &Document) -> Value {
    Value::Array(
        doc.suggestions()
            .iter()
            .map(|s| {
                let mut v = suggestion_to_json(s);
                v.as_object_mut().unwrap().remove("created_ms");
                v.as_object_mut().unwrap().remove("status");
                v
            })
            .collect(),
    )
}

pub fn tree_bytes(tree: &DocumentTree) -> String {
    treedoc_core::tree_to_json(tree)
}

pub fn agent_cases() -> Vec<AgentCase> {
    vec![
        AgentCase {
            name: "localized_edit",
            doc: t1_doc,
            selected: "B",
            marked: &[],
            turns: &["Does this node match its parent? Fix it if not."],
            script: || {
                vec![
                    calls(
                        Some("The outline should mention the root summary."),
                        vec![call("call_1", "suggest_new_content", json!({
                            "node_id": "B",
                            "content": "<p>outline B, aligned with the root summary</p><div class=\"export\"><p>eB</p></div>"
                        }))],
                    ),
                    say("I proposed a revision of this node."),
                ]
            },
            expect_tools: &["suggest_new_content"],
            expect_tool_errors: 0,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_content", "target": "B", "origin": "assistant",
                 "payload": {"content": "<p>outline B, aligned with the root summary</p><div class=\"export\"><p>eB</p></div>"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "search_then_edit",
            doc: essay,
            selected: "essay",
            marked: &[],
            turns: &["Find where plagiarism detection is discussed and make it more precise."],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "search_by_keyword", json!({"keyword": "plagiarism"}))]),
                    calls(None, vec![call("call_2", "load_node_content", json!({"node_id": "detect"}))]),
                    calls(None, vec![call("call_3", "suggest_new_content", json!({
                        "node_id": "detect",
                        "content": "<p>Detection software flags possible plagiarism by matching passages against large text corpora.</p>"
                    }))]),
                    say("I found the detection node and proposed a sharper version."),
                ]
            },
            expect_tools: &["search_by_keyword", "load_node_content", "suggest_new_content"],
            expect_tool_errors: 0,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_content", "target": "detect", "origin": "assistant",
                 "payload": {"content": "<p>Detection software flags possible plagiarism by matching passages against large text corpora.</p>"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "load_gate_recovery",
            doc: essay,
            selected: "intro",
            marked: &[],
            turns: &["Make the conclusion echo the introduction."],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "suggest_new_content", json!({
                        "node_id": "concl", "content": "<p>Integrity eases the pressure students face.</p>"
                    }))]),
                    calls(None, vec![call("call_2", "load_node_content", json!({"node_id": "concl"}))]),
                    calls(None, vec![call("call_3", "suggest_new_content", json!({
                        "node_id": "concl", "content": "<p>Integrity is a shared duty that eases the pressure students face.</p>"
                    }))]),
                    say("Proposed an updated conclusion."),
                ]
            },
            expect_tools: &["suggest_new_content", "load_node_content", "suggest_new_content"],
            expect_tool_errors: 1,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_content", "target": "concl", "origin": "assistant",
                 "payload": {"content": "<p>Integrity is a shared duty that eases the pressure students face.</p>"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "children_then_new_child",
            doc: essay,
            selected: "body",
            marked: &[],
            turns: &["Is a subsection missing here? Add one if so."],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "load_node_children", json!({"node_id": "body"}))]),
                    calls(
                        Some("Honor codes are not covered yet."),
                        vec![call("call_2", "suggest_new_child", json!({
                            "parent_id": "body", "title": "Honor codes", "content": "<p>Honor codes set shared expectations.</p>"
                        }))],
                    ),
                    say("Suggested a new subsection on honor codes."),
                ]
            },
            expect_tools: &["load_node_children", "suggest_new_child"],
            expect_tool_errors: 0,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_child", "target": "body", "origin": "assistant",
                 "payload": {"title": "Honor codes", "content": "<p>Honor codes set shared expectations.</p>"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "title_change",
            doc: essay,
            selected: "intro",
            marked: &[],
            turns: &["Give this node a more specific title."],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "suggest_new_title", json!({"node_id": "intro", "title": "Pressure to Publish"}))]),
                    say("Suggested a new title."),
                ]
            },
            expect_tools: &["suggest_new_title"],
            expect_tool_errors: 0,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_title", "target": "intro", "origin": "assistant",
                 "payload": {"title": "Pressure to Publish"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "marked_and_parent_edit",
            doc: essay,
            selected: "cite",
            marked: &["concl"],
            turns: &["Update the parent outline and the marked conclusion to mention style guides."],
            script: || {
                vec![
                    calls(None, vec![
                        call("call_1", "suggest_new_content", json!({
                            "node_id": "body",
                            "content": "<ul><li>Citation habits and style guides</li><li>Detection tools</li></ul><div class=\"export\"><p>Good citation habits protect writers.</p></div>"
                        })),
                        call("call_2", "suggest_new_content", json!({
                            "node_id": "concl", "content": "<p>Integrity, backed by a good style guide, is a shared duty.</p>"
                        })),
                    ]),
                    say("Both nodes now mention style guides."),
                ]
            },
            expect_tools: &["suggest_new_content", "suggest_new_content"],
            expect_tool_errors: 0,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_content", "target": "body", "origin": "assistant",
                 "payload": {"content": "<ul><li>Citation habits and style guides</li><li>Detection tools</li></ul><div class=\"export\"><p>Good citation habits protect writers.</p></div>"}},
                {"id": "s2", "kind": "new_content", "target": "concl", "origin": "assistant",
                 "payload": {"content": "<p>Integrity, backed by a good style guide, is a shared duty.</p>"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "unknown_node_load",
            doc: essay,
            selected: "intro",
            marked: &[],
            turns: &["What does the methods section say?"],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "load_node_content", json!({"node_id": "methods"}))]),
                    say("There is no methods section in this document."),
                ]
            },
            expect_tools: &["load_node_content"],
            expect_tool_errors: 1,
            expect_queue: || json!([]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "budget_exhaustion",
            doc: essay,
            selected: "essay",
            marked: &[],
            turns: &["Walk the whole tree."],
            script: || {
                (1..=16)
                    .map(|i| calls(None, vec![call(&format!("call_{i}"), "load_node_children", json!({"node_id": "essay"}))]))
                    .collect()
            },
            expect_tools: &["load_node_children"; 16],
            expect_tool_errors: 0,
            expect_queue: || json!([]),
            expect_exhausted: true,
        },
        AgentCase {
            name: "question_only",
            doc: essay,
            selected: "detect",
            marked: &[],
            turns: &["What is this node about?"],
            script: || vec![say("It explains how software detects plagiarism.")],
            expect_tools: &[],
            expect_tool_errors: 0,
            expect_queue: || json!([]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "invalid_fragment_recovery",
            doc: essay,
            selected: "intro",
            marked: &[],
            turns: &["Tighten this paragraph."],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "suggest_new_content", json!({"node_id": "intro", "content": "<p>Students feel pressure to publish early."}))]),
                    calls(None, vec![call("call_2", "suggest_new_content", json!({"node_id": "intro", "content": "<p>Students feel pressure to publish early.</p>"}))]),
                    say("Done."),
                ]
            },
            expect_tools: &["suggest_new_content", "suggest_new_content"],
            expect_tool_errors: 1,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_content", "target": "intro", "origin": "assistant",
                 "payload": {"content": "<p>Students feel pressure to publish early.</p>"}}
            ]),
            expect_exhausted: false,
        },
        AgentCase {
            name: "two_turns_keep_loads",
            doc: essay,
            selected: "intro",
            marked: &[],
            turns: &["Read the citation section.", "Now retitle it."],
            script: || {
                vec![
                    calls(None, vec![call("call_1", "load_node_content", json!({"node_id": "cite"}))]),
                    say("It asks writers to cite sources with a style guide."),
                    calls(None, vec![call("call_2", "suggest_new_title", json!({"node_id": "cite", "title": "Citing with a style guide"}))]),
                    say("Suggested a clearer title."),
                ]
            },
            expect_tools: &["load_node_content", "suggest_new_title"],
            expect_tool_errors: 0,
            expect_queue: || json!([
                {"id": "s1", "kind": "new_title", "target": "cite", "origin": "assistant",
                 "payload": {"title": "Citing with a style guide"}}
            ]),
            expect_exhausted: false,
        },
    ]
}

pub struct AgentRun {
    pub before: String,
    pub doc: Document,
    pub outcomes: Vec<treedoc_ai::TurnOutcome>,
}

/// Plays every turn of `case` against `model`.
pub fn run_agent_case(case: &AgentCase, model: &dyn treedoc_llm::ChatModel) -> AgentRun {
    let doc = (case.doc)();
    let before = tree_bytes(&doc.tree);
    let id = |s: &str| treedoc_core::NodeId::new(s).unwrap();
    let mut session = treedoc_ai::AgentSession::new(
        "session-1",
        doc.tree.doc_id(),
        id(case.selected),
        case.marked.iter().map(|m| id(m)).collect(),
    );
    let cell = std::sync::Mutex::new(doc);
    let outcomes = case
        .turns
        .iter()
        .map(|t| treedoc_ai::run_turn(&mut session, &cell, model, t).expect("turn runs"))
        .collect();
    AgentRun { before, doc: cell.into_inner().unwrap(), outcomes }
}

pub fn run_button_case(
    case: &ButtonCase,
    model: &dyn treedoc_llm::ChatModel,
) -> (String, Document, Result<treedoc_core::PendingSuggestion, treedoc_ai::AiError>) {
    let doc = (case.doc)();
    let before = tree_bytes(&doc.tree);
    let node = treedoc_core::NodeId::new(case.node).unwrap();
    let result = treedoc_ai::ops::run(case.op, &doc.tree, &node, case.prompt, model);
    (before, doc, result)
}
