//! Request helper and the randomized API driver.
//!
//! The driver keeps a shadow copy of the tree structure (parents, child
//! order, titles) and predicts the outcome of every structural call from
//! it. After each call the live tree is audited and compared to the shadow.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::Rng;
use serde_json::{json, Value};
use tower::ServiceExt;
use treedoc_core::{tree_to_json, DocumentTree, ErrorCode};
use treedoc_llm::{ChatModel, ChatRequest, ChatResponse, GatewayError};
use treedoc_server::{router, AppState, DocumentStore};

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (u16, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.unwrap_or_default()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

/// Replies drawn at random from compliant and non-compliant shapes.
pub struct FuzzModel {
    rng: Mutex<StdRng>,
}

impl FuzzModel {
    pub fn new(rng: StdRng) -> FuzzModel {
        FuzzModel { rng: Mutex::new(rng) }
    }
}

const REPLIES: &[&str] = &[
    r#"[{"title":"One","content":"<p>first</p>"},{"title":"Two","content":"<p>second</p>"}]"#,
    r#"[{"title":"A","content":"<p>a</p>"},{"title":"B","content":"<p>b</p>"},{"title":"C","content":"<p>c</p>"},{"title":"D","content":"<p>d</p>"},{"title":"E","content":"<p>e</p>"},{"title":"F","content":"<p>f</p>"}]"#,
    "<ul><li>short point</li><li>another point</li></ul>",
    "<p>A generated paragraph about the topic.</p>",
    "not json and not html <script>",
    "",
];

impl ChatModel for FuzzModel {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut r = self.rng.lock().unwrap();
        if !req.tools.is_empty() {
            return Ok(ChatResponse::text("Noted."));
        }
        match r.random_range(0..10) {
            0 => Err(GatewayError::Timeout),
            1 => Err(GatewayError::Provider { status: Some(500), detail: "upstream".into() }),
            _ => Ok(ChatResponse::text(REPLIES[r.random_range(0..REPLIES.len())])),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Shadow {
    root: String,
    children: HashMap<String, Vec<String>>,
    parent: HashMap<String, String>,
    titles: HashMap<String, String>,
}

impl Shadow {
    fn from_tree(t: &DocumentTree) -> Shadow {
        let mut s = Shadow {
            root: t.root().to_string(),
            children: HashMap::new(),
            parent: HashMap::new(),
            titles: HashMap::new(),
        };
        for n in t.nodes_in_order() {
            let kids: Vec<String> = n.children.iter().map(|c| c.to_string()).collect();
            for k in &kids {
                s.parent.insert(k.clone(), n.id.to_string());
            }
            s.children.insert(n.id.to_string(), kids);
            s.titles.insert(n.id.to_string(), n.title.clone());
        }
        s
    }

    fn has(&self, id: &str) -> bool {
        self.children.contains_key(id)
    }

    fn is_ancestor_or_self<'a>(&'a self, a: &str, mut b: &'a str) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.parent.get(b) {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    fn subtree(&self, id: &str) -> Vec<String> {
        let mut out = vec![id.to_string()];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[&out[i]].iter().cloned());
            i += 1;
        }
        out
    }

    fn ids(&self) -> Vec<String> {
        let mut v: Vec<String> = self.children.keys().cloned().collect();
        v.sort();
        v
    }
}

#[derive(Debug, Default)]
pub struct FuzzReport {
    pub calls: usize,
    pub ok: usize,
    pub by_code: BTreeMap<String, usize>,
    pub violations: Vec<String>,
}

enum Content {
    Valid(String),
    Invalid(String),
}

fn content(r: &mut StdRng) -> Content {
    const BAD: &[&str] = &[
        "<script>x</script>",
        "<p>unclosed",
        "<div class=\"export\"><p>a</p></div><p>after</p>",
        "<a onclick=\"x\">y</a>",
        "<p><div>nested</div></p>",
    ];
    if r.random_bool(0.2) {
        Content::Invalid(BAD[r.random_range(0..BAD.len())].to_string())
    } else {
        Content::Valid(treedoc_testkit::random_content(r))
    }
}

fn title(r: &mut StdRng) -> String {
    match r.random_range(0..10) {
        0 => String::new(),
        1 => "   ".into(),
        2 => "x".repeat(201),
        3 => "é".repeat(200),
        _ => treedoc_testkit::words(r, 1, 4),
    }
}

fn pick(r: &mut StdRng, s: &Shadow) -> String {
    if r.random_bool(0.1) {
        return ["ghost", "no-such-node", "bad%20id", "x"][r.random_range(0..4)].to_string();
    }
    let ids = s.ids();
    ids[r.random_range(0..ids.len())].clone()
}

fn position(r: &mut StdRng, len: usize) -> Option<usize> {
    if r.random_bool(0.4) {
        None
    } else {
        Some(r.random_range(0..=len + 1))
    }
}

fn code_of(status: u16, body: &Value) -> Option<String> {
    (status >= 400).then(|| body["error"].as_str().unwrap_or("<missing>").to_string())
}

fn check_status(status: u16, body: &Value, report: &mut FuzzReport, what: &str) {
    let Some(code) = code_of(status, body) else { return };
    let want = match code.as_str() {
        "bad_request" => 400,
        "not_found" => 404,
        c => match ErrorCode::parse(c) {
            Some(ec) => ec.http_status(),
            None => {
                report.violations.push(format!("{what}: undocumented code {c}"));
                return;
            }
        },
    };
    if status != want {
        report.violations.push(format!("{what}: {code} returned as {status}, documented {want}"));
    }
    if !body["detail"].is_string() {
        report.violations.push(format!("{what}: error body lacks detail"));
    }
}

/// Drives `n` random calls against a fresh store and returns what it saw.
pub fn run(seed: u64, n: usize) -> FuzzReport {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
    rt.block_on(drive(seed, n))
}

async fn drive(seed: u64, n: usize) -> FuzzReport {
    let mut r = treedoc_testkit::rng(seed);
    let dir = tempfile::tempdir().unwrap();
    let store = DocumentStore::open(dir.path()).unwrap();
    let model: Arc<dyn ChatModel> = Arc::new(FuzzModel::new(treedoc_testkit::rng(seed ^ 0x5eed)));
    let state = AppState::new(store.clone(), model);
    let app = router(state.clone());
    let mut report = FuzzReport::default();

    let (_, created) = call(&app, "POST", "/docs", Some(json!({"title": "Fuzz"}).to_string())).await;
    let d = created["doc_id"].as_str().unwrap().to_string();
    let mut shadow = Shadow::from_tree(&state.doc(&d).unwrap().lock().unwrap().tree);
    let mut session: Option<String> = None;

    for i in 0..n {
        let before_bytes = tree_to_json(&state.doc(&d).unwrap().lock().unwrap().tree);
        // Structural calls carry an expected outcome: Ok(()) or Err(code).
        let mut expect: Option<Result<(), &'static str>> = None;
        let mut structural_only = false;
        let kind = r.random_range(0..100);
        let (method, uri, body, label): (&str, String, Option<String>, &str) = match kind {
            0..=19 => {
                let parent = pick(&mut r, &shadow);
                let t = title(&mut r);
                let c = content(&mut r);
                let len = shadow.children.get(&parent).map_or(0, Vec::len);
                let pos = position(&mut r, len);
                expect = Some(match &c {
                    Content::Invalid(_) => Err("invalid_fragment"),
                    _ if !shadow.has(&parent) => Err("unknown_node"),
                    _ if pos.is_some_and(|p| p > len) => Err("position_out_of_range"),
                    _ if t.chars().count() > 200 => Err("title_too_long"),
                    _ => Ok(()),
                });
                let c = match c {
                    Content::Valid(s) | Content::Invalid(s) => s,
                };
                let mut b = json!({"parent": parent, "title": t, "content": c});
                if let Some(p) = pos {
                    b["position"] = json!(p);
                }
                ("POST", format!("/docs/{d}/nodes"), Some(b.to_string()), "add")
            }
            20..=31 => {
                let node = pick(&mut r, &shadow);
                let mut b = json!({});
                let t = r.random_bool(0.6).then(|| title(&mut r));
                let c = r.random_bool(0.6).then(|| content(&mut r));
                let root = node == shadow.root;
                expect = Some(if !shadow.has(&node) {
                    Err("unknown_node")
                } else if matches!(c, Some(Content::Invalid(_))) {
                    Err("invalid_fragment")
                } else if t.as_ref().is_some_and(|t| t.chars().count() > 200) {
                    Err("title_too_long")
                } else if root && t.as_ref().is_some_and(|t| t.trim().is_empty()) {
                    Err("empty_title")
                } else {
                    Ok(())
                });
                if let Some(t) = &t {
                    b["title"] = json!(t);
                }
                if let Some(Content::Valid(s) | Content::Invalid(s)) = &c {
                    b["content"] = json!(s);
                }
                ("PATCH", format!("/docs/{d}/nodes/{node}"), Some(b.to_string()), "patch")
            }
            32..=37 => {
                let node = if r.random_bool(0.15) { shadow.root.clone() } else { pick(&mut r, &shadow) };
                expect = Some(if !shadow.has(&node) {
                    Err("unknown_node")
                } else if node == shadow.root {
                    Err("cannot_delete_root")
                } else {
                    Ok(())
                });
                ("DELETE", format!("/docs/{d}/nodes/{node}"), None, "delete")
            }
            38..=51 => {
                let node = pick(&mut r, &shadow);
                let parent = pick(&mut r, &shadow);
                let len = shadow.children.get(&parent).map_or(0, |k| k.len() - usize::from(k.contains(&node)));
                let pos = position(&mut r, len);
                expect = Some(if !shadow.has(&node) || !shadow.has(&parent) {
                    Err("unknown_node")
                } else if shadow.is_ancestor_or_self(&node, &parent) {
                    Err("cycle_would_form")
                } else if pos.is_some_and(|p| p > len) {
                    Err("position_out_of_range")
                } else {
                    Ok(())
                });
                let mut b = json!({"new_parent": parent});
                if let Some(p) = pos {
                    b["position"] = json!(p);
                }
                ("POST", format!("/docs/{d}/nodes/{node}/move"), Some(b.to_string()), "move")
            }
            52..=55 => ("GET", format!("/docs/{d}/tree"), None, "tree"),
            56..=61 => {
                let f = ["html", "markdown", "pdf"][r.random_range(0..3)];
                let h = ["on", "off", "maybe"][r.random_range(0..3)];
                let root = pick(&mut r, &shadow);
                ("GET", format!("/docs/{d}/linear?root={root}&format={f}&headings={h}"), None, "linear")
            }
            62..=65 => {
                let q = ["tree", "NODE", "%20", "", "zz"][r.random_range(0..5)];
                ("GET", format!("/docs/{d}/search?q={q}"), None, "search")
            }
            66..=75 => {
                let node = pick(&mut r, &shadow);
                let op = ["split", "outline_from_children", "paragraph", "outline_from_paragraph", "translate"]
                    [r.random_range(0..5)];
                structural_only = true;
                ("POST", format!("/docs/{d}/nodes/{node}/ai/{op}"), None, "ai")
            }
            76..=77 => {
                let st = ["pending", "accepted", "rejected", "", "bogus"][r.random_range(0..5)];
                ("GET", format!("/docs/{d}/suggestions?status={st}"), None, "suggestions")
            }
            78..=83 => {
                let s = format!("s{}", r.random_range(1..12));
                let b = match r.random_range(0..6) {
                    0 => Some(json!({"edited_payload": {"content": "<p>edited</p>"}}).to_string()),
                    1 => Some(json!({"edited_payload": {"title": 5}}).to_string()),
                    _ => None,
                };
                ("POST", format!("/docs/{d}/suggestions/{s}/accept"), b, "accept")
            }
            84..=85 => {
                let s = format!("s{}", r.random_range(1..12));
                ("POST", format!("/docs/{d}/suggestions/{s}/reject"), None, "reject")
            }
            86..=87 => {
                let node = pick(&mut r, &shadow);
                ("GET", format!("/docs/{d}/nodes/{node}/versions"), None, "versions")
            }
            88..=90 => {
                let node = pick(&mut r, &shadow);
                let v = ["1", "2", "3", "0", "x"][r.random_range(0..5)];
                ("POST", format!("/docs/{d}/nodes/{node}/versions/{v}/restore"), None, "restore")
            }
            91..=92 => {
                let node = pick(&mut r, &shadow);
                let mut b = json!({"selected": node, "message": "what is here?"});
                if let Some(s) = &session {
                    if r.random_bool(0.7) {
                        b["session_id"] = json!(s);
                    }
                }
                structural_only = true;
                ("POST", format!("/docs/{d}/chat"), Some(b.to_string()), "chat")
            }
            93..=95 => {
                let garbage = ["{", "[]", r#"{"bogus":1}"#, r#"{"parent":7}"#, "null"][r.random_range(0..5)];
                let uri = match r.random_range(0..3) {
                    0 => format!("/docs/{d}/nodes"),
                    1 => format!("/docs/{d}/nodes/{}/move", shadow.root),
                    _ => format!("/docs/{d}/nodes/{}", shadow.root),
                };
                let m = if uri.ends_with(&shadow.root) { "PATCH" } else { "POST" };
                expect = Some(Err("bad_request"));
                (m, uri, Some(garbage.to_string()), "garbage")
            }
            96..=97 => {
                expect = Some(Err("unknown_doc"));
                ("GET", "/docs/nosuchdoc/tree".to_string(), None, "unknown_doc")
            }
            _ => {
                expect = Some(Err("not_found"));
                ("GET", format!("/docs/{d}/frobnicate"), None, "unknown_route")
            }
        };

        let (status, resp) = call(&app, method, &uri, body.clone()).await;
        report.calls += 1;
        let what = format!("call {i} {label} {method} {uri} {}", body.as_deref().unwrap_or(""));
        check_status(status, &resp, &mut report, &what);
        match code_of(status, &resp) {
            Some(c) => *report.by_code.entry(c).or_default() += 1,
            None => report.ok += 1,
        }

        if let Some(e) = expect {
            let got = code_of(status, &resp);
            let ok = match (&e, &got) {
                (Ok(()), None) => true,
                (Err(w), Some(g)) => w == g,
                _ => false,
            };
            if !ok {
                report.violations.push(format!("{what}: expected {e:?}, got {status} {resp}"));
            }
        }

        // Advance the shadow.
        let cell = state.doc(&d).unwrap();
        let doc = cell.lock().unwrap();
        let live = Shadow::from_tree(&doc.tree);
        if status < 400 {
            match label {
                "add" => {
                    let b: Value = serde_json::from_str(body.as_deref().unwrap()).unwrap();
                    let parent = b["parent"].as_str().unwrap().to_string();
                    let id = resp["id"].as_str().unwrap().to_string();
                    let kids = shadow.children.get_mut(&parent).unwrap();
                    let pos = b["position"].as_u64().map_or(kids.len(), |p| p as usize);
                    kids.insert(pos, id.clone());
                    shadow.children.insert(id.clone(), Vec::new());
                    shadow.parent.insert(id.clone(), parent);
                    shadow.titles.insert(id, b["title"].as_str().unwrap().to_string());
                }
                "patch" => {
                    let b: Value = serde_json::from_str(body.as_deref().unwrap()).unwrap();
                    if let Some(t) = b["title"].as_str() {
                        let node = uri.rsplit('/').next().unwrap();
                        shadow.titles.insert(node.to_string(), t.to_string());
                    }
                }
                "delete" => {
                    let node = uri.rsplit('/').next().unwrap().to_string();
                    let doomed = shadow.subtree(&node);
                    if resp["removed"].as_u64() != Some(doomed.len() as u64) {
                        report.violations.push(format!("{what}: removed {} want {}", resp["removed"], doomed.len()));
                    }
                    let p = shadow.parent[&node].clone();
                    shadow.children.get_mut(&p).unwrap().retain(|c| *c != node);
                    for x in doomed {
                        shadow.children.remove(&x);
                        shadow.parent.remove(&x);
                        shadow.titles.remove(&x);
                    }
                }
                "move" => {
                    let b: Value = serde_json::from_str(body.as_deref().unwrap()).unwrap();
                    let node = uri.rsplit('/').nth(1).unwrap().to_string();
                    let parent = b["new_parent"].as_str().unwrap().to_string();
                    let old = shadow.parent[&node].clone();
                    shadow.children.get_mut(&old).unwrap().retain(|c| *c != node);
                    let kids = shadow.children.get_mut(&parent).unwrap();
                    let pos = b["position"].as_u64().map_or(kids.len(), |p| p as usize);
                    kids.insert(pos, node.clone());
                    shadow.parent.insert(node, parent);
                }
                "accept" | "restore" => {
                    // New nodes may only appear under existing ones; the
                    // old structure must survive intact.
                    for (id, kids) in &shadow.children {
                        let Some(now) = live.children.get(id) else {
                            report.violations.push(format!("{what}: node {id} vanished"));
                            continue;
                        };
                        let kept: Vec<&String> = now.iter().filter(|k| shadow.has(k)).collect();
                        if kept != kids.iter().collect::<Vec<_>>() {
                            report.violations.push(format!("{what}: children of {id} reshuffled"));
                        }
                    }
                    shadow = live.clone();
                }
                "chat" => {
                    session = resp["session_id"].as_str().map(str::to_string);
                }
                _ => {}
            }
        }
        let after_bytes = tree_to_json(&doc.tree);
        if (structural_only || status >= 400 || matches!(method, "GET")) && after_bytes != before_bytes {
            report.violations.push(format!("{what}: tree changed"));
        }
        if let Err(e) = doc.tree.audit() {
            report.violations.push(format!("{what}: audit failed: {e}"));
        }
        if live != shadow {
            report.violations.push(format!("{what}: live tree diverged from shadow"));
            shadow = live;
        }
        if i % 250 == 0 {
            let disk = store.load(&d).unwrap();
            if disk.tree != doc.tree {
                report.violations.push(format!("{what}: disk copy differs from memory"));
            }
        }
    }
    report
}
