//! The `treedoc` command line.
//!
//! Every command opens the store directory, applies one engine operation and
//! writes the document back. Data goes to stdout, diagnostics to stderr.

pub mod markdown;

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;
use treedoc_ai::AiOp;
use treedoc_core::diff::DiffOp;
use treedoc_core::format::payload_from_json;
use treedoc_core::{
    linearize, render, Diff, Document, DocumentTree, ErrorCode, HasErrorCode, HeadingPolicy, NodeId, RenderFormat,
    RichFragment, SuggestionKind, SuggestionPayload, SuggestionStatus,
};
use treedoc_llm::{ChatModel, GatewayConfig};
use treedoc_server::{AppState, DocumentStore};

#[derive(Debug, Parser)]
#[command(name = "treedoc", version, about = "Hierarchical documents with reviewed AI edits")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "TREEDOC_DIR", default_value = ".treedoc")]
    pub dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Md,
    Html,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OpName {
    Split,
    Outline,
    Paragraph,
    OutlineFromPara,
}

impl From<OpName> for AiOp {
    fn from(o: OpName) -> AiOp {
        match o {
            OpName::Split => AiOp::Split,
            OpName::Outline => AiOp::OutlineFromChildren,
            OpName::Paragraph => AiOp::Paragraph,
            OpName::OutlineFromPara => AiOp::OutlineFromParagraph,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatusArg {
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty document and print its id.
    New { title: String },
    /// Create a document from a markdown file.
    Import {
        file: PathBuf,
        #[arg(long)]
        doc: String,
        /// Root title; defaults to the file stem.
        #[arg(long)]
        title: Option<String>,
    },
    /// Print the linear view.
    Export {
        #[arg(long)]
        doc: String,
        #[arg(long)]
        node: Option<String>,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
        #[arg(long, value_enum, default_value = "on")]
        headings: Toggle,
    },
    /// Print the outline of titles with ids.
    Tree {
        #[arg(long)]
        doc: String,
    },
    /// Nodes whose title or text contains a keyword.
    Search {
        #[arg(long)]
        doc: String,
        keyword: String,
    },
    /// Ask the model for a suggestion on one node.
    Ai {
        #[arg(value_enum)]
        op: OpName,
        #[arg(long)]
        doc: String,
        #[arg(long)]
        node: String,
        #[arg(long)]
        prompt: Option<String>,
    },
    /// List suggestions.
    Suggestions {
        #[arg(long)]
        doc: String,
        #[arg(long, value_enum)]
        status: Option<StatusArg>,
    },
    /// Apply a pending suggestion.
    Accept {
        #[arg(long)]
        doc: String,
        #[arg(long)]
        suggestion: String,
        /// Replacement payload: JSON, or raw HTML / title text.
        #[arg(long)]
        edited_file: Option<PathBuf>,
    },
    /// Discard a pending suggestion.
    Reject {
        #[arg(long)]
        doc: String,
        #[arg(long)]
        suggestion: String,
    },
    /// Version history of one node.
    Versions {
        #[arg(long)]
        doc: String,
        #[arg(long)]
        node: String,
    },
    /// Put a node back to a recorded version.
    Restore {
        #[arg(long)]
        doc: String,
        #[arg(long)]
        node: String,
        #[arg(long = "v")]
        v: u32,
    },
    /// Run the HTTP API.
    Serve {
        /// Defaults to TREEDOC_ADDR or 127.0.0.1:7340.
        #[arg(long)]
        addr: Option<String>,
    },
}

/// A domain failure: printed as `error: <code>: <detail>`, exit status 1.
#[derive(Debug)]
pub struct CliError {
    pub code: ErrorCode,
    pub detail: String,
}

impl<E: HasErrorCode + Display> From<E> for CliError {
    fn from(e: E) -> CliError {
        CliError { code: e.code(), detail: e.to_string() }
    }
}

fn fail(code: ErrorCode, detail: impl Into<String>) -> CliError {
    CliError { code, detail: detail.into() }
}

type Out<'a> = &'a mut dyn Write;

/// Parses `args` (program name first) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {}", e.code, e.detail);
            1
        }
    }
}

fn node_id(raw: &str) -> Result<NodeId, CliError> {
    NodeId::new(raw).map_err(|_| fail(ErrorCode::UnknownNode, format!("unknown node {raw}")))
}

fn model() -> Result<Arc<dyn ChatModel>, CliError> {
    Ok(GatewayConfig::from_env()?.build()?)
}

fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| fail(ErrorCode::IoError, format!("{}: {e}", path.display()))
}

pub fn execute(cli: Cli, out: Out) -> Result<(), CliError> {
    let store = DocumentStore::open(&cli.dir)?;
    let w = |e: std::io::Error| fail(ErrorCode::IoError, format!("stdout: {e}"));
    match cli.command {
        Command::New { title } => {
            let doc = Document::new(DocumentTree::create(&title)?);
            store.create(&doc)?;
            writeln!(out, "{}", doc.tree.doc_id()).map_err(w)?;
        }
        Command::Import { file, doc, title } => {
            if !treedoc_core::id::is_valid_id(&doc) {
                return Err(fail(ErrorCode::UnknownDoc, format!("{doc:?} is not a usable document id")));
            }
            let md = std::fs::read_to_string(&file).map_err(io(&file))?;
            let title = title.unwrap_or_else(|| file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
            let imported = markdown::import(&md, &doc, &title, &mut rand::rng())?;
            store.create(&imported)?;
            writeln!(out, "{doc}").map_err(w)?;
        }
        Command::Export { doc, node, format, headings } => {
            let d = store.load(&doc)?;
            let root = match node {
                Some(n) => node_id(&n)?,
                None => d.tree.root().clone(),
            };
            let segs = linearize(&d.tree, &root)?;
            let format = match format {
                Format::Md => RenderFormat::Markdown,
                Format::Html => RenderFormat::Html,
            };
            let policy = match headings {
                Toggle::On => HeadingPolicy::TitlesAsHeadings,
                Toggle::Off => HeadingPolicy::None,
            };
            let text = render(&segs, format, policy);
            write!(out, "{text}").map_err(w)?;
            if format == RenderFormat::Html && !text.is_empty() {
                writeln!(out).map_err(w)?;
            }
        }
        Command::Tree { doc } => {
            let d = store.load(&doc)?;
            write!(out, "{}", ascii_tree(&d.tree)).map_err(w)?;
        }
        Command::Search { doc, keyword } => {
            let d = store.load(&doc)?;
            for hit in treedoc_ai::search_by_keyword(&d.tree, &keyword)? {
                writeln!(out, "{}\t{}\t{}", hit.id, hit.title, hit.snippet).map_err(w)?;
            }
        }
        Command::Ai { op, doc, node, prompt } => {
            let mut d = store.load(&doc)?;
            let target = node_id(&node)?;
            let op = AiOp::from(op);
            // Guards run before the model is configured, so a bad node or an
            // empty one fails the same way with or without a provider.
            treedoc_ai::ops::prepare(op, &d.tree, &target, prompt.as_deref())?;
            let pending = treedoc_ai::ops::run(op, &d.tree, &target, prompt.as_deref(), &*model()?)?;
            let sid = d.enqueue(pending)?;
            store.save(&d)?;
            writeln!(out, "{sid}").map_err(w)?;
            write!(out, "{}", describe(&d, &sid)?).map_err(w)?;
        }
        Command::Suggestions { doc, status } => {
            let d = store.load(&doc)?;
            let status = status.map(|s| match s {
                StatusArg::Pending => SuggestionStatus::Pending,
                StatusArg::Accepted => SuggestionStatus::Accepted,
                StatusArg::Rejected => SuggestionStatus::Rejected,
            });
            for s in d.suggestions_with_status(status) {
                writeln!(out, "{}\t{}\t{}\t{}\t{}", s.id, s.status.as_str(), s.kind().as_str(), s.target, s.origin)
                    .map_err(w)?;
            }
        }
        Command::Accept { doc, suggestion, edited_file } => {
            let mut d = store.load(&doc)?;
            let edited = match edited_file {
                Some(path) => {
                    let raw = std::fs::read_to_string(&path).map_err(io(&path))?;
                    Some(edited_payload(d.suggestion(&suggestion)?.kind(), &raw)?)
                }
                None => None,
            };
            let applied = d.apply_suggestion(&suggestion, edited)?;
            store.save(&d)?;
            for id in &applied.touched {
                writeln!(out, "{id}").map_err(w)?;
            }
        }
        Command::Reject { doc, suggestion } => {
            let mut d = store.load(&doc)?;
            d.reject_suggestion(&suggestion)?;
            store.save(&d)?;
        }
        Command::Versions { doc, node } => {
            let d = store.load(&doc)?;
            let id = node_id(&node)?;
            d.tree.get_node(&id)?;
            for v in d.versions().history(&id) {
                writeln!(out, "v{}\t{}\t{}", v.seq, v.created_ms, v.label).map_err(w)?;
            }
        }
        Command::Restore { doc, node, v } => {
            let mut d = store.load(&doc)?;
            let seq = d.restore_version(&node_id(&node)?, v)?;
            store.save(&d)?;
            writeln!(out, "v{seq}").map_err(w)?;
        }
        Command::Serve { addr } => {
            let addr = addr.unwrap_or_else(treedoc_server::addr_from_env);
            let addr: std::net::SocketAddr =
                addr.parse().map_err(|e| fail(ErrorCode::IoError, format!("bad address {addr}: {e}")))?;
            let state = AppState::new(store, model()?);
            let rt = tokio::runtime::Runtime::new().map_err(io(std::path::Path::new("runtime")))?;
            eprintln!("listening on http://{addr}");
            rt.block_on(treedoc_server::serve(addr, state)).map_err(|e| fail(ErrorCode::IoError, e.to_string()))?;
        }
    }
    Ok(())
}

/// Parses an edited payload for a suggestion of `kind`. JSON objects use the
/// wire shape; anything else is taken as the new content or title.
pub fn edited_payload(kind: SuggestionKind, raw: &str) -> Result<SuggestionPayload, CliError> {
    let bad = |e: String| fail(ErrorCode::InvalidPayload, e);
    match serde_json::from_str::<Value>(raw) {
        Ok(v @ Value::Object(_)) => payload_from_json(kind.as_str(), &v, "edited_payload").map_err(|e| bad(e.to_string())),
        _ => match kind {
            SuggestionKind::NewContent => {
                Ok(SuggestionPayload::Content(RichFragment::parse(raw.trim()).map_err(|e| bad(e.to_string()))?))
            }
            SuggestionKind::NewTitle => Ok(SuggestionPayload::Title(raw.trim().to_string())),
            _ => Err(bad(format!("a {} payload must be a JSON object", kind.as_str()))),
        },
    }
}

/// Suggestion summary with a word diff against the current tree.
fn describe(d: &Document, sid: &str) -> Result<String, CliError> {
    let s = d.suggestion(sid)?;
    let mut text = format!("{} on {} ({})\n", s.kind().as_str(), s.target, s.origin);
    if let SuggestionPayload::Children(cs) = &s.payload {
        for c in cs {
            text.push_str(&format!("  + child {:?}\n", c.title));
        }
    }
    text.push_str(&render_diff(&d.preview_diff(sid, None)?));
    text.push('\n');
    Ok(text)
}

/// `[-old-]{+new+}` word diff on one line.
pub fn render_diff(diff: &Diff) -> String {
    diff.hunks
        .iter()
        .filter(|h| !h.tokens.is_empty())
        .map(|h| {
            let words = h.tokens.join(" ");
            match h.op {
                DiffOp::Keep => words,
                DiffOp::Delete => format!("[-{words}-]"),
                DiffOp::Insert => format!("{{+{words}+}}"),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Titles with ids, drawn with box characters.
pub fn ascii_tree(tree: &DocumentTree) -> String {
    fn label(tree: &DocumentTree, id: &NodeId) -> String {
        let title = &tree.get_node(id).expect("live id").title;
        let title = if title.trim().is_empty() { "(untitled)" } else { title.as_str() };
        format!("{title} [{id}]")
    }
    fn walk(tree: &DocumentTree, id: &NodeId, prefix: &str, out: &mut String) {
        let kids = tree.get_children(id).expect("live id");
        for (i, c) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            out.push_str(&format!("{prefix}{}{}\n", if last { "└── " } else { "├── " }, label(tree, c)));
            walk(tree, c, &format!("{prefix}{}", if last { "    " } else { "│   " }), out);
        }
    }
    let mut out = format!("{}\n", label(tree, tree.root()));
    walk(tree, tree.root(), "", &mut out);
    out
}
