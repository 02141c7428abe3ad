//! Record and replay of model calls keyed by canonical request hash.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::canonical::request_hash;
use crate::types::{ChatRequest, ChatResponse};
use crate::{ChatModel, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub request_hash: String,
    pub response: ChatResponse,
}

pub fn read_fixture_file(path: &Path) -> Result<Vec<FixtureEntry>, GatewayError> {
    let text = fs::read_to_string(path)
        .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))
}

pub fn write_fixture_file(path: &Path, entries: &[FixtureEntry]) -> Result<(), GatewayError> {
    let io = |e: std::io::Error| GatewayError::Fixture(format!("{}: {e}", path.display()));
    let mut text = serde_json::to_string_pretty(entries).expect("fixtures serialize");
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Answers from frozen fixtures only. Never touches the network.
#[derive(Debug, Default)]
pub struct Replayer {
    entries: HashMap<String, ChatResponse>,
}

impl Replayer {
    pub fn from_entries(entries: impl IntoIterator<Item = FixtureEntry>) -> Replayer {
        Replayer {
            entries: entries.into_iter().map(|e| (e.request_hash, e.response)).collect(),
        }
    }

    /// Loads a fixture file, or every `*.json` file in a directory.
    pub fn load(path: &Path) -> Result<Replayer, GatewayError> {
        let mut files: Vec<PathBuf> = if path.is_dir() {
            fs::read_dir(path)
                .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect()
        } else if path.is_file() {
            vec![path.to_path_buf()]
        } else {
            return Err(GatewayError::Fixture(format!("{}: no such fixture file", path.display())));
        };
        files.sort();
        let mut entries = Vec::new();
        for f in files {
            entries.extend(read_fixture_file(&f)?);
        }
        Ok(Replayer::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatModel for Replayer {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let hash = request_hash(req);
        self.entries
            .get(&hash)
            .cloned()
            .ok_or(GatewayError::FixtureMiss { hash })
    }
}

/// Forwards to an inner model and appends each new request hash with its
/// response to a fixture file.
pub struct Recorder<M> {
    inner: M,
    path: PathBuf,
    entries: Mutex<Vec<FixtureEntry>>,
}

impl<M: ChatModel> Recorder<M> {
    /// Existing entries in `path` are kept.
    pub fn new(inner: M, path: &Path) -> Result<Recorder<M>, GatewayError> {
        let entries = if path.exists() { read_fixture_file(path)? } else { Vec::new() };
        Ok(Recorder { inner, path: path.to_path_buf(), entries: Mutex::new(entries) })
    }

    pub fn entries(&self) -> Vec<FixtureEntry> {
        self.entries.lock().unwrap().clone()
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: ChatModel> ChatModel for Recorder<M> {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let response = self.inner.chat(req)?;
        let hash = request_hash(req);
        let mut entries = self.entries.lock().unwrap();
        if !entries.iter().any(|e| e.request_hash == hash) {
            entries.push(FixtureEntry { request_hash: hash, response: response.clone() });
            write_fixture_file(&self.path, &entries)?;
        }
        Ok(response)
    }
}
