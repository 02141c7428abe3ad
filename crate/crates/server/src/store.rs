//! One `treedoc/1` file per document, written atomically.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use treedoc_core::id::is_valid_id;
use treedoc_core::{document_from_json, document_to_json, Document, ErrorCode, FormatError, HasErrorCode};

const SUFFIX: &str = ".treedoc.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no document {0}")]
    UnknownDoc(String),
    #[error("document {0} already exists")]
    DocExists(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
}

impl HasErrorCode for StoreError {
    fn code(&self) -> ErrorCode {
        match self {
            StoreError::UnknownDoc(_) => ErrorCode::UnknownDoc,
            StoreError::DocExists(_) => ErrorCode::DocExists,
            StoreError::Io { .. } => ErrorCode::IoError,
            StoreError::Format { .. } => ErrorCode::FormatError,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Writes `doc` to `path` through a synced temp file and a rename.
pub fn save_document(doc: &Document, path: &Path) -> Result<(), StoreError> {
    save_with_hook(doc, path, |_| Ok(()))
}

/// Like [`save_document`], but runs `before_rename` between writing the
/// temp file and renaming it; an error from the hook aborts the save there,
/// leaving the previous file in place.
pub fn save_with_hook(
    doc: &Document,
    path: &Path,
    before_rename: impl FnOnce(&Path) -> io::Result<()>,
) -> Result<(), StoreError> {
    let text = document_to_json(doc);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    before_rename(&tmp).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    if let Some(dir) = path.parent() {
        // Persist the rename itself; not every platform can open directories.
        if let Ok(d) = fs::File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

pub fn load_document(path: &Path) -> Result<Document, StoreError> {
    let format = |source| StoreError::Format { path: path.to_path_buf(), source };
    let bytes = fs::read(path).map_err(io_err(path))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let at = e.utf8_error().valid_up_to();
        let before = &e.as_bytes()[..at];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = at - before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1) + 1;
        format(FormatError {
            path: ".".into(),
            message: format!("invalid UTF-8 at byte {at}"),
            line: Some(line),
            column: Some(column),
        })
    })?;
    document_from_json(&text).map_err(format)
}

#[derive(Debug, Clone)]
pub struct DocumentStore {
    root: PathBuf,
}

impl DocumentStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<DocumentStore, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(DocumentStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `None` for ids that cannot name a file in the store.
    pub fn path_for(&self, doc_id: &str) -> Option<PathBuf> {
        is_valid_id(doc_id).then(|| self.root.join(format!("{doc_id}{SUFFIX}")))
    }

    pub fn exists(&self, doc_id: &str) -> bool {
        self.path_for(doc_id).is_some_and(|p| p.is_file())
    }

    pub fn load(&self, doc_id: &str) -> Result<Document, StoreError> {
        let path = self
            .path_for(doc_id)
            .filter(|p| p.is_file())
            .ok_or_else(|| StoreError::UnknownDoc(doc_id.to_string()))?;
        load_document(&path)
    }

    pub fn save(&self, doc: &Document) -> Result<(), StoreError> {
        let path = self.path_for(doc.tree.doc_id()).expect("document ids are valid file stems");
        save_document(doc, &path)
    }

    /// Saves a document whose id must not be taken yet.
    pub fn create(&self, doc: &Document) -> Result<(), StoreError> {
        let id = doc.tree.doc_id();
        if self.exists(id) {
            return Err(StoreError::DocExists(id.to_string()));
        }
        self.save(doc)
    }

    /// Ids of every stored document, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut out: Vec<String> = fs::read_dir(&self.root)
            .map_err(io_err(&self.root))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(SUFFIX)).map(str::to_string))
            .filter(|id| is_valid_id(id))
            .collect();
        out.sort();
        Ok(out)
    }
}
