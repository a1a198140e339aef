//! Loading a code corpus from a directory tree or a record file.

use std::fs;
use std::path::Path;

use sri_core::synthesis::CorpusFile;
use thiserror::Error;
use walkdir::WalkDir;

use crate::jsonl::{self, JsonlError};

/// Files larger than this are skipped when walking a directory.
pub const MAX_FILE_BYTES: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{0}: no such file or directory")]
    Missing(String),
    #[error("walking {path}: {source}")]
    Walk {
        path: String,
        #[source]
        source: walkdir::Error,
    },
    #[error(transparent)]
    Records(#[from] JsonlError),
    #[error("{0}: corpus is empty")]
    Empty(String),
}

/// A record file (`{path, content, repo, stars}` per line) or a directory
/// whose first-level subdirectories are repositories. Text files only;
/// hidden entries are skipped. Directory files carry zero stars.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusFile>, CorpusError> {
    let name = path.display().to_string();
    let files = if path.is_dir() {
        walk(path)?
    } else if path.is_file() || name == "-" {
        jsonl::read_path(path)?
    } else {
        return Err(CorpusError::Missing(name));
    };
    if files.is_empty() {
        return Err(CorpusError::Empty(name));
    }
    Ok(files)
}

fn is_hidden(entry: &walkdir::DirEntry) -> bool {
    entry.depth() > 0 && entry.file_name().to_string_lossy().starts_with('.')
}

fn walk(root: &Path) -> Result<Vec<CorpusFile>, CorpusError> {
    let root_name = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let mut out = Vec::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| !is_hidden(e));
    for entry in walker {
        let entry = entry.map_err(|source| CorpusError::Walk {
            path: root.display().to_string(),
            source,
        })?;
        if !entry.file_type().is_file() || entry.metadata().map_or(true, |m| m.len() > MAX_FILE_BYTES) {
            continue;
        }
        let Ok(bytes) = fs::read(entry.path()) else { continue };
        if bytes.contains(&0) {
            continue;
        }
        let Ok(content) = String::from_utf8(bytes) else { continue };
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let repo = if parts.len() > 1 { parts[0].clone() } else { root_name.clone() };
        out.push(CorpusFile {
            path: parts.join("/"),
            content,
            repo,
            stars: 0,
        });
    }
    Ok(out)
}
