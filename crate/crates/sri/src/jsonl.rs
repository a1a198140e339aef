//! Line-delimited JSON records.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> JsonlError + '_ {
    move |source| JsonlError::Io {
        path: path.to_string(),
        source,
    }
}

/// Parses one record per nonblank line. `name` labels errors.
pub fn read_records<T: DeserializeOwned>(reader: impl Read, name: &str) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err(name))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            path: name.to_string(),
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads a file, or standard input when `path` is `-`.
pub fn read_path<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let name = path.display().to_string();
    if name == "-" {
        return read_records(io::stdin().lock(), "<stdin>");
    }
    let file = File::open(path).map_err(io_err(&name))?;
    read_records(file, &name)
}

/// Like [`read_records`] but skips lines that fail to parse, which is what a
/// log cut off mid-write needs.
pub fn read_lenient<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        if let Ok(rec) = serde_json::from_str(&line?) {
            out.push(rec);
        }
    }
    Ok(out)
}

pub fn write_record<T: Serialize>(mut w: impl Write, rec: &T) -> io::Result<()> {
    serde_json::to_writer(&mut w, rec)?;
    w.write_all(b"\n")
}

pub fn write_records<'a, T: Serialize + 'a>(w: impl Write, recs: impl IntoIterator<Item = &'a T>) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    for r in recs {
        write_record(&mut w, r)?;
    }
    w.flush()
}

/// Writes to a file, or standard output when `path` is `None` or `-`.
pub fn write_path<'a, T: Serialize + 'a>(
    path: Option<&Path>,
    recs: impl IntoIterator<Item = &'a T>,
) -> Result<(), JsonlError> {
    match path.filter(|p| p.as_os_str() != "-") {
        Some(p) => {
            let name = p.display().to_string();
            let file = File::create(p).map_err(io_err(&name))?;
            write_records(file, recs).map_err(io_err(&name))
        }
        None => write_records(io::stdout().lock(), recs).map_err(io_err("<stdout>")),
    }
}
