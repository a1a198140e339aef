use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PatchError;
use crate::format::Marker;
use crate::text::{is_blank, normalize_newlines, split_lines, LineRef};

/// What to do when the search text occurs more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorPolicy {
    /// Refuse with [`PatchError::Ambiguous`].
    #[default]
    Unique,
    /// Take the occurrence closest to the file's marker line (the first
    /// occurrence when the file has no marker).
    NearestMarker,
}

/// Location of the search text inside the original file. Byte offsets cover
/// whole lines, excluding the final line terminator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSpan {
    pub start_byte: usize,
    pub end_byte: usize,
    /// 1-based, inclusive.
    pub start_line: usize,
    pub end_line: usize,
    pub occurrence_count: usize,
}

fn key(line: &str) -> &str {
    line.trim_end()
}

fn is_marker_line(line: &str) -> bool {
    line.trim() == Marker::TEXT
}

fn line_matches(file_line: &str, search_line: &str) -> bool {
    if is_marker_line(search_line) {
        // the model need not reproduce the marker's indentation
        return is_marker_line(file_line);
    }
    key(file_line) == key(search_line)
}

/// Finds `search` in `file` line by line. Lines compare equal after removing
/// trailing whitespace; leading whitespace is significant. A marker-only
/// search line matches a marker-only file line at any indentation.
pub fn locate_anchor(file: &str, search: &str, policy: AnchorPolicy) -> Result<AnchorSpan, PatchError> {
    let search = normalize_newlines(search);
    let needle: Vec<&str> = search.split('\n').collect();
    if needle.iter().all(|l| is_blank(l)) {
        return Err(PatchError::EmptySearch);
    }

    let hay: Vec<LineRef<'_>> = split_lines(file);
    if needle.len() > hay.len() {
        return Err(PatchError::NotFound);
    }

    let hits: Vec<usize> = (0..=hay.len() - needle.len())
        .filter(|&start| {
            needle
                .iter()
                .zip(&hay[start..])
                .all(|(n, h)| line_matches(h.text, n))
        })
        .collect();

    let start = match (hits.len(), policy) {
        (0, _) => return Err(PatchError::NotFound),
        (1, _) => hits[0],
        (n, AnchorPolicy::Unique) => return Err(PatchError::Ambiguous(n)),
        (_, AnchorPolicy::NearestMarker) => {
            let marker = hay.iter().position(|l| l.text.contains(Marker::TEXT));
            match marker {
                Some(m) => *hits
                    .iter()
                    .min_by_key(|&&s| {
                        let end = s + needle.len() - 1;
                        if (s..=end).contains(&m) {
                            0
                        } else {
                            s.abs_diff(m).min(end.abs_diff(m))
                        }
                    })
                    .expect("non-empty"),
                None => hits[0],
            }
        }
    };

    let end = start + needle.len() - 1;
    let last = hay[end];
    let end_byte = if last.text.ends_with('\r') && last.end < file.len() {
        last.end - 1
    } else {
        last.end
    };
    Ok(AnchorSpan {
        start_byte: hay[start].start,
        end_byte,
        start_line: start + 1,
        end_line: end + 1,
        occurrence_count: hits.len(),
    })
}
