//! Applying search/replace blocks by content anchoring, and rendering the
//! resulting edit as a unified diff.

mod anchor;
mod diff;

pub use anchor::{locate_anchor, AnchorPolicy, AnchorSpan};
pub use diff::{unified_diff, DEFAULT_CONTEXT_LINES};

use alloc::string::String;

use thiserror::Error;

use crate::format::SriBlock;
use crate::text::{normalize_newlines, LineEnding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("search text is empty")]
    EmptySearch,
    #[error("block has no search section to anchor on")]
    NoSearchSection,
    #[error("search text not found in file")]
    NotFound,
    #[error("search text matches {0} locations")]
    Ambiguous(usize),
}

/// Replaces the anchored span with the block's replace text, keeping every
/// byte outside the span and the file's line-ending style.
pub fn apply_sri(file: &str, block: &SriBlock, policy: AnchorPolicy) -> Result<String, PatchError> {
    let search = block.search.as_deref().ok_or(PatchError::NoSearchSection)?;
    let span = locate_anchor(file, search, policy)?;
    let replace = normalize_newlines(&block.replace);
    let replace = LineEnding::detect(file).apply(&replace);

    let mut out = String::with_capacity(file.len() + replace.len());
    out.push_str(&file[..span.start_byte]);
    out.push_str(&replace);
    out.push_str(&file[span.end_byte..]);
    Ok(out)
}

/// The edit `apply_sri` would make, as a unified diff against `a/<path>` and
/// `b/<path>`. Identity edits give an empty string.
pub fn to_unified_diff(
    file: &str,
    block: &SriBlock,
    path: &str,
    context_lines: usize,
    policy: AnchorPolicy,
) -> Result<String, PatchError> {
    let patched = apply_sri(file, block, policy)?;
    Ok(unified_diff(file, &patched, path, context_lines))
}
