//! The search/replace block grammar and the completion marker.
//!
//! A block looks like
//!
//! ```text
//! <<<<<<< SEARCH
//! context lines containing /* MIDDLE CODE TO COMPLETE */
//! =======
//! the same lines with the middle filled in
//! >>>>>>> REPLACE
//! ```
//!
//! optionally wrapped in a ```` ```replace ```` fence. Parsing accepts two or
//! more `<`/`>` and three or more `=`; rendering always emits seven.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{normalize_newlines, split_lines, LineRef};

/// The identifier placed at the completion target. Identical in every
/// language; it is not translated into the host language's comment syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Marker;

impl Marker {
    pub const TEXT: &'static str = "/* MIDDLE CODE TO COMPLETE */";

    pub const fn as_str(self) -> &'static str {
        Self::TEXT
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Self::TEXT)
    }
}

pub const SEARCH_HEADER: &str = "<<<<<<< SEARCH";
pub const SEPARATOR: &str = "=======";
pub const REPLACE_FOOTER: &str = ">>>>>>> REPLACE";
pub const FENCE_OPEN: &str = "```replace";
pub const FENCE_CLOSE: &str = "```";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SriBlock {
    /// `None` for a replace-only block (separator and footer without a header).
    pub search: Option<String>,
    pub replace: String,
    #[serde(default)]
    pub fenced: bool,
}

impl SriBlock {
    pub fn new(search: impl Into<String>, replace: impl Into<String>) -> Self {
        Self {
            search: Some(search.into()),
            replace: replace.into(),
            fenced: false,
        }
    }

    pub fn fenced(mut self, fenced: bool) -> Self {
        self.fenced = fenced;
        self
    }

    pub fn search_text(&self) -> &str {
        self.search.as_deref().unwrap_or("")
    }

    pub fn render(&self) -> String {
        render_sri_block(self, self.fenced)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("response has no `=======` / `>>>>>>> REPLACE` section")]
    NoReplaceSection,
    #[error("region limit must be within 1..=1000, got {0}")]
    InvalidRegionLimit(usize),
}

/// Lines of context allowed on each side of the marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct RegionLimit(usize);

impl RegionLimit {
    pub const DEFAULT: RegionLimit = RegionLimit(10);
    pub const MAX: usize = 1000;

    pub fn new(lines_each_side: usize) -> Result<Self, FormatError> {
        if (1..=Self::MAX).contains(&lines_each_side) {
            Ok(Self(lines_each_side))
        } else {
            Err(FormatError::InvalidRegionLimit(lines_each_side))
        }
    }

    pub fn lines_each_side(self) -> usize {
        self.0
    }
}

impl Default for RegionLimit {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<usize> for RegionLimit {
    type Error = FormatError;

    fn try_from(value: usize) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<RegionLimit> for usize {
    fn from(limit: RegionLimit) -> usize {
        limit.0
    }
}

fn delimiter_run(line: &str, ch: char, min: usize, keyword: &str) -> bool {
    let t = line.trim();
    let rest = t.trim_start_matches(ch);
    let run = (t.len() - rest.len()) / ch.len_utf8();
    if run < min {
        return false;
    }
    rest.trim_start() == keyword
}

pub fn is_search_header(line: &str) -> bool {
    delimiter_run(line, '<', 2, "SEARCH")
}

pub fn is_separator(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 3 && t.bytes().all(|b| b == b'=')
}

pub fn is_replace_footer(line: &str) -> bool {
    delimiter_run(line, '>', 2, "REPLACE")
}

fn join_lines(lines: &[LineRef<'_>]) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(line.text);
    }
    out
}

/// Parses the first block in `text`.
///
/// The block is anchored on the first separator that is followed by a footer;
/// the nearest header above that separator opens the search section. Without
/// such a header the block is replace-only. CRLF is normalized to LF.
pub fn parse_sri_block(text: &str) -> Result<SriBlock, FormatError> {
    let text = normalize_newlines(text);
    let lines = split_lines(&text);

    let (sep, footer) = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| is_separator(l.text))
        .find_map(|(i, _)| {
            lines[i + 1..]
                .iter()
                .position(|l| is_replace_footer(l.text))
                .map(|off| (i, i + 1 + off))
        })
        .ok_or(FormatError::NoReplaceSection)?;

    let header = lines[..sep].iter().rposition(|l| is_search_header(l.text));
    let search = header.map(|h| join_lines(&lines[h + 1..sep]));
    let replace = join_lines(&lines[sep + 1..footer]);

    let open = header.unwrap_or(sep);
    let fenced = open > 0
        && lines[open - 1].text.trim_start().starts_with("```")
        && lines
            .get(footer + 1)
            .is_some_and(|l| l.text.trim() == FENCE_CLOSE);

    Ok(SriBlock {
        search,
        replace,
        fenced,
    })
}

pub fn render_sri_block(block: &SriBlock, fence: bool) -> String {
    let mut out = String::new();
    if fence {
        out.push_str(FENCE_OPEN);
        out.push('\n');
    }
    if let Some(search) = &block.search {
        out.push_str(SEARCH_HEADER);
        out.push('\n');
        out.push_str(search);
        out.push('\n');
    }
    out.push_str(SEPARATOR);
    out.push('\n');
    out.push_str(&block.replace);
    out.push('\n');
    out.push_str(REPLACE_FOOTER);
    if fence {
        out.push('\n');
        out.push_str(FENCE_CLOSE);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionReport {
    pub marker_present: bool,
    pub within_window: bool,
    pub replace_marker_free: bool,
    /// Search lines above and below the first marker line.
    pub lines_above: usize,
    pub lines_below: usize,
}

impl RegionReport {
    pub fn passed(&self) -> bool {
        self.marker_present && self.within_window && self.replace_marker_free
    }
}

pub fn validate_region(block: &SriBlock, limit: RegionLimit) -> RegionReport {
    let search = normalize_newlines(block.search_text());
    let lines = split_lines(&search);
    let marker_line = lines.iter().position(|l| l.text.contains(Marker::TEXT));
    let (above, below) = match marker_line {
        Some(k) => (k, lines.len() - k - 1),
        None => (0, 0),
    };
    let n = limit.lines_each_side();
    RegionReport {
        marker_present: marker_line.is_some(),
        within_window: marker_line.is_some() && above <= n && below <= n,
        replace_marker_free: !block.replace.contains(Marker::TEXT),
        lines_above: above,
        lines_below: below,
    }
}
