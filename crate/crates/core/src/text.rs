//! Small string helpers shared across modules.
//!
//! Several routines here reproduce Python `str` semantics (whitespace set,
//! code-point slicing) because the middle-extraction rules are defined in
//! those terms.

use alloc::borrow::Cow;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Python's `str.isspace` set: Unicode `White_Space` plus the four ASCII
/// information separators `\x1c..=\x1f`.
pub fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

/// `str.strip()` with no arguments.
pub fn py_strip(s: &str) -> &str {
    s.trim_matches(is_py_space)
}

pub fn is_blank(s: &str) -> bool {
    s.chars().all(is_py_space)
}

/// `s[n:]` where `n` counts code points, clamped like a Python slice.
pub fn skip_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((at, _)) => &s[at..],
        None => "",
    }
}

/// Byte length of the longest common prefix, compared by code point.
pub fn common_prefix_bytes(a: &str, b: &str) -> usize {
    a.chars()
        .zip(b.chars())
        .take_while(|(x, y)| x == y)
        .map(|(x, _)| x.len_utf8())
        .sum()
}

/// Byte length of the longest common suffix, compared by code point.
pub fn common_suffix_bytes(a: &str, b: &str) -> usize {
    a.chars()
        .rev()
        .zip(b.chars().rev())
        .take_while(|(x, y)| x == y)
        .map(|(x, _)| x.len_utf8())
        .sum()
}

/// Rewrites `\r\n` pairs to `\n`. Lone `\r` is left alone.
pub fn normalize_newlines(s: &str) -> Cow<'_, str> {
    if s.contains("\r\n") {
        Cow::Owned(s.replace("\r\n", "\n"))
    } else {
        Cow::Borrowed(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineEnding {
    #[default]
    Lf,
    CrLf,
}

impl LineEnding {
    /// Style of the first line terminator in `s`; `Lf` when there is none.
    pub fn detect(s: &str) -> Self {
        match s.find('\n') {
            Some(i) if i > 0 && s.as_bytes()[i - 1] == b'\r' => LineEnding::CrLf,
            _ => LineEnding::Lf,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LineEnding::Lf => "\n",
            LineEnding::CrLf => "\r\n",
        }
    }

    /// Converts LF-normalized text to this style.
    pub fn apply(self, lf_text: &str) -> Cow<'_, str> {
        match self {
            LineEnding::Lf => Cow::Borrowed(lf_text),
            LineEnding::CrLf => Cow::Owned(lf_text.replace('\n', "\r\n")),
        }
    }
}

/// A line of a `split('\n')` view, with its byte range (terminator excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineRef<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// `s.split('\n')` with offsets. A trailing newline yields a final empty line,
/// so the result always has at least one entry.
pub fn split_lines(s: &str) -> Vec<LineRef<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in s.split('\n') {
        let end = start + piece.len();
        out.push(LineRef {
            text: piece,
            start,
            end,
        });
        start = end + 1;
    }
    out
}

pub fn leading_whitespace(line: &str) -> &str {
    let end = line.len() - line.trim_start_matches([' ', '\t']).len();
    &line[..end]
}

/// Text after the last `\n` (the whole string when there is none).
pub fn last_partial_line(s: &str) -> &str {
    match s.rfind('\n') {
        Some(i) => &s[i + 1..],
        None => s,
    }
}

/// 64-bit FNV-1a. Stable across platforms and runs.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
