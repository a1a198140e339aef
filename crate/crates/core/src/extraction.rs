//! Recovering the inserted middle from a model's search/replace response.
//!
//! The branch structure and the per-branch newline handling follow the
//! published reference post-processor exactly, including its asymmetries,
//! because exact-match scores depend on them. Slicing by string length is
//! done in code points, as the reference does.

use alloc::string::{String, ToString};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::format::Marker;
use crate::text::{common_prefix_bytes, common_suffix_bytes, normalize_newlines, py_strip, skip_chars};

const SEARCH_PATTERN: &str = r"(?s)<{2,}\s*SEARCH\n(.*?)\n\s*={3,}";
const REPLACE_PATTERN: &str = r"(?s)={3,}\n(.*?)\n\s*>{2,}\s*REPLACE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    NoReplace,
    NoSearch,
    InlinePrefix,
    InlineSuffix,
    InlineCommon,
    MarkerFirstLine,
    MarkerLastLine,
    MarkerGeneral,
    FallbackFullReplace,
}

impl Branch {
    pub const ALL: [Branch; 9] = [
        Branch::NoReplace,
        Branch::NoSearch,
        Branch::InlinePrefix,
        Branch::InlineSuffix,
        Branch::InlineCommon,
        Branch::MarkerFirstLine,
        Branch::MarkerLastLine,
        Branch::MarkerGeneral,
        Branch::FallbackFullReplace,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub middle: String,
    pub branch: Branch,
}

impl ExtractionResult {
    fn new(middle: &str, branch: Branch) -> Self {
        Self {
            middle: middle.to_string(),
            branch,
        }
    }

    /// True when the response had no usable replace section.
    pub fn is_parse_failure(&self) -> bool {
        self.branch == Branch::NoReplace
    }
}

fn capture<'t>(pattern: &str, text: &'t str) -> Option<&'t str> {
    // Both patterns are constants; compilation cannot fail.
    let re = Regex::new(pattern).expect("static pattern");
    re.captures(text).and_then(|c| c.get(1)).map(|m| m.as_str())
}

/// Extracts the newly written middle code from raw model output.
pub fn extract_replace_code(text: &str) -> ExtractionResult {
    let text = normalize_newlines(text);

    let Some(replace_raw) = capture(REPLACE_PATTERN, &text) else {
        return ExtractionResult::new("", Branch::NoReplace);
    };
    let Some(search_raw) = capture(SEARCH_PATTERN, &text) else {
        return ExtractionResult::new(replace_raw, Branch::NoSearch);
    };

    let search_code = py_strip(search_raw);
    let replace_code = py_strip(replace_raw);

    let Some(at) = search_code.find(Marker::TEXT) else {
        let (middle, branch) = diff_trim_with_branch(search_code, replace_code);
        return ExtractionResult::new(middle, branch);
    };

    // A second marker stays inside `after`.
    let before = search_code[..at].trim_end_matches('\n');
    let after = search_code[at + Marker::TEXT.len()..].trim_start_matches('\n');

    if py_strip(before).is_empty() {
        let middle = if after.is_empty() {
            replace_code
        } else {
            replace_code.split(after).next().unwrap_or("")
        };
        return ExtractionResult::new(middle.trim_matches('\n'), Branch::MarkerFirstLine);
    }

    if py_strip(after).is_empty() {
        let middle = if before.is_empty() {
            replace_code
        } else {
            skip_chars(replace_code, before.chars().count())
        };
        return ExtractionResult::new(middle.trim_matches('\n'), Branch::MarkerLastLine);
    }

    let mut result = replace_code;

    if !before.is_empty() {
        if let Some(rest) = result.strip_prefix(before) {
            result = rest.trim_start_matches('\n');
        } else {
            let last_line = before.rsplit('\n').next().unwrap_or(before);
            if let Some(rest) = result.strip_prefix(last_line) {
                result = rest;
            }
        }
    }

    if !after.is_empty() {
        if let Some(rest) = result.strip_suffix(after) {
            result = rest.trim_end_matches('\n');
        } else {
            let first_line = after.split('\n').next().unwrap_or(after);
            if let Some(rest) = result.strip_suffix(first_line) {
                result = rest;
            }
        }
    }

    ExtractionResult::new(result.trim_matches('\n'), Branch::MarkerGeneral)
}

/// Middle of an edit with no marker in the search text: whatever `replace`
/// adds around the part it shares with `search`.
pub fn diff_trim(search: &str, replace: &str) -> String {
    diff_trim_with_branch(search, replace).0.to_string()
}

fn diff_trim_with_branch<'a>(search: &str, replace: &'a str) -> (&'a str, Branch) {
    if search.is_empty() || replace.is_empty() {
        return (replace, Branch::FallbackFullReplace);
    }
    if let Some(rest) = replace.strip_prefix(search) {
        return (rest, Branch::InlinePrefix);
    }
    if let Some(rest) = replace.strip_suffix(search) {
        return (rest, Branch::InlineSuffix);
    }
    let head = common_prefix_bytes(search, replace);
    let tail = common_suffix_bytes(search, replace);
    // Overlapping affixes leave nothing between them.
    let middle = if head + tail > replace.len() {
        ""
    } else {
        &replace[head..replace.len() - tail]
    };
    (middle, Branch::InlineCommon)
}
