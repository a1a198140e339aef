use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::format::Marker;
use crate::text::{is_blank, last_partial_line, leading_whitespace, LineEnding};

/// A source region split at the completion target.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompletionTask {
    pub task_id: String,
    #[serde(default)]
    pub path: String,
    pub prefix: String,
    /// Ground truth; empty for live inference.
    #[serde(default)]
    pub middle: String,
    pub suffix: String,
    #[serde(default)]
    pub crossfile_context: String,
}

impl CompletionTask {
    pub fn new(prefix: impl Into<String>, middle: impl Into<String>, suffix: impl Into<String>) -> Self {
        Self {
            prefix: prefix.into(),
            middle: middle.into(),
            suffix: suffix.into(),
            ..Self::default()
        }
    }

    pub fn source(&self) -> String {
        let mut s = String::with_capacity(self.prefix.len() + self.middle.len() + self.suffix.len());
        s.push_str(&self.prefix);
        s.push_str(&self.middle);
        s.push_str(&self.suffix);
        s
    }
}

/// How the marker line is indented when the cut sits at a line start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerIndent {
    /// Marker sits where the cursor is: after the whitespace already on the
    /// cut line, or at column 0 for a line-aligned cut.
    #[default]
    Cursor,
    /// Line-aligned cuts take the indentation of the first nonblank suffix
    /// line, falling back to the last nonblank prefix line.
    MatchSuffix,
}

/// Marked source plus the offsets needed to map it back to the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedSource {
    pub text: String,
    /// `text[..prefix_len] == task.prefix`.
    pub prefix_len: usize,
    /// Byte offset of the marker text.
    pub marker_at: usize,
    /// `text[suffix_start..] == task.suffix`.
    pub suffix_start: usize,
}

impl MarkedSource {
    /// 0-based index of the marker line in a `split('\n')` view.
    pub fn marker_line(&self) -> usize {
        self.text[..self.marker_at].matches('\n').count()
    }

    /// Prefix and suffix of `edited`, a same-layout variant of `text` whose
    /// line edits kept byte lengths.
    pub fn split_like<'a>(&self, edited: &'a str) -> (&'a str, &'a str) {
        (&edited[..self.prefix_len], &edited[self.suffix_start..])
    }
}

fn suffix_indent(task: &CompletionTask) -> &str {
    task.suffix
        .split('\n')
        .find(|l| !is_blank(l))
        .or_else(|| task.prefix.split('\n').rev().find(|l| !is_blank(l)))
        .map(leading_whitespace)
        .unwrap_or("")
}

/// Places the marker on its own line between prefix and suffix.
pub fn mark_task(task: &CompletionTask, indent: MarkerIndent) -> MarkedSource {
    let partial = last_partial_line(&task.prefix);
    let eol = if task.prefix.contains('\n') {
        LineEnding::detect(&task.prefix)
    } else {
        LineEnding::detect(&task.suffix)
    }
    .as_str();
    let mut text = String::with_capacity(task.prefix.len() + task.suffix.len() + Marker::TEXT.len() + 16);
    text.push_str(&task.prefix);

    if partial.is_empty() {
        if indent == MarkerIndent::MatchSuffix {
            text.push_str(suffix_indent(task));
        }
    } else if !is_blank(partial) {
        // cut inside a line of code: continue on a fresh line at its indentation
        text.push_str(eol);
        text.push_str(leading_whitespace(partial));
    }

    let marker_at = text.len();
    text.push_str(Marker::TEXT);
    if !task.suffix.is_empty() || task.middle.ends_with('\n') {
        text.push_str(eol);
    }
    let suffix_start = text.len();
    text.push_str(&task.suffix);

    MarkedSource {
        text,
        prefix_len: task.prefix.len(),
        marker_at,
        suffix_start,
    }
}

pub fn insert_marker(task: &CompletionTask) -> String {
    mark_task(task, MarkerIndent::default()).text
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    const M: &str = Marker::TEXT;

    #[test]
    fn marker_between_lines() {
        let t = CompletionTask::new("a\n", "", "b\n");
        assert_eq!(insert_marker(&t), format!("a\n{M}\nb\n"));
    }

    #[test]
    fn empty_prefix_puts_marker_first() {
        let t = CompletionTask::new("", "", "b\n");
        assert!(insert_marker(&t).starts_with(M));
    }

    #[test]
    fn indented_cut_keeps_cursor_indentation() {
        let t = CompletionTask::new("fn f() {\n    ", "let x = 1;\n", "    x\n}\n");
        assert_eq!(insert_marker(&t), format!("fn f() {{\n    {M}\n    x\n}}\n"));
    }

    #[test]
    fn match_suffix_indents_line_aligned_cut() {
        let t = CompletionTask::new("fn f() {\n", "", "    x\n}\n");
        let marked = mark_task(&t, MarkerIndent::MatchSuffix);
        assert_eq!(marked.text, format!("fn f() {{\n    {M}\n    x\n}}\n"));
        let plain = mark_task(&t, MarkerIndent::Cursor);
        assert_eq!(plain.text, format!("fn f() {{\n{M}\n    x\n}}\n"));
    }

    #[test]
    fn mid_line_cut_starts_a_new_line() {
        let t = CompletionTask::new("        public Dictionary<string, ", "", "x\n");
        let marked = mark_task(&t, MarkerIndent::Cursor);
        assert_eq!(marked.text, format!("        public Dictionary<string, \n        {M}\nx\n"));
        assert_eq!(marked.marker_line(), 1);
    }

    #[test]
    fn trailing_newline_follows_middle_at_eof() {
        let t = CompletionTask::new("a\n", "b\n", "");
        assert_eq!(insert_marker(&t), format!("a\n{M}\n"));
        let t = CompletionTask::new("a\n", "b", "");
        assert_eq!(insert_marker(&t), format!("a\n{M}"));
    }

    #[test]
    fn crlf_source_keeps_crlf() {
        let t = CompletionTask::new("a\r\n", "b\r\n", "c\r\n");
        assert_eq!(insert_marker(&t), format!("a\r\n{M}\r\nc\r\n"));
    }

    #[test]
    fn offsets_map_back() {
        let t = CompletionTask::new("x = 1\n  ", "y", "\nz\n");
        let m = mark_task(&t, MarkerIndent::Cursor);
        assert_eq!(&m.text[..m.prefix_len], t.prefix);
        assert_eq!(&m.text[m.suffix_start..], t.suffix);
        assert_eq!(&m.text[m.marker_at..m.marker_at + M.len()], M);
    }
}
