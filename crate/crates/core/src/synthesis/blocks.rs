//! Candidate middle spans: function bodies, control-flow blocks, random
//! line spans and single lines.
//!
//! The built-in [`HeuristicProvider`] recognises structure with brace
//! matching (C-family languages) or indentation (Python-like languages). A
//! grammar-backed provider can be supplied through [`SyntaxProvider`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::format::RegionLimit;
use crate::text::{fnv1a, is_blank, leading_whitespace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockCategory {
    FunctionBody,
    LogicBlock,
    RandomSpan,
    SingleLine,
}

impl BlockCategory {
    pub const ALL: [BlockCategory; 4] = [
        BlockCategory::FunctionBody,
        BlockCategory::LogicBlock,
        BlockCategory::RandomSpan,
        BlockCategory::SingleLine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockCategory::FunctionBody => "function_body",
            BlockCategory::LogicBlock => "logic_block",
            BlockCategory::RandomSpan => "random_span",
            BlockCategory::SingleLine => "single_line",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BlockCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockSpan {
    pub category: BlockCategory,
    /// 1-based, inclusive.
    pub start_line: usize,
    pub end_line: usize,
    #[serde(default)]
    pub source_path: String,
}

/// Broad syntax family used by the heuristic provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageFamily {
    Braces,
    Indentation,
    Unknown,
}

const BRACE_LANGUAGES: &[&str] = &[
    "c", "h", "cc", "cpp", "cxx", "hpp", "hh", "c++", "cs", "csharp", "c#", "java", "js", "jsx", "mjs", "javascript",
    "ts", "tsx", "typescript", "go", "golang", "rs", "rust", "kt", "kts", "kotlin", "swift", "scala", "php", "dart",
    "groovy", "zig", "sol", "solidity",
];
const INDENT_LANGUAGES: &[&str] = &["py", "pyi", "python", "nim", "coffee", "gd", "gdscript"];

impl LanguageFamily {
    /// Accepts a language name, a file extension or a path.
    pub fn from_hint(hint: &str) -> Self {
        let hint = hint.trim().to_ascii_lowercase();
        let ext = hint.rsplit(['.', '/']).next().unwrap_or(&hint);
        if BRACE_LANGUAGES.contains(&ext) {
            LanguageFamily::Braces
        } else if INDENT_LANGUAGES.contains(&ext) {
            LanguageFamily::Indentation
        } else {
            LanguageFamily::Unknown
        }
    }
}

impl FromStr for LanguageFamily {
    type Err = core::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self::from_hint(s))
    }
}

/// Source of function-body and logic-block spans. Line numbers are 1-based
/// and inclusive.
pub trait SyntaxProvider {
    fn structural_spans(&self, source: &str, language_hint: &str) -> Vec<(BlockCategory, usize, usize)>;

    /// Whether the hint names a language this provider understands.
    fn knows(&self, language_hint: &str) -> bool;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicProvider;

const LOGIC_KEYWORDS: &[&str] = &[
    "if", "else", "for", "foreach", "while", "do", "switch", "match", "loop", "try", "catch", "finally", "elif",
    "except", "with", "unless", "until", "select", "when", "guard", "repeat",
];

const NON_FUNCTION_KEYWORDS: &[&str] = &[
    "class", "struct", "enum", "interface", "namespace", "impl", "trait", "mod", "module", "object", "record",
    "union", "package", "extern", "return", "new", "using", "import", "type",
];

fn first_word(s: &str) -> &str {
    let s = s.trim_start_matches(|c: char| c == '}' || c.is_whitespace());
    let end = s.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(s.len());
    &s[..end]
}

fn is_logic_header(header: &str) -> bool {
    LOGIC_KEYWORDS.contains(&first_word(header))
}

fn looks_like_function_header(header: &str) -> bool {
    let h = header.trim();
    let word = first_word(h);
    if LOGIC_KEYWORDS.contains(&word) || NON_FUNCTION_KEYWORDS.contains(&word) || h.ends_with(';') {
        return false;
    }
    if word == "fn" || word == "func" || word == "function" || word == "def" || word == "fun" {
        return true;
    }
    let Some(open) = h.find('(') else {
        return false;
    };
    // assignments are only functions when they bind an arrow function
    match h.find('=') {
        Some(eq) if eq < open && !h.contains("=>") => false,
        _ => h.contains(')'),
    }
}

/// Per-line code with string literals and comments blanked out, so braces
/// inside them do not count.
fn strip_noise(lines: &[&str]) -> Vec<String> {
    let mut in_block = false;
    lines
        .iter()
        .map(|line| {
            let mut out = String::with_capacity(line.len());
            let mut chars = line.chars().peekable();
            let mut quote: Option<char> = None;
            while let Some(c) = chars.next() {
                if in_block {
                    if c == '*' && chars.peek() == Some(&'/') {
                        chars.next();
                        in_block = false;
                    }
                    out.push(' ');
                    continue;
                }
                if let Some(q) = quote {
                    if c == '\\' {
                        chars.next();
                    } else if c == q {
                        quote = None;
                    }
                    out.push(' ');
                    continue;
                }
                match c {
                    '/' if chars.peek() == Some(&'/') => break,
                    '/' if chars.peek() == Some(&'*') => {
                        chars.next();
                        in_block = true;
                        out.push(' ');
                    }
                    '"' | '`' => {
                        quote = Some(c);
                        out.push(' ');
                    }
                    _ => out.push(c),
                }
            }
            out
        })
        .collect()
}

fn brace_spans(lines: &[&str]) -> Vec<(BlockCategory, usize, usize)> {
    let code = strip_noise(lines);
    // (open line, close line) for every matched brace pair
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for (i, line) in code.iter().enumerate() {
        for c in line.chars() {
            match c {
                '{' => stack.push(i),
                '}' => {
                    if let Some(open) = stack.pop() {
                        pairs.push((open, i));
                    }
                }
                _ => {}
            }
        }
    }
    let close_of: BTreeMap<usize, usize> = pairs.iter().map(|&(o, c)| (o, c)).collect();

    let mut out = Vec::new();
    for &(open, close) in &pairs {
        if close <= open + 1 {
            continue;
        }
        let opener = code[open].trim();
        let (header, header_line) = if opener == "{" {
            match (0..open).rev().find(|&j| !code[j].trim().is_empty()) {
                Some(j) => (code[j].trim(), j),
                None => continue,
            }
        } else {
            (opener, open)
        };
        // the opening brace must end its line so the body is whole lines
        if !opener.ends_with('{') {
            continue;
        }

        if is_logic_header(header) {
            let mut end = close;
            // `} else {` and friends continue the chain on the closing line
            while code[end].trim_end().ends_with('{') && code[end].trim_start().starts_with('}') {
                match close_of.get(&end) {
                    Some(&next) if next > end => end = next,
                    _ => break,
                }
            }
            out.push((BlockCategory::LogicBlock, header_line + 1, end + 1));
        } else if looks_like_function_header(header) {
            out.push((BlockCategory::FunctionBody, open + 2, close));
        }
    }
    out
}

fn indent_width(line: &str) -> usize {
    leading_whitespace(line).chars().map(|c| if c == '\t' { 4 } else { 1 }).sum()
}

fn indentation_spans(lines: &[&str]) -> Vec<(BlockCategory, usize, usize)> {
    let mut out = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim_end();
        let trimmed = line.trim_start();
        let word = first_word(trimmed);
        let is_def = word == "def" || (word == "async" && trimmed.starts_with("async def"));
        let is_logic = is_logic_header(trimmed);
        if !is_def && !is_logic {
            continue;
        }
        // signature may wrap; find the line that closes it with ':'
        let Some(header_end) = (i..lines.len().min(i + 10)).find(|&j| {
            let l = lines[j].split('#').next().unwrap_or("").trim_end();
            l.ends_with(':')
        }) else {
            continue;
        };
        let base = indent_width(raw);
        let mut last_body = None;
        for (j, l) in lines.iter().enumerate().skip(header_end + 1) {
            if is_blank(l) {
                continue;
            }
            if indent_width(l) <= base {
                break;
            }
            last_body = Some(j);
        }
        let Some(last) = last_body else { continue };
        if is_def {
            out.push((BlockCategory::FunctionBody, header_end + 2, last + 1));
        } else {
            out.push((BlockCategory::LogicBlock, i + 1, last + 1));
        }
    }
    out
}

impl SyntaxProvider for HeuristicProvider {
    fn structural_spans(&self, source: &str, language_hint: &str) -> Vec<(BlockCategory, usize, usize)> {
        let lines: Vec<&str> = source.lines().collect();
        match LanguageFamily::from_hint(language_hint) {
            LanguageFamily::Braces => brace_spans(&lines),
            LanguageFamily::Indentation => indentation_spans(&lines),
            LanguageFamily::Unknown => {
                let braces = brace_spans(&lines);
                if braces.is_empty() {
                    indentation_spans(&lines)
                } else {
                    braces
                }
            }
        }
    }

    fn knows(&self, language_hint: &str) -> bool {
        LanguageFamily::from_hint(language_hint) != LanguageFamily::Unknown
    }
}

/// Shrinks a span so it starts and ends on nonblank lines.
fn tighten(lines: &[&str], start: usize, end: usize) -> Option<(usize, usize)> {
    let s = (start..=end).find(|&i| !is_blank(lines[i - 1]))?;
    let e = (s..=end).rev().find(|&i| !is_blank(lines[i - 1]))?;
    Some((s, e))
}

/// Candidate spans for every category, with random spans drawn from `rng`.
pub fn extract_blocks_with(
    source: &str,
    language_hint: &str,
    provider: &dyn SyntaxProvider,
    limit: RegionLimit,
    rng: &mut impl Rng,
) -> Result<Vec<BlockSpan>, SynthError> {
    let lines: Vec<&str> = source.lines().collect();
    let nonblank: Vec<usize> = (1..=lines.len()).filter(|&i| !is_blank(lines[i - 1])).collect();
    if nonblank.len() < 2 {
        // a single line of code has no context to complete it from
        return Ok(Vec::new());
    }
    let (first, last) = (nonblank[0], *nonblank.last().expect("non-empty"));
    let whole_file = |s: usize, e: usize| s <= first && e >= last;

    let mut spans: Vec<BlockSpan> = Vec::new();
    let mut push = |category, start, end| {
        if let Some((s, e)) = tighten(&lines, start, end) {
            if !whole_file(s, e) {
                spans.push(BlockSpan {
                    category,
                    start_line: s,
                    end_line: e,
                    source_path: String::new(),
                });
            }
        }
    };

    let structural = provider.structural_spans(source, language_hint);
    let found_structure = !structural.is_empty();
    for (cat, s, e) in structural {
        if s >= 1 && s <= e && e <= lines.len() {
            push(cat, s, e);
        }
    }

    for &i in &nonblank {
        push(BlockCategory::SingleLine, i, i);
    }

    let n = limit.lines_each_side();
    for _ in 0..nonblank.len() {
        // redraw spans that would swallow the whole file
        for _ in 0..8 {
            let start = nonblank[rng.random_range(0..nonblank.len())];
            let len = rng.random_range(1..=n);
            let end = (start + len - 1).min(lines.len());
            if tighten(&lines, start, end).is_some_and(|(s, e)| !whole_file(s, e)) {
                push(BlockCategory::RandomSpan, start, end);
                break;
            }
        }
    }

    spans.sort();
    spans.dedup();

    if !found_structure && !provider.knows(language_hint) {
        return Err(SynthError::UnsupportedLanguage {
            hint: language_hint.to_string(),
            fallback: spans,
        });
    }
    Ok(spans)
}

/// [`extract_blocks_with`] using the heuristic provider, the default region
/// limit and a random-span seed derived from the source text.
pub fn extract_blocks(source: &str, language_hint: &str) -> Result<Vec<BlockSpan>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(source.as_bytes()));
    extract_blocks_with(source, language_hint, &HeuristicProvider, RegionLimit::DEFAULT, &mut rng)
}
