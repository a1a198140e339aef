//! Noise injection into the lines around the completion marker.
//!
//! Every operator keeps the byte length of the line it edits, so the prefix
//! and suffix of the perturbed source can be recovered from the offsets of
//! the unperturbed one.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::{mark_task, CompletionTask, MarkerIndent};
use crate::text::{is_blank, leading_whitespace, split_lines};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_COUNT: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("no perturbable line within the window")]
    NothingToPerturb,
    #[error("no operators enabled")]
    NoOperators,
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// Shuffles the non-whitespace characters of a line in place. Leading
    /// indentation and every whitespace position are kept.
    LineScramble,
    /// Swaps two identifiers separated only by whitespace.
    TokenTranspose,
    /// Substitutes one ASCII letter inside an identifier.
    IdentifierTypo,
}

impl Operator {
    pub const ALL: [Operator; 3] = [Operator::LineScramble, Operator::TokenTranspose, Operator::IdentifierTypo];

    pub fn as_str(self) -> &'static str {
        match self {
            Operator::LineScramble => "line_scramble",
            Operator::TokenTranspose => "token_transpose",
            Operator::IdentifierTypo => "identifier_typo",
        }
    }

    /// Applies the operator, or returns `None` when it cannot change `line`.
    pub fn apply(self, line: &str, rng: &mut impl Rng) -> Option<String> {
        let out = match self {
            Operator::LineScramble => line_scramble(line, rng),
            Operator::TokenTranspose => {
                let pairs = transpose_pairs(line);
                if pairs.is_empty() {
                    return None;
                }
                Some(transpose_at(line, &pairs[rng.random_range(0..pairs.len())]))
            }
            Operator::IdentifierTypo => identifier_typo(line, rng),
        }?;
        (out != line).then_some(out)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Operator {
    type Err = PerturbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Operator::ALL
            .into_iter()
            .find(|op| op.as_str() == norm)
            .ok_or_else(|| PerturbError::UnknownOperator(s.into()))
    }
}

fn line_scramble(line: &str, rng: &mut impl Rng) -> Option<String> {
    let body = &line[leading_whitespace(line).len()..];
    let mut chars: Vec<char> = body.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.len() < 2 || chars.iter().all(|&c| c == chars[0]) {
        return None;
    }
    let original = chars.clone();
    // retry a few times in case the shuffle lands on the identity
    for _ in 0..8 {
        chars.shuffle(rng);
        if chars != original {
            break;
        }
    }
    let mut it = chars.into_iter();
    let mut out = String::with_capacity(line.len());
    out.push_str(leading_whitespace(line));
    for c in body.chars() {
        out.push(if c.is_whitespace() { c } else { it.next().expect("same count") });
    }
    Some(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte ranges of identifier tokens (starting with a letter or `_`).
fn identifiers(line: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices().chain(core::iter::once((line.len(), ' '))) {
        match (is_ident_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let first = line[s..].chars().next().expect("non-empty token");
                if first.is_alphabetic() || first == '_' {
                    out.push((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

type Pair = ((usize, usize), (usize, usize));

/// Adjacent identifier pairs with only whitespace between them and
/// different spellings.
fn transpose_pairs(line: &str) -> Vec<Pair> {
    identifiers(line)
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0], w[1]);
            line[a.1..b.0].chars().all(char::is_whitespace) && a.1 < b.0 && line[a.0..a.1] != line[b.0..b.1]
        })
        .map(|w| (w[0], w[1]))
        .collect()
}

fn transpose_at(line: &str, &(a, b): &Pair) -> String {
    let mut out = String::with_capacity(line.len());
    out.push_str(&line[..a.0]);
    out.push_str(&line[b.0..b.1]);
    out.push_str(&line[a.1..b.0]);
    out.push_str(&line[a.0..a.1]);
    out.push_str(&line[b.1..]);
    out
}

fn identifier_typo(line: &str, rng: &mut impl Rng) -> Option<String> {
    let spots: Vec<usize> = identifiers(line)
        .into_iter()
        .flat_map(|(s, e)| (s..e).filter(|&i| line.as_bytes()[i].is_ascii_alphabetic()))
        .collect();
    if spots.is_empty() {
        return None;
    }
    let at = spots[rng.random_range(0..spots.len())];
    let old = line.as_bytes()[at];
    let base = if old.is_ascii_lowercase() { b'a' } else { b'A' };
    // one of the 25 other letters of the same case
    let mut new = base + rng.random_range(0..25u8);
    if new >= old {
        new += 1;
    }
    let mut out = String::with_capacity(line.len());
    out.push_str(&line[..at]);
    out.push(new as char);
    out.push_str(&line[at + 1..]);
    Some(out)
}

fn is_comment_only(line: &str) -> bool {
    let t = line.trim_start();
    ["//", "#", "/*", "*", "--"].iter().any(|p| t.starts_with(p))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    /// 1-based line in the marked source.
    pub line_number: usize,
    pub operator: Operator,
    pub original_line: String,
    pub perturbed_line: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlexTask {
    pub base: CompletionTask,
    /// Marked source before perturbation.
    pub marked_source: String,
    pub perturbed_source: String,
    pub perturbations: Vec<Perturbation>,
    pub window: usize,
    pub seed: u64,
    /// 1-based line of the marker.
    pub marker_line: usize,
    pub prefix_len: usize,
    pub suffix_start: usize,
}

impl FlexTask {
    /// The base task with the perturbed context in place of the original.
    pub fn perturbed_task(&self) -> CompletionTask {
        let mut task = self.base.clone();
        task.prefix = self.perturbed_source[..self.prefix_len].into();
        task.suffix = self.perturbed_source[self.suffix_start..].into();
        task
    }

    /// Puts the recorded original lines back.
    pub fn revert(&self) -> String {
        let mut lines: Vec<&str> = self.perturbed_source.split('\n').collect();
        for p in &self.perturbations {
            lines[p.line_number - 1] = &p.original_line;
        }
        lines.join("\n")
    }

    /// Perturbed source with changed lines wrapped as `@ ... @`. For reading
    /// only; the sentinels are not valid code.
    pub fn sentinel_view(&self) -> String {
        let mut out = String::with_capacity(self.perturbed_source.len() + 4 * self.perturbations.len());
        for (i, line) in self.perturbed_source.split('\n').enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if self.perturbations.iter().any(|p| p.line_number == i + 1) {
                let indent = leading_whitespace(line);
                out.push_str(indent);
                out.push_str("@ ");
                out.push_str(&line[indent.len()..]);
                out.push_str(" @");
            } else {
                out.push_str(line);
            }
        }
        out
    }
}

/// Applies up to `count` operators to distinct nonblank, non-comment lines
/// within `window` lines of the marker. Deterministic in `seed`.
pub fn perturb_window(
    task: &CompletionTask,
    operators: &[Operator],
    count: usize,
    window: usize,
    seed: u64,
) -> Result<FlexTask, PerturbError> {
    if operators.is_empty() {
        return Err(PerturbError::NoOperators);
    }
    let marked = mark_task(task, MarkerIndent::Cursor);
    let k = marked.marker_line();
    let lines = split_lines(&marked.text);
    let lo = k.saturating_sub(window);
    let hi = (k + window).min(lines.len() - 1);

    let mut targets: Vec<usize> = (lo..=hi)
        .filter(|&i| i != k && !is_blank(lines[i].text) && !is_comment_only(lines[i].text))
        .collect();
    if targets.is_empty() {
        return Err(PerturbError::NothingToPerturb);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops: Vec<Operator> = operators.to_vec();
    ops.sort();
    ops.dedup();
    let mut edits: Vec<Perturbation> = Vec::new();
    while edits.len() < count && !targets.is_empty() {
        let line_idx = targets.swap_remove(rng.random_range(0..targets.len()));
        let original = lines[line_idx].text;
        // `\r` stays attached to the line so operators never see it
        let (body, cr) = match original.strip_suffix('\r') {
            Some(b) => (b, "\r"),
            None => (original, ""),
        };
        ops.shuffle(&mut rng);
        let changed = ops.iter().find_map(|&op| op.apply(body, &mut rng).map(|new| (op, new)));
        if let Some((operator, mut new)) = changed {
            new.push_str(cr);
            debug_assert_eq!(new.len(), original.len());
            edits.push(Perturbation {
                line_number: line_idx + 1,
                operator,
                original_line: original.into(),
                perturbed_line: new,
            });
        }
    }
    if edits.is_empty() {
        return Err(PerturbError::NothingToPerturb);
    }
    edits.sort_by_key(|p| p.line_number);

    let mut perturbed = String::with_capacity(marked.text.len());
    let mut next = edits.iter().peekable();
    for (i, l) in lines.iter().enumerate() {
        let text = match next.peek() {
            Some(p) if p.line_number == i + 1 => &next.next().expect("peeked").perturbed_line,
            _ => l.text,
        };
        if i > 0 {
            perturbed.push('\n');
        }
        perturbed.push_str(text);
    }

    Ok(FlexTask {
        base: task.clone(),
        marked_source: marked.text.clone(),
        perturbed_source: perturbed,
        perturbations: edits,
        window,
        seed,
        marker_line: k + 1,
        prefix_len: marked.prefix_len,
        suffix_start: marked.suffix_start,
    })
}
