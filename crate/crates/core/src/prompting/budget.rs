use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{CompletionTask, PromptError};
use crate::format::Marker;

/// Approximate token counting for context budgets.
pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> usize;
}

/// `ceil(chars / chars_per_unit)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharsPerUnit(pub usize);

impl TokenEstimator for CharsPerUnit {
    fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(self.0.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBudget {
    pub max_units: usize,
    #[serde(default = "default_chars_per_unit")]
    pub chars_per_unit: usize,
}

fn default_chars_per_unit() -> usize {
    4
}

impl ContextBudget {
    pub fn new(max_units: usize) -> Result<Self, PromptError> {
        if max_units == 0 {
            return Err(PromptError::InvalidBudget);
        }
        Ok(Self {
            max_units,
            chars_per_unit: default_chars_per_unit(),
        })
    }

    /// Budget used for the similarity-scored repository benchmarks.
    pub fn similarity_default() -> Self {
        Self {
            max_units: 8 * 1024,
            chars_per_unit: 4,
        }
    }

    pub fn estimator(&self) -> CharsPerUnit {
        CharsPerUnit(self.chars_per_unit)
    }
}

fn line_starts(s: &str) -> impl Iterator<Item = usize> + '_ {
    core::iter::once(0).chain(s.match_indices('\n').map(|(i, _)| i + 1).filter(move |&i| i < s.len()))
}

fn measure(est: &dyn TokenEstimator, ctx: &str, prefix: &str, suffix: &str) -> usize {
    let mut text = String::with_capacity(ctx.len() + prefix.len() + suffix.len() + Marker::TEXT.len() + 1);
    text.push_str(ctx);
    text.push_str(prefix);
    text.push_str(Marker::TEXT);
    text.push('\n');
    text.push_str(suffix);
    est.estimate(&text)
}

/// Smallest `k` in `0..=max` with `fits(k)`, assuming monotonicity.
fn first_fit(max: usize, fits: impl Fn(usize) -> bool) -> Option<usize> {
    if !fits(max) {
        return None;
    }
    let (mut lo, mut hi) = (0, max);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// Drops whole lines until the prompt material fits: cross-file context from
/// its start, then the prefix from its left edge, then the suffix from its
/// right edge. The middle is never touched and at least one line of prefix
/// and suffix always survives.
pub fn trim_context(task: &CompletionTask, budget: &ContextBudget) -> Result<CompletionTask, PromptError> {
    trim_context_with(task, budget.max_units, &budget.estimator())
}

pub fn trim_context_with(
    task: &CompletionTask,
    max_units: usize,
    est: &dyn TokenEstimator,
) -> Result<CompletionTask, PromptError> {
    let fits = |ctx: &str, pre: &str, suf: &str| measure(est, ctx, pre, suf) <= max_units;
    if fits(&task.crossfile_context, &task.prefix, &task.suffix) {
        return Ok(task.clone());
    }

    let ctx_cuts: alloc::vec::Vec<usize> = line_starts(&task.crossfile_context)
        .skip(1)
        .chain(core::iter::once(task.crossfile_context.len()))
        .collect();
    let pre_cuts: alloc::vec::Vec<usize> = line_starts(&task.prefix).skip(1).collect();
    // suffix ends kept: end of each line, from the right, never the first line
    let mut suf_ends: alloc::vec::Vec<usize> = task
        .suffix
        .match_indices('\n')
        .map(|(i, _)| i + 1)
        .filter(|&i| i < task.suffix.len())
        .collect();
    suf_ends.reverse();

    let mut out = task.clone();
    let ctx_at = |k: usize| if k == 0 { 0 } else { ctx_cuts[k - 1] };
    if let Some(k) = first_fit(ctx_cuts.len(), |k| {
        fits(&task.crossfile_context[ctx_at(k)..], &task.prefix, &task.suffix)
    }) {
        out.crossfile_context = task.crossfile_context[ctx_at(k)..].into();
        return Ok(out);
    }
    out.crossfile_context = String::new();

    let pre_at = |k: usize| if k == 0 { 0 } else { pre_cuts[k - 1] };
    if let Some(k) = first_fit(pre_cuts.len(), |k| fits("", &task.prefix[pre_at(k)..], &task.suffix)) {
        out.prefix = task.prefix[pre_at(k)..].into();
        return Ok(out);
    }
    out.prefix = task.prefix[pre_at(pre_cuts.len())..].into();

    let suf_at = |k: usize| if k == 0 { task.suffix.len() } else { suf_ends[k - 1] };
    match first_fit(suf_ends.len(), |k| fits("", &out.prefix, &task.suffix[..suf_at(k)])) {
        Some(k) => {
            out.suffix = task.suffix[..suf_at(k)].into();
            Ok(out)
        }
        None => Err(PromptError::BudgetTooSmall),
    }
}
