//! Turning a code corpus into search-and-replace samples.

mod blocks;
mod decontam;
mod sample;

pub use blocks::{
    extract_blocks, extract_blocks_with, BlockCategory, BlockSpan, HeuristicProvider, LanguageFamily, SyntaxProvider,
};
pub use decontam::{decontaminate, fingerprints, normalize_repo, DecontamReport, Denylist, NGRAM};
pub use sample::{
    largest_remainder, make_sri_sample, materialize, sample_spans, sample_tasks, sample_tasks_with, span_task, CorpusFile,
    RatioSpec, SpanPick, SriSample,
};

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    /// The hint names no known language and no structure was found. The
    /// random-span and single-line candidates are still provided.
    #[error("unsupported language `{hint}`")]
    UnsupportedLanguage { hint: String, fallback: Vec<BlockSpan> },
    #[error("corpus has no candidates for category {0}")]
    InsufficientCorpus(BlockCategory),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("sample count must be at least 1")]
    ZeroCount,
    #[error("ratio needs at least one positive weight")]
    ZeroRatio,
    #[error("malformed ratio `{0}`, expected four integers like 2:1:1:1")]
    BadRatio(String),
    #[error("middle spans {lines} lines, more than the allowed {max}")]
    WindowOverflow { lines: usize, max: usize },
    #[error("middle is empty")]
    EmptyMiddle,
    #[error("source already contains the marker text")]
    MarkerInSource,
    #[error("span {start}..={end} is outside the file")]
    SpanOutOfRange { start: usize, end: usize },
}
