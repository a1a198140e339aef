#![cfg_attr(not(test), no_std)]
//! Search-and-replace infilling core: block grammar, middle extraction,
//! anchored patching, prompt construction, benchmark synthesis, context
//! perturbation and scoring.

extern crate alloc;

pub mod extraction;
pub mod format;
pub mod metrics;
pub mod patching;
pub mod perturbation;
pub mod prompting;
pub mod synthesis;
pub mod text;

pub use extraction::{diff_trim, extract_replace_code, Branch, ExtractionResult};
pub use format::{parse_sri_block, render_sri_block, validate_region, FormatError, Marker, RegionLimit, SriBlock};
pub use patching::{apply_sri, to_unified_diff, AnchorPolicy, PatchError};
pub use prompting::{build_prompt, CompletionTask, PromptBundle, PromptError, PromptOptions, PromptStyle};
pub use metrics::{aggregate, edit_similarity, exact_match, levenshtein, perplexity, EvalRecord, ScoreReport};
pub use perturbation::{perturb_window, FlexTask, Operator, PerturbError};
pub use synthesis::{sample_tasks, BlockCategory, CorpusFile, RatioSpec, SriSample, SynthError};
