//! Completion tasks and the five prompt styles.
//!
//! All styles embed the same prefix, suffix and cross-file context strings, so
//! comparisons between styles differ only in framing.

mod budget;
mod task;

pub use budget::{trim_context, trim_context_with, CharsPerUnit, ContextBudget, TokenEstimator};
pub use task::{insert_marker, mark_task, CompletionTask, MarkedSource, MarkerIndent};

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::RegionLimit;

const SRI_TEMPLATE: &str = include_str!("../../templates/sri.txt");
const NL_STANDARD_TEMPLATE: &str = include_str!("../../templates/nl_standard.txt");
const NL_DIALOGUE_TEMPLATE: &str = include_str!("../../templates/nl_dialogue.txt");
const NL_TEMPLATE_TEMPLATE: &str = include_str!("../../templates/nl_template.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown prompt style `{0}`")]
    UnknownStyle(String),
    #[error("budget cannot hold the marker and one line on each side")]
    BudgetTooSmall,
    #[error("context budget must be positive")]
    InvalidBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    Sri,
    NlStandard,
    NlDialogue,
    NlTemplate,
    TokenFim,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 5] = [
        PromptStyle::Sri,
        PromptStyle::NlStandard,
        PromptStyle::NlDialogue,
        PromptStyle::NlTemplate,
        PromptStyle::TokenFim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::Sri => "sri",
            PromptStyle::NlStandard => "nl-standard",
            PromptStyle::NlDialogue => "nl-dialogue",
            PromptStyle::NlTemplate => "nl-template",
            PromptStyle::TokenFim => "token-fim",
        }
    }

    pub fn is_natural_language(self) -> bool {
        matches!(self, PromptStyle::NlStandard | PromptStyle::NlDialogue | PromptStyle::NlTemplate)
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        PromptStyle::ALL
            .into_iter()
            .find(|style| style.as_str() == norm)
            .ok_or_else(|| PromptError::UnknownStyle(s.to_string()))
    }
}

/// Sentinel strings for raw fill-in-the-middle prompts. Models differ in
/// their spelling, so these are configurable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FimSentinels {
    pub prefix: String,
    pub suffix: String,
    pub middle: String,
}

impl Default for FimSentinels {
    fn default() -> Self {
        Self {
            prefix: "<PRE>".into(),
            suffix: "<SUF>".into(),
            middle: "<MID>".into(),
        }
    }
}

impl FimSentinels {
    pub fn qwen() -> Self {
        Self {
            prefix: "<|fim_prefix|>".into(),
            suffix: "<|fim_suffix|>".into(),
            middle: "<|fim_middle|>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptBody {
    Chat { system: String, user: String },
    Raw { prompt: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub style: PromptStyle,
    #[serde(flatten)]
    pub body: PromptBody,
}

impl PromptBundle {
    pub fn system(&self) -> Option<&str> {
        match &self.body {
            PromptBody::Chat { system, .. } => Some(system),
            PromptBody::Raw { .. } => None,
        }
    }

    pub fn user(&self) -> Option<&str> {
        match &self.body {
            PromptBody::Chat { user, .. } => Some(user),
            PromptBody::Raw { .. } => None,
        }
    }

    pub fn raw(&self) -> Option<&str> {
        match &self.body {
            PromptBody::Raw { prompt } => Some(prompt),
            PromptBody::Chat { .. } => None,
        }
    }
}

/// Knobs that vary per run but not per task.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PromptOptions {
    #[serde(default)]
    pub limit: RegionLimit,
    #[serde(default)]
    pub indent: MarkerIndent,
    #[serde(default)]
    pub sentinels: FimSentinels,
}

/// System prompt for a chat style; `None` for raw FIM.
pub fn system_prompt(style: PromptStyle, limit: RegionLimit) -> Option<String> {
    let template = match style {
        PromptStyle::Sri => SRI_TEMPLATE,
        PromptStyle::NlStandard => NL_STANDARD_TEMPLATE,
        PromptStyle::NlDialogue => NL_DIALOGUE_TEMPLATE,
        PromptStyle::NlTemplate => NL_TEMPLATE_TEMPLATE,
        PromptStyle::TokenFim => return None,
    };
    let text = template.trim_end_matches('\n');
    Some(text.replace("{window}", &limit.lines_each_side().to_string()))
}

fn nl_user(task: &CompletionTask) -> String {
    format!(
        "##Context Code##:\n{}\n\n##Prefix Code##:\n{}\n\n##Suffix Code##:\n{}",
        task.crossfile_context, task.prefix, task.suffix
    )
}

fn sri_user(task: &CompletionTask, indent: MarkerIndent) -> String {
    let marked = mark_task(task, indent).text;
    if task.crossfile_context.is_empty() {
        marked
    } else {
        format!("{}\n\n{}", task.crossfile_context, marked)
    }
}

/// Renders `task` in `style`. Apply [`trim_context`] first when a budget is
/// in force; this function never trims.
pub fn build_prompt(task: &CompletionTask, style: PromptStyle, opts: &PromptOptions) -> PromptBundle {
    let body = match style {
        PromptStyle::TokenFim => {
            let s = &opts.sentinels;
            PromptBody::Raw {
                prompt: format!(
                    "{}{}{}{}{}{}",
                    s.prefix, task.crossfile_context, task.prefix, s.suffix, task.suffix, s.middle
                ),
            }
        }
        PromptStyle::Sri => PromptBody::Chat {
            system: system_prompt(style, opts.limit).unwrap_or_default(),
            user: sri_user(task, opts.indent),
        },
        _ => PromptBody::Chat {
            system: system_prompt(style, opts.limit).unwrap_or_default(),
            user: nl_user(task),
        },
    };
    PromptBundle { style, body }
}

/// Trims to `budget`, then renders.
pub fn build_prompt_within(
    task: &CompletionTask,
    style: PromptStyle,
    opts: &PromptOptions,
    budget: &ContextBudget,
) -> Result<PromptBundle, PromptError> {
    let trimmed = trim_context(task, budget)?;
    Ok(build_prompt(&trimmed, style, opts))
}
