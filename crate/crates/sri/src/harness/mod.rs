//! End-to-end evaluation against an OpenAI-compatible endpoint.

mod client;
mod run;

pub use client::{
    request_body, response_text, with_retry, ClientError, Completion, CompletionClient, ConfigError, HttpClient,
    InferenceConfig, RetryPolicy, API_KEY_ENV,
};
pub use run::{evaluate_one, first_code_block, run_eval, EvalOptions, EvalOutcome, HarnessError};
