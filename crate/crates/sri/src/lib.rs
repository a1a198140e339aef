//! Command-line toolkit and evaluation harness for search-and-replace
//! infilling, on top of `sri-core`.

pub mod cli;
pub mod corpus;
pub mod harness;
pub mod jsonl;

pub use sri_core as core;
