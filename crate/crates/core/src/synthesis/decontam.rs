//! Removing samples that overlap evaluation data.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SriSample;
use crate::text::fnv1a;

/// Tokens per fingerprint window.
pub const NGRAM: usize = 7;

/// Repository ids compare case-insensitively, ignoring a URL host prefix and
/// a trailing `.git` or `/`.
pub fn normalize_repo(repo: &str) -> String {
    let mut r = repo.trim().to_ascii_lowercase();
    for scheme in ["https://", "http://", "git@"] {
        if let Some(rest) = r.strip_prefix(scheme) {
            r = rest.into();
        }
    }
    for host in ["github.com/", "github.com:", "gitlab.com/", "gitlab.com:"] {
        if let Some(rest) = r.strip_prefix(host) {
            r = rest.into();
        }
    }
    let r = r.trim_end_matches('/');
    r.strip_suffix(".git").unwrap_or(r).into()
}

fn tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let word = c.is_alphanumeric() || c == '_';
        match (word, word_start) {
            (true, None) => word_start = Some(i),
            (true, Some(_)) => {}
            (false, start) => {
                if let Some(s) = start {
                    out.push(&text[s..i]);
                    word_start = None;
                }
                if !c.is_whitespace() {
                    out.push(&text[i..i + c.len_utf8()]);
                }
            }
        }
    }
    if let Some(s) = word_start {
        out.push(&text[s..]);
    }
    out
}

fn hash_tokens(toks: &[&str]) -> u64 {
    let mut buf = Vec::new();
    for t in toks {
        buf.extend_from_slice(t.as_bytes());
        buf.push(0x1f);
    }
    fnv1a(&buf)
}

/// Hashes of every window of [`NGRAM`] tokens. Whitespace never affects
/// tokenisation, so layout-only edits keep the same fingerprints. Texts
/// shorter than one window hash as a single sequence.
pub fn fingerprints(text: &str) -> BTreeSet<u64> {
    let toks = tokens(text);
    if toks.is_empty() {
        return BTreeSet::new();
    }
    if toks.len() < NGRAM {
        return BTreeSet::from([hash_tokens(&toks)]);
    }
    toks.windows(NGRAM).map(hash_tokens).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Denylist {
    #[serde(default)]
    pub repos: BTreeSet<String>,
    #[serde(default)]
    pub fingerprints: BTreeSet<u64>,
}

impl Denylist {
    pub fn add_repo(&mut self, repo: &str) {
        self.repos.insert(normalize_repo(repo));
    }

    pub fn add_snippet(&mut self, snippet: &str) {
        self.fingerprints.extend(fingerprints(snippet));
    }

    pub fn is_empty(&self) -> bool {
        self.repos.is_empty() && self.fingerprints.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecontamReport {
    pub kept: usize,
    pub dropped_repo: usize,
    pub dropped_fingerprint: usize,
}

/// Drops samples from denylisted repositories, then samples whose middle
/// shares any fingerprint with the denylist.
pub fn decontaminate(samples: Vec<SriSample>, denylist: &Denylist) -> (Vec<SriSample>, DecontamReport) {
    let mut report = DecontamReport::default();
    let kept: Vec<SriSample> = samples
        .into_iter()
        .filter(|s| {
            if !denylist.repos.is_empty() && denylist.repos.contains(&normalize_repo(&s.repo)) {
                report.dropped_repo += 1;
                return false;
            }
            if !denylist.fingerprints.is_empty()
                && fingerprints(&s.task.middle).iter().any(|h| denylist.fingerprints.contains(h))
            {
                report.dropped_fingerprint += 1;
                return false;
            }
            true
        })
        .collect();
    report.kept = kept.len();
    (kept, report)
}
