//! Exact match, edit similarity, perplexity and score aggregation.
//!
//! Both string metrics compare the whole strings after stripping leading and
//! trailing whitespace. Edit similarity is the character-level Levenshtein
//! ratio scaled to 0..=100.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::ExtractionResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("log-probability sequence is empty")]
    EmptySequence,
    #[error("log-probability at index {0} is positive or not a number")]
    InvalidLogProb(usize),
}

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

pub fn exact_match(pred: &str, reference: &str) -> bool {
    pred.trim() == reference.trim()
}

/// `100 * (1 - lev(p, r) / max(|p|, |r|, 1))` over stripped strings.
pub fn edit_similarity(pred: &str, reference: &str) -> f64 {
    let (p, r) = (pred.trim(), reference.trim());
    let longest = p.chars().count().max(r.chars().count()).max(1);
    100.0 * (1.0 - levenshtein(p, r) as f64 / longest as f64)
}

/// `exp(-mean(logprobs))` for natural-log token probabilities.
pub fn perplexity(logprobs: &[f64]) -> Result<f64, MetricError> {
    if logprobs.is_empty() {
        return Err(MetricError::EmptySequence);
    }
    if let Some(i) = logprobs.iter().position(|&l| l.is_nan() || l > 0.0) {
        return Err(MetricError::InvalidLogProb(i));
    }
    let mean = logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    Ok(libm::exp(-mean))
}

/// Outcome of one evaluated task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub task_id: String,
    #[serde(default)]
    pub style: String,
    #[serde(default)]
    pub benchmark: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionResult>,
    /// Extracted completion; empty on a parse failure.
    pub prediction: String,
    pub reference: String,
    pub parse_failure: bool,
    pub em: bool,
    pub es: f64,
    /// Whether the response's block stayed inside the allowed window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_ok: Option<bool>,
    #[serde(default)]
    pub attempts: u32,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvalRecord {
    /// Scores `prediction` against `reference`. `None` is a parse failure and
    /// scores as the empty prediction.
    pub fn scored(task_id: impl Into<String>, prediction: Option<&str>, reference: impl Into<String>) -> Self {
        let reference = reference.into();
        let pred = prediction.unwrap_or("");
        Self {
            task_id: task_id.into(),
            style: String::new(),
            benchmark: String::new(),
            category: String::new(),
            raw_response: String::new(),
            extraction: None,
            prediction: pred.to_string(),
            em: prediction.is_some() && exact_match(pred, &reference),
            es: edit_similarity(pred, &reference),
            reference,
            parse_failure: prediction.is_none(),
            region_ok: None,
            attempts: 0,
            latency_ms: 0,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub n: usize,
    pub em_rate: f64,
    pub es_mean: f64,
    pub parse_failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n: usize,
    /// `None` when there are no records.
    pub em_rate: Option<f64>,
    pub es_mean: Option<f64>,
    pub parse_failure_rate: Option<f64>,
    /// Share of records with edit similarity 100; never below `em_rate`.
    pub es_perfect_rate: Option<f64>,
    pub per_category: BTreeMap<String, Breakdown>,
    pub per_benchmark: BTreeMap<String, Breakdown>,
    pub assumptions: Vec<String>,
}

pub const ASSUMPTIONS: [&str; 3] = [
    "EM: whole-string equality after stripping leading and trailing whitespace",
    "ES: 100 * (1 - levenshtein / max length), character level, after the same stripping",
    "parse failures count as EM=false and ES against the empty prediction",
];

fn percent(hits: usize, n: usize) -> f64 {
    100.0 * hits as f64 / n as f64
}

/// Order-independent mean: values are summed in sorted order.
fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn breakdown(records: &[&EvalRecord]) -> Breakdown {
    let n = records.len();
    let mut es: Vec<f64> = records.iter().map(|r| r.es).collect();
    Breakdown {
        n,
        em_rate: percent(records.iter().filter(|r| r.em).count(), n),
        es_mean: mean(&mut es),
        parse_failure_rate: percent(records.iter().filter(|r| r.parse_failure).count(), n),
    }
}

fn group_by<'a>(records: &'a [EvalRecord], key: impl Fn(&EvalRecord) -> &str) -> BTreeMap<String, Breakdown> {
    let mut groups: BTreeMap<String, Vec<&'a EvalRecord>> = BTreeMap::new();
    for r in records {
        let k = key(r);
        if !k.is_empty() {
            groups.entry(k.to_string()).or_default().push(r);
        }
    }
    groups.into_iter().map(|(k, v)| (k, breakdown(&v))).collect()
}

pub fn aggregate(records: &[EvalRecord]) -> ScoreReport {
    let assumptions = ASSUMPTIONS.iter().map(|s| s.to_string()).collect();
    if records.is_empty() {
        return ScoreReport {
            n: 0,
            em_rate: None,
            es_mean: None,
            parse_failure_rate: None,
            es_perfect_rate: None,
            per_category: BTreeMap::new(),
            per_benchmark: BTreeMap::new(),
            assumptions,
        };
    }
    let all: Vec<&EvalRecord> = records.iter().collect();
    let overall = breakdown(&all);
    let perfect = records.iter().filter(|r| r.es >= 100.0).count();
    ScoreReport {
        n: overall.n,
        em_rate: Some(overall.em_rate),
        es_mean: Some(overall.es_mean),
        parse_failure_rate: Some(overall.parse_failure_rate),
        es_perfect_rate: Some(percent(perfect, records.len())),
        per_category: group_by(records, |r| &r.category),
        per_benchmark: group_by(records, |r| &r.benchmark),
        assumptions,
    }
}

impl ScoreReport {
    /// Fixed-width text table: overall row first, then categories and
    /// benchmarks.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let mut rows = vec![(
            "all".to_string(),
            self.n,
            opt(self.em_rate),
            opt(self.es_mean),
            opt(self.parse_failure_rate),
        )];
        for (prefix, map) in [("category", &self.per_category), ("benchmark", &self.per_benchmark)] {
            for (k, b) in map {
                rows.push((
                    format!("{prefix}:{k}"),
                    b.n,
                    format!("{:.2}", b.em_rate),
                    format!("{:.2}", b.es_mean),
                    format!("{:.2}", b.parse_failure_rate),
                ));
            }
        }
        let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<w$}  {:>6}  {:>7}  {:>7}  {:>8}\n", "group", "n", "EM", "ES", "fail%");
        for (name, n, em, es, pf) in rows {
            out.push_str(&format!("{name:<w$}  {n:>6}  {em:>7}  {es:>7}  {pf:>8}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dp(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let c = usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + c);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn string_metric_examples() {
        assert!(exact_match("abc ", "abc"));
        assert!(!exact_match("abc", "abd"));
        assert!(exact_match("", ""));
        assert_eq!(edit_similarity("x", "x"), 100.0);
        assert_eq!(edit_similarity("", "abc"), 0.0);
        assert!((edit_similarity("kitten", "sitting") - 57.142857).abs() < 1e-4);
        assert_eq!(edit_similarity("", ""), 100.0);
    }

    #[test]
    fn perplexity_examples() {
        let ln = libm::log;
        assert!((perplexity(&[ln(0.5), ln(0.5)]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(perplexity(&[0.0, 0.0]).unwrap(), 1.0);
        assert!((perplexity(&[ln(0.25), ln(1.0)]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(perplexity(&[]), Err(MetricError::EmptySequence));
        assert_eq!(perplexity(&[-1.0, 0.5]), Err(MetricError::InvalidLogProb(1)));
    }

    fn rec(em: bool, es: f64, fail: bool) -> EvalRecord {
        let mut r = EvalRecord::scored("t", Some("a"), "a");
        r.em = em;
        r.es = es;
        r.parse_failure = fail;
        r
    }

    #[test]
    fn aggregate_examples() {
        let rep = aggregate(&[rec(true, 100.0, false), rec(false, 50.0, false)]);
        assert_eq!((rep.n, rep.em_rate, rep.es_mean), (2, Some(50.0), Some(75.0)));

        let fails = [EvalRecord::scored("a", None, "x"), EvalRecord::scored("b", None, "")];
        let rep = aggregate(&fails);
        assert_eq!(rep.em_rate, Some(0.0));
        assert_eq!(rep.parse_failure_rate, Some(100.0));
        // the empty reference scores 100 against the empty prediction
        assert_eq!(rep.es_mean, Some(50.0));

        let empty = aggregate(&[]);
        assert_eq!((empty.n, empty.em_rate, empty.es_mean), (0, None, None));
        assert_eq!(empty.assumptions.len(), 3);
    }

    #[test]
    fn breakdowns_by_key() {
        let mut a = rec(true, 100.0, false);
        a.category = "single_line".into();
        a.benchmark = "safim".into();
        let mut b = rec(false, 0.0, true);
        b.category = "function_body".into();
        b.benchmark = "safim".into();
        let rep = aggregate(&[a, b]);
        assert_eq!(rep.per_category.len(), 2);
        assert_eq!(rep.per_benchmark["safim"].n, 2);
        assert_eq!(rep.per_category["function_body"].parse_failure_rate, 100.0);
        assert!(rep.to_table().contains("category:single_line"));
    }

    proptest! {
        #[test]
        fn levenshtein_matches_dp(a in "[abc ]{0,24}", b in "[abc ]{0,24}") {
            prop_assert_eq!(levenshtein(&a, &b), dp(&a, &b));
        }

        #[test]
        fn similarity_laws(a in "\\PC{0,20}", b in "\\PC{0,20}") {
            let ab = edit_similarity(&a, &b);
            prop_assert_eq!(ab, edit_similarity(&b, &a));
            prop_assert!((0.0..=100.0).contains(&ab));
            prop_assert_eq!(ab == 100.0, a.trim() == b.trim());
            if exact_match(&a, &b) {
                prop_assert_eq!(ab, 100.0);
            }
        }

        #[test]
        fn constant_logprob(l in -20.0f64..0.0, n in 1usize..50) {
            let p = perplexity(&vec![l; n]).unwrap();
            prop_assert!((p - libm::exp(-l)).abs() <= 1e-9 * p);
        }

        #[test]
        fn aggregate_ignores_order(es in proptest::collection::vec(0.0f64..100.0, 1..30)) {
            let recs: Vec<EvalRecord> = es.iter().map(|&e| rec(e > 50.0, e, false)).collect();
            let mut rev = recs.clone();
            rev.reverse();
            prop_assert_eq!(aggregate(&recs), aggregate(&rev));
        }
    }
}
