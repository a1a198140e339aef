use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use sri_core::extraction::extract_replace_code;
use sri_core::format::{parse_sri_block, validate_region, RegionLimit};
use sri_core::metrics::{aggregate, EvalRecord, ScoreReport};
use sri_core::prompting::{build_prompt, PromptOptions, PromptStyle};
use sri_core::synthesis::SriSample;
use sri_core::text::normalize_newlines;
use thiserror::Error;

use super::client::{CompletionClient, ConfigError};
use crate::jsonl;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("record log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub style: PromptStyle,
    pub prompt: PromptOptions,
    pub concurrency: usize,
    /// Append-only record log. Records already in it are not re-run.
    pub log_path: Option<PathBuf>,
    /// Label stored on every record for per-benchmark breakdowns.
    pub benchmark: String,
}

impl EvalOptions {
    pub fn new(style: PromptStyle) -> Self {
        Self {
            style,
            prompt: PromptOptions::default(),
            concurrency: 1,
            log_path: None,
            benchmark: String::new(),
        }
    }

    pub fn limit(&self) -> RegionLimit {
        self.prompt.limit
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    /// Ordered by task id.
    pub records: Vec<EvalRecord>,
    pub report: ScoreReport,
    /// Records taken from an existing log instead of being re-run.
    pub resumed: usize,
}

/// Body of the first fenced code block, without its info string.
pub fn first_code_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after_ticks = &text[open + 3..];
    let body_start = after_ticks.find('\n')? + 1;
    let body = &after_ticks[body_start..];
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            return Some(body[..offset].strip_suffix('\n').unwrap_or(&body[..offset]));
        }
        offset += line.len();
    }
    // unterminated fence: take the rest
    Some(body.trim_end())
}

/// Prompts, queries, extracts and scores one sample.
pub fn evaluate_one(sample: &SriSample, opts: &EvalOptions, client: &dyn CompletionClient) -> EvalRecord {
    let bundle = build_prompt(&sample.task, opts.style, &opts.prompt);
    let started = Instant::now();
    let completion = client.complete(&bundle);
    let latency_ms = started.elapsed().as_millis() as u64;

    // extraction yields LF text, so every style is scored on LF text
    let reference = normalize_newlines(&sample.task.middle);
    let reference = reference.as_ref();
    let mut record = match &completion.result {
        Ok(raw) => {
            let mut rec;
            match opts.style {
                PromptStyle::Sri => {
                    let ext = extract_replace_code(raw);
                    let pred = (!ext.is_parse_failure()).then_some(ext.middle.as_str());
                    rec = EvalRecord::scored(&sample.task.task_id, pred, reference);
                    rec.region_ok = parse_sri_block(raw).ok().map(|b| validate_region(&b, opts.limit()).passed());
                    rec.extraction = Some(ext);
                }
                PromptStyle::TokenFim => {
                    rec = EvalRecord::scored(&sample.task.task_id, Some(&normalize_newlines(raw)), reference);
                }
                _ => {
                    let raw = normalize_newlines(raw);
                    let pred = first_code_block(&raw).unwrap_or_else(|| raw.trim());
                    rec = EvalRecord::scored(&sample.task.task_id, Some(pred), reference);
                }
            }
            rec.raw_response = raw.clone();
            rec
        }
        Err(e) => {
            let mut rec = EvalRecord::scored(&sample.task.task_id, None, reference);
            rec.error = Some(e.to_string());
            rec
        }
    };
    record.style = opts.style.as_str().to_string();
    record.category = sample.category.as_str().to_string();
    record.benchmark = opts.benchmark.clone();
    record.attempts = completion.attempts;
    record.latency_ms = latency_ms;
    record
}

fn log_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Log {
        path: path.to_path_buf(),
        source,
    }
}

/// Evaluates every sample with bounded concurrency. Records are appended to
/// the log as they finish, from a single writer; at the end the log is
/// rewritten in task-id order and the report computed.
pub fn run_eval(
    samples: &[SriSample],
    opts: &EvalOptions,
    client: &dyn CompletionClient,
) -> Result<EvalOutcome, HarnessError> {
    if opts.concurrency == 0 {
        return Err(ConfigError::ZeroConcurrency.into());
    }
    let mut seen = HashSet::new();
    for s in samples {
        if !seen.insert(s.task.task_id.as_str()) {
            return Err(HarnessError::DuplicateTask(s.task.task_id.clone()));
        }
    }

    let mut done: BTreeMap<String, EvalRecord> = BTreeMap::new();
    if let Some(path) = &opts.log_path {
        if path.exists() {
            for rec in jsonl::read_lenient::<EvalRecord>(path).map_err(log_err(path))? {
                if seen.contains(rec.task_id.as_str()) {
                    done.insert(rec.task_id.clone(), rec);
                }
            }
        }
    }
    let resumed = done.len();
    let todo: Vec<&SriSample> = samples.iter().filter(|s| !done.contains_key(&s.task.task_id)).collect();

    let mut log = match &opts.log_path {
        Some(path) => {
            // a resumed log is rewritten from its parsed records, dropping any torn line
            let mut w = BufWriter::new(File::create(path).map_err(log_err(path))?);
            for rec in done.values() {
                jsonl::write_record(&mut w, rec).map_err(log_err(path))?;
            }
            w.flush().map_err(log_err(path))?;
            drop(w);
            Some(OpenOptions::new().append(true).open(path).map_err(log_err(path))?)
        }
        None => None,
    };

    let next = AtomicUsize::new(0);
    let workers = opts.concurrency.min(todo.len().max(1));
    let (tx, rx) = mpsc::channel::<EvalRecord>();
    let mut write_error = None;
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, todo) = (&next, &todo);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(sample) = todo.get(i) else { break };
                if tx.send(evaluate_one(sample, opts, client)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for rec in rx {
            if let (Some(file), None) = (log.as_mut(), &write_error) {
                if let Err(e) = jsonl::write_record(&mut *file, &rec).and_then(|_| file.flush()) {
                    write_error = Some(e);
                }
            }
            done.insert(rec.task_id.clone(), rec);
        }
    });
    if let (Some(path), Some(e)) = (&opts.log_path, write_error) {
        return Err(log_err(path)(e));
    }

    let records: Vec<EvalRecord> = done.into_values().collect();
    if let Some(path) = &opts.log_path {
        let tmp = path.with_extension("jsonl.tmp");
        jsonl::write_records(File::create(&tmp).map_err(log_err(&tmp))?, &records).map_err(log_err(&tmp))?;
        fs::rename(&tmp, path).map_err(log_err(path))?;
    }
    let report = aggregate(&records);
    Ok(EvalOutcome {
        records,
        report,
        resumed,
    })
}
