//! The `sri` command line.
//!
//! Machine output is line-delimited JSON on stdout or to `--output`; tables
//! and summaries go to stderr behind `--pretty`. Exit codes: 0 success, 1
//! some items failed, 2 configuration or usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sri_core::extraction::extract_replace_code;
use sri_core::format::{parse_sri_block, RegionLimit};
use sri_core::metrics::{aggregate, EvalRecord};
use sri_core::patching::{apply_sri, to_unified_diff, AnchorPolicy, DEFAULT_CONTEXT_LINES};
use sri_core::perturbation::{perturb_window, FlexTask, Operator, DEFAULT_COUNT, DEFAULT_WINDOW};
use sri_core::prompting::{
    build_prompt, trim_context, CompletionTask, ContextBudget, FimSentinels, PromptBundle, PromptOptions, PromptStyle,
};
use sri_core::synthesis::{
    decontaminate, make_sri_sample, materialize, sample_spans, BlockCategory, Denylist, HeuristicProvider, RatioSpec,
    SriSample,
};
use sri_core::text::fnv1a;

use crate::corpus::load_corpus;
use crate::harness::{run_eval, EvalOptions, HttpClient, InferenceConfig, RetryPolicy, API_KEY_ENV};
use crate::jsonl;

#[derive(Debug, Parser)]
#[command(name = "sri", version, about = "Search-and-replace infilling toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build search-and-replace samples from a code corpus
    Synth(SynthArgs),
    /// Inject noise into the lines around each task's marker
    Perturb(PerturbArgs),
    /// Render tasks as prompts in one of the five styles
    Prompt(PromptArgs),
    /// Read a model response on stdin and print the extracted middle
    Extract(ExtractArgs),
    /// Apply a search/replace block to a file
    Apply(ApplyArgs),
    /// Print the unified diff a search/replace block would make
    Diff(DiffArgs),
    /// Evaluate samples against an OpenAI-compatible endpoint
    Eval(EvalArgs),
    /// Aggregate evaluation records into a score report
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Sri,
    NlStandard,
    NlDialogue,
    NlTemplate,
    TokenFim,
}

impl From<StyleArg> for PromptStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Sri => PromptStyle::Sri,
            StyleArg::NlStandard => PromptStyle::NlStandard,
            StyleArg::NlDialogue => PromptStyle::NlDialogue,
            StyleArg::NlTemplate => PromptStyle::NlTemplate,
            StyleArg::TokenFim => PromptStyle::TokenFim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FimPreset {
    Default,
    Qwen,
}

fn parse_limit(s: &str) -> Result<RegionLimit, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    RegionLimit::new(n).map_err(|e| e.to_string())
}

fn parse_ratio(s: &str) -> Result<RatioSpec, String> {
    s.parse().map_err(|e: sri_core::synthesis::SynthError| e.to_string())
}

fn parse_operator(s: &str) -> Result<Operator, String> {
    s.parse().map_err(|e: sri_core::perturbation::PerturbError| e.to_string())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus directory or record file (`{path, content, repo, stars}` per line)
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Category weights for function_body:logic_block:random_span:single_line
    #[arg(long, default_value = "2:1:1:1", value_parser = parse_ratio)]
    pub ratio: RatioSpec,
    /// Context lines allowed on each side of the marker
    #[arg(long, default_value = "10", value_parser = parse_limit)]
    pub limit: RegionLimit,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// JSON file `{"repos": [...], "snippets": [...]}` of evaluation data to exclude
    #[arg(long)]
    pub denylist: Option<PathBuf>,
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Sample or task records
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Perturbed lines per task
    #[arg(long, default_value_t = DEFAULT_COUNT)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated subset of line_scramble, token_transpose, identifier_typo
    #[arg(long, value_delimiter = ',', value_parser = parse_operator)]
    pub operators: Vec<Operator>,
    /// Emit samples rebuilt on the perturbed context instead of perturbation records
    #[arg(long)]
    pub as_samples: bool,
    #[arg(long, default_value = "10", value_parser = parse_limit)]
    pub limit: RegionLimit,
    /// Show perturbed lines between `@` sentinels on stderr
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sri")]
    pub style: StyleArg,
    #[arg(long, default_value = "10", value_parser = parse_limit)]
    pub limit: RegionLimit,
    /// Trim context to this many estimated tokens (4 characters each)
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_enum, default_value = "default")]
    pub fim: FimPreset,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Print the branch taken along with the middle, as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BlockSource {
    /// File holding the block (or a whole model response); stdin when omitted
    #[arg(long, short)]
    pub block: Option<PathBuf>,
    /// On several matches, take the one nearest the marker instead of failing
    #[arg(long)]
    pub nearest_marker: bool,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub source: BlockSource,
    /// Print the unified diff instead of writing the file
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long, default_value_t = DEFAULT_CONTEXT_LINES)]
    pub context: usize,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub source: BlockSource,
    #[arg(long, default_value_t = DEFAULT_CONTEXT_LINES)]
    pub context: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Sample records
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "sri")]
    pub style: StyleArg,
    /// Base URL of the API, e.g. http://localhost:8000/v1
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 256)]
    pub max_tokens: u32,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.0)]
    pub presence_penalty: f64,
    /// Requests in flight at once
    #[arg(long, default_value_t = 8)]
    pub jobs: usize,
    /// Tries per request, including the first
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    #[arg(long, default_value_t = 120)]
    pub timeout: u64,
    #[arg(long, default_value = "10", value_parser = parse_limit)]
    pub limit: RegionLimit,
    /// Append-only record log; finished tasks found here are skipped
    #[arg(long, default_value = "eval_records.jsonl")]
    pub log: PathBuf,
    /// Write the score report here as well as to stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Label for per-benchmark breakdowns
    #[arg(long, default_value = "")]
    pub benchmark: String,
    #[arg(long, value_enum, default_value = "default")]
    pub fim: FimPreset,
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Evaluation records; `-` for stdin
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub pretty: bool,
}

/// What a subcommand achieved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some items failed; the count was reported on stderr.
    Partial(usize),
}

/// Records accepted wherever tasks are read.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TaskRecord {
    Sample(Box<SriSample>),
    Flex(Box<FlexTask>),
    Task(CompletionTask),
}

impl TaskRecord {
    fn task(&self) -> CompletionTask {
        match self {
            TaskRecord::Sample(s) => s.task.clone(),
            TaskRecord::Flex(f) => f.perturbed_task(),
            TaskRecord::Task(t) => t.clone(),
        }
    }

    fn category(&self) -> BlockCategory {
        match self {
            TaskRecord::Sample(s) => s.category,
            _ => BlockCategory::RandomSpan,
        }
    }
}

#[derive(Debug, Serialize)]
struct PromptRecord<'a> {
    task_id: &'a str,
    #[serde(flatten)]
    bundle: PromptBundle,
}

#[derive(Debug, Default, Deserialize)]
struct DenylistFile {
    #[serde(default)]
    repos: Vec<String>,
    #[serde(default)]
    snippets: Vec<String>,
}

fn sentinels(preset: FimPreset) -> FimSentinels {
    match preset {
        FimPreset::Default => FimSentinels::default(),
        FimPreset::Qwen => FimSentinels::qwen(),
    }
}

fn read_stdin() -> Result<String> {
    let mut s = String::new();
    io::stdin().read_to_string(&mut s).context("reading stdin")?;
    Ok(s)
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("sri-tmp");
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))
}

fn synth(args: &SynthArgs) -> Result<Status> {
    if args.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let corpus = load_corpus(&args.input)?;
    let picks = sample_spans(&corpus, args.ratio, args.count, args.seed, args.limit, &HeuristicProvider)?;
    let chunk = picks.len().div_ceil(args.jobs).max(1);
    let parts: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = picks
            .chunks(chunk)
            .enumerate()
            .map(|(i, part)| {
                let corpus = &corpus;
                scope.spawn(move || materialize(corpus, part, i * chunk, args.count, args.limit))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut samples = Vec::with_capacity(picks.len());
    for part in parts {
        samples.extend(part?);
    }

    let mut deny = Denylist::default();
    if let Some(path) = &args.denylist {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: DenylistFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        file.repos.iter().for_each(|r| deny.add_repo(r));
        file.snippets.iter().for_each(|s| deny.add_snippet(s));
    }
    let (samples, report) = decontaminate(samples, &deny);
    jsonl::write_path(args.output.as_deref(), &samples)?;

    if args.pretty {
        let mut counts = [0usize; 4];
        for s in &samples {
            counts[s.category.index()] += 1;
        }
        let mut err = io::stderr().lock();
        for c in BlockCategory::ALL {
            writeln!(err, "{:<14} {:>7}", c.as_str(), counts[c.index()])?;
        }
        writeln!(
            err,
            "kept {}  dropped(repo) {}  dropped(fingerprint) {}",
            report.kept, report.dropped_repo, report.dropped_fingerprint
        )?;
    }
    Ok(Status::Ok)
}

fn perturb(args: &PerturbArgs) -> Result<Status> {
    let records: Vec<TaskRecord> = jsonl::read_path(&args.input)?;
    let ops: Vec<Operator> = if args.operators.is_empty() {
        Operator::ALL.to_vec()
    } else {
        args.operators.clone()
    };
    let mut flex = Vec::new();
    let mut samples = Vec::new();
    let mut failed = 0;
    for rec in &records {
        let task = rec.task();
        // per-task seeds keep results independent of record order
        let seed = args.seed ^ fnv1a(task.task_id.as_bytes());
        match perturb_window(&task, &ops, args.count, args.window, seed) {
            Ok(f) => {
                if args.pretty {
                    eprintln!("== {}\n{}", task.task_id, f.sentinel_view());
                }
                if args.as_samples {
                    match make_sri_sample(&f.perturbed_task(), rec.category(), args.limit) {
                        Ok(mut s) => {
                            if let TaskRecord::Sample(orig) = rec {
                                s.repo = orig.repo.clone();
                                s.stars = orig.stars;
                                s.start_line = orig.start_line;
                                s.end_line = orig.end_line;
                            }
                            samples.push(s);
                        }
                        Err(e) => {
                            failed += 1;
                            eprintln!("{}: {e}", task.task_id);
                        }
                    }
                }
                flex.push(f);
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", task.task_id);
            }
        }
    }
    if args.as_samples {
        jsonl::write_path(args.output.as_deref(), &samples)?;
    } else {
        jsonl::write_path(args.output.as_deref(), &flex)?;
    }
    Ok(if failed == 0 { Status::Ok } else { Status::Partial(failed) })
}

fn prompt(args: &PromptArgs) -> Result<Status> {
    let records: Vec<TaskRecord> = jsonl::read_path(&args.input)?;
    let opts = PromptOptions {
        limit: args.limit,
        sentinels: sentinels(args.fim),
        ..PromptOptions::default()
    };
    let budget = args.budget.map(ContextBudget::new).transpose()?;
    let mut out = Vec::with_capacity(records.len());
    let mut failed = 0;
    let tasks: Vec<CompletionTask> = records.iter().map(TaskRecord::task).collect();
    for task in &tasks {
        let task_for_prompt = match &budget {
            Some(b) => match trim_context(task, b) {
                Ok(t) => t,
                Err(e) => {
                    failed += 1;
                    eprintln!("{}: {e}", task.task_id);
                    continue;
                }
            },
            None => task.clone(),
        };
        out.push(PromptRecord {
            task_id: &task.task_id,
            bundle: build_prompt(&task_for_prompt, args.style.into(), &opts),
        });
    }
    jsonl::write_path(args.output.as_deref(), &out)?;
    Ok(if failed == 0 { Status::Ok } else { Status::Partial(failed) })
}

fn extract(args: &ExtractArgs) -> Result<Status> {
    let text = read_stdin()?;
    let result = extract_replace_code(&text);
    let mut out = io::stdout().lock();
    if args.json {
        serde_json::to_writer(&mut out, &result)?;
        out.write_all(b"\n")?;
    } else if !result.is_parse_failure() {
        out.write_all(result.middle.as_bytes())?;
        if !result.middle.is_empty() {
            out.write_all(b"\n")?;
        }
    }
    if result.is_parse_failure() {
        eprintln!("no replace section found");
        return Ok(Status::Partial(1));
    }
    Ok(Status::Ok)
}

fn load_block(src: &BlockSource) -> Result<sri_core::format::SriBlock> {
    let text = match &src.block {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => read_stdin()?,
    };
    Ok(parse_sri_block(&text)?)
}

fn policy(src: &BlockSource) -> AnchorPolicy {
    if src.nearest_marker {
        AnchorPolicy::NearestMarker
    } else {
        AnchorPolicy::Unique
    }
}

fn diff_label(path: &Path) -> String {
    path.to_string_lossy().trim_start_matches("./").replace('\\', "/")
}

fn apply(args: &ApplyArgs) -> Result<Status> {
    let file = fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let block = load_block(&args.source)?;
    let pol = policy(&args.source);
    if args.dry_run {
        return match to_unified_diff(&file, &block, &diff_label(&args.file), args.context, pol) {
            Ok(d) => {
                io::stdout().lock().write_all(d.as_bytes())?;
                Ok(Status::Ok)
            }
            Err(e) => {
                eprintln!("{}: {e}", args.file.display());
                Ok(Status::Partial(1))
            }
        };
    }
    match apply_sri(&file, &block, pol) {
        Ok(patched) => {
            if patched != file {
                write_atomic(&args.file, &patched)?;
            }
            Ok(Status::Ok)
        }
        Err(e) => {
            eprintln!("{}: {e}", args.file.display());
            Ok(Status::Partial(1))
        }
    }
}

fn diff(args: &DiffArgs) -> Result<Status> {
    let file = fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let block = load_block(&args.source)?;
    match to_unified_diff(&file, &block, &diff_label(&args.file), args.context, policy(&args.source)) {
        Ok(d) => {
            io::stdout().lock().write_all(d.as_bytes())?;
            Ok(Status::Ok)
        }
        Err(e) => {
            eprintln!("{}: {e}", args.file.display());
            Ok(Status::Partial(1))
        }
    }
}

fn eval(args: &EvalArgs) -> Result<Status> {
    let samples: Vec<SriSample> = jsonl::read_path(&args.input)?;
    let mut cfg = InferenceConfig::new(&args.endpoint, &args.model);
    cfg.temperature = args.temperature;
    cfg.max_output_tokens = args.max_tokens;
    cfg.presence_penalty = args.presence_penalty;
    cfg.max_concurrency = args.jobs;
    cfg.retry = RetryPolicy {
        attempts: args.retries,
        backoff_ms: args.backoff_ms,
    };
    cfg.timeout_secs = args.timeout;
    cfg.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
    let client = HttpClient::new(cfg)?;

    let mut opts = EvalOptions::new(args.style.into());
    opts.prompt.limit = args.limit;
    opts.prompt.sentinels = sentinels(args.fim);
    opts.concurrency = args.jobs;
    opts.log_path = Some(args.log.clone());
    opts.benchmark = args.benchmark.clone();

    let outcome = run_eval(&samples, &opts, &client)?;
    let json = serde_json::to_string(&outcome.report)?;
    if let Some(path) = &args.report {
        fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{json}");
    if args.pretty {
        eprint!("{}", outcome.report.to_table());
    }
    let failed = outcome.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} request(s) failed; see the record log");
        return Ok(Status::Partial(failed));
    }
    Ok(Status::Ok)
}

fn score(args: &ScoreArgs) -> Result<Status> {
    let records: Vec<EvalRecord> = jsonl::read_path(&args.input)?;
    let report = aggregate(&records);
    println!("{}", serde_json::to_string(&report)?);
    if args.pretty {
        eprint!("{}", report.to_table());
    }
    Ok(Status::Ok)
}

pub fn dispatch(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Perturb(a) => perturb(a),
        Command::Prompt(a) => prompt(a),
        Command::Extract(a) => extract(a),
        Command::Apply(a) => apply(a),
        Command::Diff(a) => diff(a),
        Command::Eval(a) => eval(a),
        Command::Score(a) => score(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(Status::Ok) => 0,
        Ok(Status::Partial(_)) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults_match_library_defaults() {
        let cli = Cli::try_parse_from(["sri", "synth", "-i", "x"]).unwrap();
        let Command::Synth(a) = cli.command else { panic!() };
        assert_eq!(a.limit, RegionLimit::DEFAULT);
        assert_eq!(a.ratio, RatioSpec::default());
        let cli = Cli::try_parse_from(["sri", "perturb", "-i", "x"]).unwrap();
        let Command::Perturb(a) = cli.command else { panic!() };
        assert_eq!((a.window, a.count), (5, 2));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["sri", "synth", "-i", "x", "--ratio", "1:2"]), 2);
        assert_eq!(run(["sri", "bogus"]), 2);
        assert_eq!(run(["sri", "prompt", "-i", "x", "--limit", "0"]), 2);
    }
}
