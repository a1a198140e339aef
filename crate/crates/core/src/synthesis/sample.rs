use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{extract_blocks_with, BlockCategory, BlockSpan, HeuristicProvider, SyntaxProvider};
use super::SynthError;
use crate::format::{Marker, RegionLimit, SriBlock};
use crate::prompting::{mark_task, CompletionTask, MarkerIndent};
use crate::text::{fnv1a, leading_whitespace, split_lines};

/// One file of the input corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub path: String,
    pub content: String,
    #[serde(default)]
    pub repo: String,
    #[serde(default)]
    pub stars: u64,
}

/// Relative weights for function_body, logic_block, random_span and
/// single_line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct RatioSpec([u32; 4]);

impl RatioSpec {
    pub fn new(weights: [u32; 4]) -> Result<Self, SynthError> {
        if weights.iter().all(|&w| w == 0) {
            return Err(SynthError::ZeroRatio);
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> [u32; 4] {
        self.0
    }

    pub fn weight(&self, category: BlockCategory) -> u32 {
        self.0[category.index()]
    }
}

impl Default for RatioSpec {
    fn default() -> Self {
        Self([2, 1, 1, 1])
    }
}

impl TryFrom<[u32; 4]> for RatioSpec {
    type Error = SynthError;

    fn try_from(value: [u32; 4]) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<RatioSpec> for [u32; 4] {
    fn from(r: RatioSpec) -> Self {
        r.0
    }
}

impl FromStr for RatioSpec {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SynthError::BadRatio(s.to_string());
        let parts: Vec<&str> = s.split([':', ',']).map(str::trim).collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut w = [0u32; 4];
        for (slot, p) in w.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| bad())?;
        }
        Self::new(w)
    }
}

impl fmt::Display for RatioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "{a}:{b}:{c}:{d}")
    }
}

/// Splits `count` into integer quotas proportional to `weights` by the
/// largest-remainder method. Ties go to the earlier category.
pub fn largest_remainder(weights: [u32; 4], count: usize) -> [usize; 4] {
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    if total == 0 {
        return [0; 4];
    }
    let count = count as u64;
    let mut quotas = [0usize; 4];
    let mut rems = [(0u64, 0usize); 4];
    let mut assigned = 0u64;
    for (i, &w) in weights.iter().enumerate() {
        let exact = count * w as u64;
        quotas[i] = (exact / total) as usize;
        assigned += exact / total;
        rems[i] = (exact % total, i);
    }
    // Sort by remainder descending, then by index ascending.
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take((count - assigned) as usize) {
        quotas[i] += 1;
    }
    quotas
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SriSample {
    pub task: CompletionTask,
    pub marked_source: String,
    pub ground_truth: SriBlock,
    pub category: BlockCategory,
    #[serde(default)]
    pub repo: String,
    #[serde(default)]
    pub stars: u64,
    /// 1-based, inclusive lines of the middle in the original file.
    #[serde(default)]
    pub start_line: usize,
    #[serde(default)]
    pub end_line: usize,
}

impl SriSample {
    pub fn original_source(&self) -> String {
        self.task.source()
    }
}

/// Cuts `source` around the lines of `span`. The first middle line's
/// indentation stays in the prefix so the marker sits where the code starts.
pub fn span_task(source: &str, path: &str, span: &BlockSpan) -> Result<CompletionTask, SynthError> {
    let lines = split_lines(source);
    let (s, e) = (span.start_line, span.end_line);
    if s == 0 || s > e || e > lines.len() {
        return Err(SynthError::SpanOutOfRange { start: s, end: e });
    }
    let first = lines[s - 1];
    let cut = first.start + leading_whitespace(first.text).len();
    let last = lines[e - 1];
    let end = if last.end < source.len() { last.end + 1 } else { last.end };
    let mut task = CompletionTask::new(&source[..cut], &source[cut..end], &source[end..]);
    task.path = path.to_string();
    Ok(task)
}

/// Builds the marked source and the ground-truth block for `task`. The block
/// covers up to `limit` lines on each side of the marker line and rewrites
/// the marker line into the middle.
pub fn make_sri_sample(
    task: &CompletionTask,
    category: BlockCategory,
    limit: RegionLimit,
) -> Result<SriSample, SynthError> {
    if task.middle.trim().is_empty() {
        return Err(SynthError::EmptyMiddle);
    }
    if task.prefix.contains(Marker::TEXT) || task.middle.contains(Marker::TEXT) || task.suffix.contains(Marker::TEXT) {
        return Err(SynthError::MarkerInSource);
    }
    let n = limit.lines_each_side();
    let middle_lines = task.middle.trim_end_matches('\n').split('\n').count();
    if middle_lines > 2 * n {
        return Err(SynthError::WindowOverflow {
            lines: middle_lines,
            max: 2 * n,
        });
    }

    let marked = mark_task(task, MarkerIndent::Cursor);
    let lines = split_lines(&marked.text);
    let k = marked.marker_line();
    let lo = k.saturating_sub(n);
    let hi = (k + n).min(lines.len() - 1);
    let ss = lines[lo].start;
    // a trailing `\r` belongs to the line terminator, which stays outside
    let last = lines[hi];
    let se = (last.start + last.text.strip_suffix('\r').unwrap_or(last.text).len()).max(marked.suffix_start);

    let search = &marked.text[ss..se];
    let mut replace = String::with_capacity(se - ss + task.middle.len());
    replace.push_str(&task.prefix[ss..]);
    replace.push_str(&task.middle);
    replace.push_str(&task.suffix[..se - marked.suffix_start]);

    Ok(SriSample {
        task: task.clone(),
        marked_source: marked.text.clone(),
        ground_truth: SriBlock::new(search, replace).fenced(true),
        category,
        repo: String::new(),
        stars: 0,
        start_line: 0,
        end_line: 0,
    })
}

struct FileCandidates {
    file: usize,
    by_category: [Vec<BlockSpan>; 4],
}

fn candidates(
    corpus: &[CorpusFile],
    limit: RegionLimit,
    seed: u64,
    provider: &dyn SyntaxProvider,
) -> Vec<FileCandidates> {
    let max_lines = 2 * limit.lines_each_side();
    corpus
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.content.contains(Marker::TEXT))
        .map(|(i, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(f.path.as_bytes()) ^ fnv1a(f.content.as_bytes()));
            let spans = match extract_blocks_with(&f.content, &f.path, provider, limit, &mut rng) {
                Ok(spans) => spans,
                Err(SynthError::UnsupportedLanguage { fallback, .. }) => fallback,
                Err(_) => Vec::new(),
            };
            let mut by_category: [Vec<BlockSpan>; 4] = Default::default();
            for mut span in spans {
                if span.end_line - span.start_line < max_lines {
                    span.source_path = f.path.clone();
                    by_category[span.category.index()].push(span);
                }
            }
            FileCandidates { file: i, by_category }
        })
        .collect()
}

/// Draws `count` samples with category quotas from `ratio`. Files are chosen
/// with probability proportional to stars + 1 among those offering the
/// category, and spans uniformly within the file, with replacement. Output
/// is ordered by (repo, path, span, category) and numbered in that order.
pub fn sample_tasks(
    corpus: &[CorpusFile],
    ratio: RatioSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<SriSample>, SynthError> {
    sample_tasks_with(corpus, ratio, count, seed, RegionLimit::DEFAULT, &HeuristicProvider)
}

pub fn sample_tasks_with(
    corpus: &[CorpusFile],
    ratio: RatioSpec,
    count: usize,
    seed: u64,
    limit: RegionLimit,
    provider: &dyn SyntaxProvider,
) -> Result<Vec<SriSample>, SynthError> {
    let picks = sample_spans(corpus, ratio, count, seed, limit, provider)?;
    materialize(corpus, &picks, 0, count, limit)
}

/// A chosen span and the index of the corpus file it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanPick {
    pub file: usize,
    pub span: BlockSpan,
}

/// The sampling half of [`sample_tasks_with`]: picks spans in canonical
/// order without building samples.
pub fn sample_spans(
    corpus: &[CorpusFile],
    ratio: RatioSpec,
    count: usize,
    seed: u64,
    limit: RegionLimit,
    provider: &dyn SyntaxProvider,
) -> Result<Vec<SpanPick>, SynthError> {
    if corpus.is_empty() {
        return Err(SynthError::EmptyCorpus);
    }
    if count == 0 {
        return Err(SynthError::ZeroCount);
    }
    let pool = candidates(corpus, limit, seed, provider);
    let quotas = largest_remainder(ratio.weights(), count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<SpanPick> = Vec::with_capacity(count);

    for category in BlockCategory::ALL {
        let quota = quotas[category.index()];
        if quota == 0 {
            continue;
        }
        let offering: Vec<&FileCandidates> =
            pool.iter().filter(|c| !c.by_category[category.index()].is_empty()).collect();
        if offering.is_empty() {
            return Err(SynthError::InsufficientCorpus(category));
        }
        let weights: Vec<u64> = offering.iter().map(|c| corpus[c.file].stars.saturating_add(1)).collect();
        let dist = WeightedIndex::new(&weights).map_err(|_| SynthError::InsufficientCorpus(category))?;
        for _ in 0..quota {
            let owner = offering[dist.sample(&mut rng)];
            let spans = &owner.by_category[category.index()];
            picks.push(SpanPick {
                file: owner.file,
                span: spans[rng.random_range(0..spans.len())].clone(),
            });
        }
    }

    let key = |p: &SpanPick| {
        let f = &corpus[p.file];
        (f.repo.as_str(), f.path.as_str(), p.span.start_line, p.span.end_line, p.span.category)
    };
    picks.sort_by(|a, b| key(a).cmp(&key(b)));
    Ok(picks)
}

/// Builds samples for `picks`, numbering them from `first_id`. `total` fixes
/// the zero-padded id width so chunks built separately agree.
pub fn materialize(
    corpus: &[CorpusFile],
    picks: &[SpanPick],
    first_id: usize,
    total: usize,
    limit: RegionLimit,
) -> Result<Vec<SriSample>, SynthError> {
    let width = format!("{}", total.saturating_sub(1)).len().max(6);
    picks
        .iter()
        .enumerate()
        .map(|(n, pick)| {
            let file = &corpus[pick.file];
            let span = &pick.span;
            let mut task = span_task(&file.content, &file.path, span)?;
            task.task_id = format!("{:0width$}", first_id + n);
            let mut sample = make_sri_sample(&task, span.category, limit)?;
            sample.repo = file.repo.clone();
            sample.stars = file.stars;
            sample.start_line = span.start_line;
            sample.end_line = span.end_line;
            Ok(sample)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::extract_replace_code;
    use crate::format::validate_region;
    use crate::patching::{apply_sri, AnchorPolicy};
    use alloc::vec;

    fn long_file(n: usize) -> String {
        (0..n).map(|i| format!("let v{i} = {i};\n")).collect()
    }

    fn span(category: BlockCategory, s: usize, e: usize) -> BlockSpan {
        BlockSpan {
            category,
            start_line: s,
            end_line: e,
            source_path: String::new(),
        }
    }

    #[test]
    fn largest_remainder_matches_hand_counts() {
        assert_eq!(largest_remainder([2, 1, 1, 1], 5), [2, 1, 1, 1]);
        assert_eq!(largest_remainder([2, 1, 1, 1], 10000), [4000, 2000, 2000, 2000]);
        // 2.8, 1.4, 1.4, 1.4: floors sum to 5, the two spares go to indices 0 and 1
        assert_eq!(largest_remainder([2, 1, 1, 1], 7), [3, 2, 1, 1]);
        // 1.2, 0.6, 0.6, 0.6
        assert_eq!(largest_remainder([2, 1, 1, 1], 3), [1, 1, 1, 0]);
        assert_eq!(largest_remainder([0, 0, 1, 0], 4), [0, 0, 4, 0]);
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!("2:1:1:1".parse::<RatioSpec>().unwrap(), RatioSpec::default());
        assert_eq!("0:0:0:0".parse::<RatioSpec>(), Err(SynthError::ZeroRatio));
        assert!(matches!("2:1".parse::<RatioSpec>(), Err(SynthError::BadRatio(_))));
        assert_eq!(RatioSpec::default().to_string(), "2:1:1:1");
    }

    #[test]
    fn one_line_middle_has_21_line_window() {
        let src = long_file(40);
        let task = span_task(&src, "a.rs", &span(BlockCategory::SingleLine, 20, 20)).unwrap();
        let s = make_sri_sample(&task, BlockCategory::SingleLine, RegionLimit::DEFAULT).unwrap();
        assert_eq!(s.ground_truth.search_text().split('\n').count(), 21);
        assert!(validate_region(&s.ground_truth, RegionLimit::DEFAULT).passed());
    }

    #[test]
    fn window_truncated_at_file_start() {
        let src = long_file(40);
        let task = span_task(&src, "a.rs", &span(BlockCategory::SingleLine, 3, 3)).unwrap();
        let s = make_sri_sample(&task, BlockCategory::SingleLine, RegionLimit::DEFAULT).unwrap();
        let r = validate_region(&s.ground_truth, RegionLimit::DEFAULT);
        assert_eq!((r.lines_above, r.lines_below), (2, 10));
    }

    #[test]
    fn ground_truth_round_trips_and_extracts() {
        let src = "fn f() {\n    let a = 1;\n    if a > 0 {\n        g(a);\n    }\n}\n";
        for (s, e) in [(1, 1), (2, 2), (3, 5), (4, 4), (6, 6), (2, 5)] {
            let task = span_task(src, "a.rs", &span(BlockCategory::RandomSpan, s, e)).unwrap();
            let sample = make_sri_sample(&task, BlockCategory::RandomSpan, RegionLimit::DEFAULT).unwrap();
            let applied = apply_sri(&sample.marked_source, &sample.ground_truth, AnchorPolicy::Unique).unwrap();
            assert_eq!(applied, src, "{s}..{e}");
            let got = extract_replace_code(&sample.ground_truth.render()).middle;
            assert_eq!(got, task.middle.trim_matches('\n'), "{s}..{e}");
        }
    }

    #[test]
    fn crlf_round_trip() {
        let src: String = (0..30).map(|i| format!("f{i}();\r\n")).collect();
        for line in [1, 3, 15, 30] {
            let task = span_task(&src, "a.c", &span(BlockCategory::SingleLine, line, line)).unwrap();
            let sample = make_sri_sample(&task, BlockCategory::SingleLine, RegionLimit::DEFAULT).unwrap();
            let applied = apply_sri(&sample.marked_source, &sample.ground_truth, AnchorPolicy::Unique).unwrap();
            assert_eq!(applied, src, "line {line}");
        }
    }

    #[test]
    fn oversized_middle_is_rejected() {
        let src = long_file(60);
        let task = span_task(&src, "a.rs", &span(BlockCategory::RandomSpan, 5, 30)).unwrap();
        assert_eq!(
            make_sri_sample(&task, BlockCategory::RandomSpan, RegionLimit::DEFAULT),
            Err(SynthError::WindowOverflow { lines: 26, max: 20 })
        );
    }

    fn corpus() -> Vec<CorpusFile> {
        let rs = "fn main() {\n    let mut t = 0;\n    for i in 0..3 {\n        t += i;\n    }\n    println!(\"{t}\");\n}\n";
        let py = "def f(x):\n    if x:\n        return 1\n    return 2\n\nprint(f(0))\n";
        vec![
            CorpusFile {
                path: "a/main.rs".into(),
                content: rs.into(),
                repo: "org/a".into(),
                stars: 10,
            },
            CorpusFile {
                path: "b/f.py".into(),
                content: py.into(),
                repo: "org/b".into(),
                stars: 0,
            },
        ]
    }

    #[test]
    fn small_count_follows_rounding() {
        let out = sample_tasks(&corpus(), RatioSpec::default(), 5, 7).unwrap();
        let mut counts = [0; 4];
        for s in &out {
            counts[s.category.index()] += 1;
        }
        assert_eq!(counts, [2, 1, 1, 1]);
    }

    #[test]
    fn same_seed_same_output() {
        let a = sample_tasks(&corpus(), RatioSpec::default(), 50, 3).unwrap();
        let b = sample_tasks(&corpus(), RatioSpec::default(), 50, 3).unwrap();
        assert_eq!(a, b);
        let ids: Vec<&str> = a.iter().map(|s| s.task.task_id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn missing_category_is_insufficient() {
        let flat = vec![CorpusFile {
            path: "x.rs".into(),
            content: "let a = 1;\nlet b = 2;\n".into(),
            repo: String::new(),
            stars: 0,
        }];
        assert_eq!(
            sample_tasks(&flat, RatioSpec::default(), 10, 0),
            Err(SynthError::InsufficientCorpus(BlockCategory::FunctionBody))
        );
        sample_tasks(&flat, RatioSpec::new([0, 0, 1, 1]).unwrap(), 10, 0).unwrap();
    }
}
