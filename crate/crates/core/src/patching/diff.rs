//! Line-level unified diff (Myers' O(ND) algorithm).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

pub const DEFAULT_CONTEXT_LINES: usize = 3;

const NO_NEWLINE: &str = "\\ No newline at end of file";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Equal(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// Shortest edit script between `a` and `b` as a sequence of line ops.
fn myers(a: &[&str], b: &[&str]) -> Vec<Op> {
    let n = a.len() as isize;
    let m = b.len() as isize;
    let max = (n + m) as usize;
    let offset = max as isize + 1;
    let mut v = vec![0isize; 2 * max + 3];
    let mut trace: Vec<Vec<isize>> = Vec::new();

    'outer: for d in 0..=max as isize {
        trace.push(v.clone());
        let mut k = -d;
        while k <= d {
            let idx = (k + offset) as usize;
            let mut x = if k == -d || (k != d && v[idx - 1] < v[idx + 1]) {
                v[idx + 1]
            } else {
                v[idx - 1] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx] = x;
            if x >= n && y >= m {
                break 'outer;
            }
            k += 2;
        }
    }

    // Walk the trace backwards to recover the path.
    let mut ops = Vec::new();
    let (mut x, mut y) = (n, m);
    for d in (0..trace.len() as isize).rev() {
        let v = &trace[d as usize];
        let k = x - y;
        let prev_k = if k == -d || (k != d && v[(k - 1 + offset) as usize] < v[(k + 1 + offset) as usize]) {
            k + 1
        } else {
            k - 1
        };
        let prev_x = v[(prev_k + offset) as usize];
        let prev_y = prev_x - prev_k;
        while x > prev_x && y > prev_y {
            x -= 1;
            y -= 1;
            ops.push(Op::Equal(x as usize, y as usize));
        }
        if d > 0 {
            if x == prev_x {
                ops.push(Op::Insert(prev_y as usize));
            } else {
                ops.push(Op::Delete(prev_x as usize));
            }
        }
        x = prev_x;
        y = prev_y;
    }
    ops.reverse();
    ops
}

fn push_line(out: &mut String, tag: char, line: &str) {
    out.push(tag);
    match line.strip_suffix('\n') {
        Some(body) => {
            out.push_str(body);
            out.push('\n');
        }
        None => {
            out.push_str(line);
            out.push('\n');
            out.push_str(NO_NEWLINE);
            out.push('\n');
        }
    }
}

fn range(start: usize, count: usize) -> String {
    // An empty range names the line before it.
    let first = if count == 0 { start } else { start + 1 };
    format!("{first},{count}")
}

/// Unified diff of `old` against `new` with `a/`/`b/` path prefixes. Lines
/// keep their own content (including any `\r`); hunks use LF. Equal inputs
/// give an empty string.
pub fn unified_diff(old: &str, new: &str, path: &str, context: usize) -> String {
    if old == new {
        return String::new();
    }
    let a: Vec<&str> = old.split_inclusive('\n').collect();
    let b: Vec<&str> = new.split_inclusive('\n').collect();

    // Common head and tail are trimmed before running the O(ND) search.
    let head = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let tail = a[head..]
        .iter()
        .rev()
        .zip(b[head..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();

    let mut ops: Vec<Op> = (0..head).map(|i| Op::Equal(i, i)).collect();
    ops.extend(myers(&a[head..a.len() - tail], &b[head..b.len() - tail]).into_iter().map(|op| match op {
        Op::Equal(i, j) => Op::Equal(i + head, j + head),
        Op::Delete(i) => Op::Delete(i + head),
        Op::Insert(j) => Op::Insert(j + head),
    }));
    ops.extend((0..tail).map(|t| Op::Equal(a.len() - tail + t, b.len() - tail + t)));

    // Group changed ops into hunks, merging when separated by <= 2*context.
    let changed: Vec<usize> = ops
        .iter()
        .enumerate()
        .filter(|(_, op)| !matches!(op, Op::Equal(..)))
        .map(|(i, _)| i)
        .collect();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &i in &changed {
        match groups.last_mut() {
            Some((_, end)) if i - *end <= 2 * context + 1 => *end = i,
            _ => groups.push((i, i)),
        }
    }

    let mut out = String::new();
    let _ = write!(out, "--- a/{path}\n+++ b/{path}\n");
    for (first, last) in groups {
        let lo = first.saturating_sub(context);
        let hi = (last + context).min(ops.len() - 1);
        let slice = &ops[lo..=hi];

        let (mut old_start, mut new_start) = (None, None);
        let (mut old_count, mut new_count) = (0, 0);
        // Position of the hunk when one side is empty.
        let (mut old_pos, mut new_pos) = match ops[lo] {
            Op::Equal(i, j) => (i, j),
            Op::Delete(i) => (i, ops[..lo].iter().filter(|o| !matches!(o, Op::Delete(_))).count()),
            Op::Insert(j) => (ops[..lo].iter().filter(|o| !matches!(o, Op::Insert(_))).count(), j),
        };
        let mut body = String::new();
        for op in slice {
            match *op {
                Op::Equal(i, j) => {
                    old_start.get_or_insert(i);
                    new_start.get_or_insert(j);
                    old_count += 1;
                    new_count += 1;
                    old_pos = i + 1;
                    new_pos = j + 1;
                    push_line(&mut body, ' ', a[i]);
                }
                Op::Delete(i) => {
                    old_start.get_or_insert(i);
                    old_count += 1;
                    old_pos = i + 1;
                    push_line(&mut body, '-', a[i]);
                }
                Op::Insert(j) => {
                    new_start.get_or_insert(j);
                    new_count += 1;
                    new_pos = j + 1;
                    push_line(&mut body, '+', b[j]);
                }
            }
        }
        let old_start = old_start.unwrap_or(old_pos);
        let new_start = new_start.unwrap_or(new_pos);
        let _ = writeln!(
            out,
            "@@ -{} +{} @@",
            range(old_start, old_count),
            range(new_start, new_count)
        );
        out.push_str(&body);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line_change() {
        let old = "1\n2\n3\n4\n5\n6\n7\n8\n9\n";
        let new = "1\n2\n3\n4\nFIVE\n6\n7\n8\n9\n";
        assert_eq!(
            unified_diff(old, new, "f", 3),
            "--- a/f\n+++ b/f\n@@ -2,7 +2,7 @@\n 2\n 3\n 4\n-5\n+FIVE\n 6\n 7\n 8\n"
        );
    }

    #[test]
    fn insertion_into_empty_file() {
        assert_eq!(unified_diff("", "a\n", "f", 3), "--- a/f\n+++ b/f\n@@ -0,0 +1,1 @@\n+a\n");
    }

    #[test]
    fn missing_trailing_newline() {
        let d = unified_diff("a\nb", "a\nc", "f", 3);
        assert_eq!(
            d,
            "--- a/f\n+++ b/f\n@@ -1,2 +1,2 @@\n a\n-b\n\\ No newline at end of file\n+c\n\\ No newline at end of file\n"
        );
    }

    #[test]
    fn distant_changes_make_two_hunks() {
        let old: String = (0..30).map(|i| format!("l{i}\n")).collect();
        let new = old.replace("l3\n", "x\n").replace("l25\n", "y\n");
        let d = unified_diff(&old, &new, "f", 3);
        assert_eq!(d.matches("@@ -").count(), 2);
    }

    #[test]
    fn myers_script_reconstructs_both_sides() {
        let a = ["a\n", "b\n", "c\n", "a\n", "b\n", "b\n", "a\n"];
        let b = ["c\n", "b\n", "a\n", "b\n", "a\n", "c\n"];
        let ops = myers(&a, &b);
        let edits = ops.iter().filter(|o| !matches!(o, Op::Equal(..))).count();
        assert_eq!(edits, 5);
        let rebuilt_a: Vec<&str> = ops
            .iter()
            .filter_map(|o| match o {
                Op::Equal(i, _) | Op::Delete(i) => Some(a[*i]),
                Op::Insert(_) => None,
            })
            .collect();
        let rebuilt_b: Vec<&str> = ops
            .iter()
            .filter_map(|o| match o {
                Op::Equal(_, j) | Op::Insert(j) => Some(b[*j]),
                Op::Delete(_) => None,
            })
            .collect();
        assert_eq!(rebuilt_a, a);
        assert_eq!(rebuilt_b, b);
    }
}
