use serde::{Deserialize, Serialize};

/// Line-level edit size between two program texts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffStats {
    pub lines_added: usize,
    pub lines_deleted: usize,
    /// Characters on added lines, newlines excluded.
    pub chars_added: usize,
    /// Characters on deleted lines, newlines excluded.
    pub chars_deleted: usize,
}

impl DiffStats {
    pub fn lines_changed(&self) -> usize {
        self.lines_added + self.lines_deleted
    }

    pub fn chars_changed(&self) -> usize {
        self.chars_added + self.chars_deleted
    }
}

/// Diffs `prev` against `next` with a longest common subsequence over lines.
///
/// Lines not in the common subsequence count as deleted (from `prev`) or
/// added (in `next`). Among equally long subsequences the one keeping the
/// most characters is chosen, so character counts are well defined. Lines
/// are split as by [`str::lines`]; characters are Unicode scalar values.
pub fn diff_stats(prev: &str, next: &str) -> DiffStats {
    let a: Vec<&str> = prev.lines().collect();
    let b: Vec<&str> = next.lines().collect();
    let len = |s: &str| s.chars().count();

    // dp[i][j] = best (lines, chars) kept between a[i..] and b[j..]
    let w = b.len() + 1;
    let mut dp = vec![(0usize, 0usize); (a.len() + 1) * w];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            let mut best = dp[(i + 1) * w + j].max(dp[i * w + j + 1]);
            if a[i] == b[j] {
                let (l, c) = dp[(i + 1) * w + j + 1];
                best = best.max((l + 1, c + len(a[i])));
            }
            dp[i * w + j] = best;
        }
    }
    let (kept_lines, kept_chars) = dp[0];
    let total_a: usize = a.iter().map(|s| len(s)).sum();
    let total_b: usize = b.iter().map(|s| len(s)).sum();
    DiffStats {
        lines_added: b.len() - kept_lines,
        lines_deleted: a.len() - kept_lines,
        chars_added: total_b - kept_chars,
        chars_deleted: total_a - kept_chars,
    }
}
