use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diff::{diff_stats, DiffStats};
use crate::model::{EditMode, SearchTrace};

/// One line of the per-iteration summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub iteration: usize,
    pub mode: EditMode,
    pub winner_id: String,
    pub reverted: bool,
    pub incumbent_score: Option<f64>,
    pub winner_score: Option<f64>,
    /// Winner against the incumbent it replaced.
    pub diff: DiffStats,
}

pub fn summary_rows(trace: &SearchTrace) -> Vec<SummaryRow> {
    let mut prev = trace.initial.source();
    trace
        .iterations
        .iter()
        .map(|it| {
            let row = SummaryRow {
                iteration: it.index,
                mode: it.mode,
                winner_id: it.winner_id.clone(),
                reverted: it.reverted,
                incumbent_score: it.incumbent_score,
                winner_score: it.winner_score,
                diff: diff_stats(prev, it.winner.source()),
            };
            prev = it.winner.source();
            row
        })
        .collect()
}

/// Edit sizes (changed characters) of every successful candidate against
/// its incumbent, split by mode: `(tweak, leap)`.
pub fn edit_sizes(trace: &SearchTrace) -> (Vec<usize>, Vec<usize>) {
    let mut prev = trace.initial.source();
    let (mut tweak, mut leap) = (Vec::new(), Vec::new());
    for it in &trace.iterations {
        for c in it.candidates.iter().filter(|c| c.error.is_none()) {
            let n = diff_stats(prev, c.program.source()).chars_changed();
            match it.mode {
                EditMode::Tweak => tweak.push(n),
                EditMode::Leap => leap.push(n),
            }
        }
        prev = it.winner.source();
    }
    (tweak, leap)
}

/// Lower median; `None` for an empty slice.
pub fn median(values: &[usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

fn fmt_score(s: Option<f64>) -> String {
    s.map_or_else(|| "-".into(), |s| format!("{s:.6}"))
}

pub fn summary_markdown(trace: &SearchTrace) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Refinement summary\n");
    let _ = writeln!(
        md,
        "depth {} x branch {}, seed {}; {} generator calls ({} retries), {} evaluator queries, {} executor runs{}\n",
        trace.config.depth,
        trace.config.branch,
        trace.config.seed,
        trace.generator_calls,
        trace.retry_calls,
        trace.evaluator_queries,
        trace.executor_runs,
        if trace.truncated { " (truncated)" } else { "" },
    );
    let _ = writeln!(md, "initial score: {}\n", fmt_score(trace.initial_score));
    let _ = writeln!(
        md,
        "| iter | mode | winner | reverted | incumbent score | winner score | +lines | -lines | +chars | -chars |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|---|---|---|");
    for r in summary_rows(trace) {
        let _ = writeln!(
            md,
            "| {} | {} | `{}` | {} | {} | {} | {} | {} | {} | {} |",
            r.iteration,
            r.mode.as_str(),
            r.winner_id,
            if r.reverted { "yes" } else { "no" },
            fmt_score(r.incumbent_score),
            fmt_score(r.winner_score),
            r.diff.lines_added,
            r.diff.lines_deleted,
            r.diff.chars_added,
            r.diff.chars_deleted,
        );
    }
    let (tweak, leap) = edit_sizes(trace);
    let med = |v: &[usize]| median(v).map_or_else(|| "-".into(), |m| m.to_string());
    let _ = writeln!(
        md,
        "\nmedian candidate edit size (changed chars): tweak {}, leap {}",
        med(&tweak),
        med(&leap)
    );
    md
}

pub fn gallery_markdown(trace: &SearchTrace) -> String {
    let mut md = String::from("# Gallery\n\n![initial](initial.png)\n");
    for it in &trace.iterations {
        let _ = writeln!(md, "\n## Iteration {} ({})\n", it.index, it.mode.as_str());
        for c in &it.candidates {
            match &c.image {
                Some(img) => {
                    let _ = writeln!(md, "![slot {}]({img})", c.slot);
                }
                None => {
                    let _ = writeln!(md, "slot {}: dropped", c.slot);
                }
            }
        }
        if let Some(w) = &it.winner_image {
            let tag = if it.reverted { " (incumbent kept)" } else { "" };
            let _ = writeln!(md, "\nwinner{tag}: ![winner]({w})");
        }
    }
    md.push_str("\n## Final\n\n![final](final.png)\n");
    md
}

/// Writes `summary.md` and `gallery.md` into `dir`. Image links resolve once
/// the trace has been stored with [`crate::engine::write_run_dir`].
pub fn report(trace: &SearchTrace, dir: &Path) -> io::Result<Vec<SummaryRow>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.md"), summary_markdown(trace))?;
    fs::write(dir.join("gallery.md"), gallery_markdown(trace))?;
    Ok(summary_rows(trace))
}
