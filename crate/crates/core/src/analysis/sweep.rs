use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{refine, Backends, RefineOptions};
use crate::model::{EditMode, Intent, Program, SearchConfig};
use crate::par::par_map;

/// The task every sweep row runs.
#[derive(Debug, Clone)]
pub struct SweepTask {
    pub program: Program,
    pub intent: Intent,
    /// Seed, retries, flags and budget shared by every row; depth, branch
    /// and schedule are overwritten per row.
    pub base: SearchConfig,
    /// Restrict every iteration to one mode; `None` alternates.
    pub mode: Option<EditMode>,
    pub options: RefineOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub branch: usize,
    pub initial_score: Option<f64>,
    pub final_score: Option<f64>,
    pub generator_calls: u64,
    pub evaluator_queries: u64,
    pub executor_runs: u64,
    pub final_program_id: Option<String>,
    pub error: Option<String>,
}

/// All `(d, b)` with `d × b = total`, in ascending `d`.
pub fn factorizations(total: usize) -> Vec<(usize, usize)> {
    (1..=total).filter(|d| total % d == 0).map(|d| (d, total / d)).collect()
}

/// Runs one refinement per factorization of `total`. A failing row records
/// its error and the sweep continues. Up to `max_parallel` rows run at once.
pub fn sweep_dimensions(
    total: usize,
    task: &SweepTask,
    backends: &Backends<'_>,
    max_parallel: usize,
) -> Vec<SweepRow> {
    let dims = factorizations(total);
    par_map(dims.len(), max_parallel, |k| {
        let (depth, branch) = dims[k];
        let mut cfg = task.base.clone();
        cfg.depth = depth;
        cfg.branch = branch;
        cfg = cfg.with_schedule(task.mode);
        match refine(&cfg, &task.program, &task.intent, backends, &task.options) {
            Ok(out) => SweepRow {
                depth,
                branch,
                initial_score: out.trace.initial_score,
                final_score: out.trace.final_score(),
                generator_calls: out.trace.generator_calls,
                evaluator_queries: out.trace.evaluator_queries,
                executor_runs: out.trace.executor_runs,
                final_program_id: Some(out.best.id().to_string()),
                error: None,
            },
            Err(e) => SweepRow {
                depth,
                branch,
                initial_score: None,
                final_score: None,
                generator_calls: 0,
                evaluator_queries: 0,
                executor_runs: 0,
                final_program_id: None,
                error: Some(e.to_string()),
            },
        }
    })
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn write_sweep_json(path: &Path, rows: &[SweepRow]) -> io::Result<()> {
    let json = serde_json::to_string_pretty(rows).map_err(io::Error::other)?;
    std::fs::write(path, json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_tables() {
        assert_eq!(
            factorizations(32),
            [(1, 32), (2, 16), (4, 8), (8, 4), (16, 2), (32, 1)]
        );
        assert_eq!(factorizations(1), [(1, 1)]);
        assert_eq!(factorizations(12).len(), 6);
    }
}
