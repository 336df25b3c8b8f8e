use serde::{Deserialize, Serialize};

use super::{EditMode, Program, SearchConfig, VisualState};
use crate::executor::ExecError;

/// A realized edit: the program plus either its render or the last error.
#[derive(Debug, Clone, PartialEq)]
pub struct EditCandidate {
    pub program: Program,
    pub outcome: Result<VisualState, ExecError>,
    pub attempts: u32,
}

impl EditCandidate {
    pub fn state(&self) -> Option<&VisualState> {
        self.outcome.as_ref().ok()
    }

    pub fn error(&self) -> Option<&ExecError> {
        self.outcome.as_ref().err()
    }

    pub fn is_dropped(&self) -> bool {
        self.outcome.is_err()
    }
}

/// Serialized view of one candidate slot in an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub slot: usize,
    pub program: Program,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ExecError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Relative PNG path inside the run directory, once written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(skip)]
    pub state: Option<VisualState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub index: usize,
    pub mode: EditMode,
    pub incumbent_id: String,
    pub candidates: Vec<CandidateRecord>,
    pub winner_id: String,
    pub winner: Program,
    /// The incumbent won (or nothing else was available).
    pub reverted: bool,
    /// The pool was empty; the incumbent was kept without a tournament.
    pub failed: bool,
    pub pool_size: usize,
    pub evaluator_queries: u64,
    pub tournament_rounds: u32,
    pub generator_calls: u64,
    pub retry_calls: u64,
    pub executor_runs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incumbent_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winner_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winner_image: Option<String>,
    #[serde(skip)]
    pub winner_state: Option<VisualState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub config: SearchConfig,
    pub initial: Program,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_score: Option<f64>,
    pub iterations: Vec<IterationRecord>,
    pub generator_calls: u64,
    pub retry_calls: u64,
    pub evaluator_queries: u64,
    pub executor_runs: u64,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_reason: Option<String>,
    pub final_program_id: String,
    pub imagined_images: usize,
    #[serde(skip)]
    pub initial_state: Option<VisualState>,
}

impl SearchTrace {
    /// Incumbent score before the run followed by the score after every
    /// iteration. Empty unless the evaluator exposes scores.
    pub fn score_sequence(&self) -> Vec<f64> {
        let Some(first) = self.initial_score else {
            return Vec::new();
        };
        std::iter::once(first)
            .chain(self.iterations.iter().filter_map(|r| r.winner_score))
            .collect()
    }

    pub fn final_score(&self) -> Option<f64> {
        self.iterations
            .last()
            .and_then(|r| r.winner_score)
            .or(self.initial_score)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// One full inner refinement of a single domain inside a multi-program run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubRefinement {
    pub round: usize,
    pub domain_index: usize,
    pub trace: SearchTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTrace {
    pub rounds: usize,
    pub sub_refinements: Vec<SubRefinement>,
    pub generator_calls: u64,
    pub retry_calls: u64,
    pub evaluator_queries: u64,
    pub executor_runs: u64,
    pub final_program_ids: Vec<String>,
    pub imagined_images: usize,
}
