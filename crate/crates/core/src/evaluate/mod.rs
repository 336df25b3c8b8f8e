//! Pairwise visual state evaluation and tournament selection.

mod tournament;

pub use tournament::{tournament, TournamentOutcome};

use thiserror::Error;

use crate::backend::{BackendError, ChatClient, Part};
use crate::model::{Intent, Program, VisualState};
use crate::raster::Raster;
use crate::templates::{fill, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub winner: Winner,
    pub rationale: Option<String>,
    /// Backend requests spent, including parse retries.
    pub queries_used: u32,
}

impl Choice {
    fn new(winner: Winner) -> Self {
        Self {
            winner,
            rationale: None,
            queries_used: 1,
        }
    }
}

/// A program with its render, as seen by an evaluator.
#[derive(Debug, Clone, Copy)]
pub struct Contender<'a> {
    pub program: &'a Program,
    pub state: &'a VisualState,
}

pub trait Evaluator: Send + Sync {
    /// Which of two states better matches the intent. Never a tie.
    fn compare(&self, first: Contender<'_>, second: Contender<'_>, intent: &Intent)
        -> Result<Choice, BackendError>;

    /// Optional scalar distance to the goal, lower is better. Only metric
    /// evaluators provide one; it is used for reporting.
    fn score(&self, _state: &VisualState) -> Option<f64> {
        None
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn compare(&self, a: Contender<'_>, b: Contender<'_>, intent: &Intent) -> Result<Choice, BackendError> {
        (**self).compare(a, b, intent)
    }

    fn score(&self, state: &VisualState) -> Option<f64> {
        (**self).score(state)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn compare(&self, a: Contender<'_>, b: Contender<'_>, intent: &Intent) -> Result<Choice, BackendError> {
        (**self).compare(a, b, intent)
    }

    fn score(&self, state: &VisualState) -> Option<f64> {
        (**self).score(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
pub struct DimensionMismatch(pub u32, pub u32, pub u32, pub u32);

/// Mean over pixels and channels of squared differences of values normalized
/// to `[0, 1]`.
pub fn mse(a: &Raster, b: &Raster) -> Result<f64, DimensionMismatch> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    Ok(sum as f64 / (255.0 * 255.0) / a.data().len() as f64)
}

/// Metric evaluator: lower MSE against a fixed target wins; exact ties go to
/// the first state.
#[derive(Debug, Clone)]
pub struct OracleEvaluator {
    target: Raster,
}

impl OracleEvaluator {
    pub fn new(target: Raster) -> Self {
        Self { target }
    }

    pub fn target(&self) -> &Raster {
        &self.target
    }

    fn distance(&self, s: &VisualState) -> Result<f64, BackendError> {
        mse(&s.image, &self.target).map_err(|e| BackendError::Precondition(e.to_string()))
    }
}

impl Evaluator for OracleEvaluator {
    fn compare(&self, a: Contender<'_>, b: Contender<'_>, _intent: &Intent) -> Result<Choice, BackendError> {
        let (da, db) = (self.distance(a.state)?, self.distance(b.state)?);
        Ok(Choice::new(if db < da { Winner::Second } else { Winner::First }))
    }

    fn score(&self, state: &VisualState) -> Option<f64> {
        self.distance(state).ok()
    }
}

/// Pairwise evaluator backed by a chat VLM. With vision disabled it compares
/// program sources instead of renders.
#[derive(Debug, Clone)]
pub struct VlmEvaluator {
    client: ChatClient,
    templates: TemplateSet,
    vision: bool,
    retries: u32,
}

impl VlmEvaluator {
    pub fn new(client: ChatClient, templates: TemplateSet, vision: bool, retries: u32) -> Self {
        Self {
            client,
            templates,
            vision,
            retries,
        }
    }

    pub fn prompt(&self, a: Contender<'_>, b: Contender<'_>, intent: &Intent) -> Vec<Part> {
        if !self.vision {
            let text = fill(
                &self.templates.evaluator_code_only,
                &[
                    ("intent_text", intent.best_text()),
                    ("program_a", a.program.source()),
                    ("program_b", b.program.source()),
                ],
            );
            return vec![Part::Text(text)];
        }
        let refs: Vec<_> = intent.guidance_images().cloned().collect();
        let note = if refs.is_empty() {
            String::new()
        } else {
            format!(
                "After them, {} reference image(s) show the target.",
                refs.len()
            )
        };
        let text = fill(
            &self.templates.evaluator_pairwise,
            &[("intent_text", intent.best_text()), ("reference_note", &note)],
        );
        [Part::Text(text), Part::Image(a.state.image.clone()), Part::Image(b.state.image.clone())]
            .into_iter()
            .chain(refs.into_iter().map(Part::Image))
            .collect()
    }
}

/// Reads the last `CHOICE: 1|2` marker. Falls back to a bare trailing `1`/`2`.
pub fn parse_choice(reply: &str) -> Option<Winner> {
    let upper = reply.to_ascii_uppercase();
    if let Some(pos) = upper.rfind("CHOICE") {
        let rest = upper[pos + "CHOICE".len()..].trim_start_matches([':', ' ', '*', '\t']);
        return match rest.chars().next() {
            Some('1') => Some(Winner::First),
            Some('2') => Some(Winner::Second),
            _ => None,
        };
    }
    match reply.trim().trim_end_matches('.').chars().last() {
        Some('1') => Some(Winner::First),
        Some('2') => Some(Winner::Second),
        _ => None,
    }
}

impl Evaluator for VlmEvaluator {
    fn compare(&self, a: Contender<'_>, b: Contender<'_>, intent: &Intent) -> Result<Choice, BackendError> {
        let prompt = self.prompt(a, b, intent);
        let mut last_err = None;
        for attempt in 0..=self.retries {
            match self.client.complete(&prompt) {
                Ok(reply) => {
                    if let Some(winner) = parse_choice(&reply) {
                        return Ok(Choice {
                            winner,
                            rationale: Some(reply),
                            queries_used: attempt + 1,
                        });
                    }
                    last_err = None;
                }
                Err(e) => last_err = Some(e),
            }
        }
        match last_err {
            // transport failures on the final attempt are surfaced
            Some(e) => Err(e),
            // unparseable replies every time: default to the first state
            None => Ok(Choice {
                winner: Winner::First,
                rationale: None,
                queries_used: self.retries + 1,
            }),
        }
    }
}
