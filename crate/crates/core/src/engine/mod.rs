//! Refinement loops.
//!
//! [`refine`] improves one program: each iteration asks the generator for
//! `b` edits in the scheduled mode, renders them with rejection sampling,
//! and runs a tournament over the survivors plus (when reversion is enabled)
//! the incumbent. [`refine_multi`] refines several programs that render
//! together, one full refinement per program per round, holding the others
//! fixed.

mod rundir;

pub use rundir::{write_multi_run_dir, write_run_dir};

use thiserror::Error;

use crate::backend::BackendError;
use crate::dsl::RenderParams;
use crate::evaluate::{tournament, Contender, Evaluator};
use crate::executor::{ExecError, ExecErrorKind, Executor};
use crate::generate::{Generator, ProposalContext};
use crate::imagine::{imagine, Imaginer};
use crate::model::{
    validate_config, CandidateRecord, ConfigError, EditCandidate, EditMode, Intent,
    IterationRecord, MultiTrace, Program, SearchConfig, SearchTrace, SubRefinement, VisualState,
};
use crate::par::par_map;
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial program failed to execute: {0}")]
    Init(ExecError),
    #[error("intent expansion failed: {0}")]
    Expansion(BackendError),
    #[error("visual imagination failed: {0}")]
    Imagination(BackendError),
    #[error("evaluator failed in iteration {iteration}: {error}")]
    Evaluator {
        iteration: usize,
        error: BackendError,
    },
    #[error("multi-program refinement needs at least one domain")]
    NoDomains,
}

/// The backends one refinement talks to.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub executor: &'a dyn Executor,
    pub generator: &'a dyn Generator,
    pub evaluator: &'a dyn Evaluator,
    pub imaginer: Option<&'a dyn Imaginer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineOptions {
    pub params: RenderParams,
    /// Images requested from the imaginer.
    pub imagination_count: usize,
    /// Expand the intent text with the generator before imagination.
    pub expand_intent: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            params: RenderParams::default(),
            imagination_count: 1,
            expand_intent: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub best: Program,
    pub state: VisualState,
    pub trace: SearchTrace,
    /// The intent after expansion and imagination.
    pub intent: Intent,
}

/// Result of rejection-sampling one candidate slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    /// Outcome is `Err` when the slot was dropped.
    pub candidate: EditCandidate,
    /// Fresh proposals requested after failures.
    pub regenerations: u32,
    pub executor_runs: u32,
    /// Every request for this slot failed at the backend, so the incumbent's
    /// source stands in for the proposal.
    pub padded: bool,
}

/// Executes a proposal, regenerating it after failures.
///
/// `first` is the initial proposal for the slot. Each failure (a backend
/// error producing no text, an empty text, or an execution error) consumes
/// one attempt; up to `retries` fresh proposals are requested through
/// `regenerate(attempt)`. After `retries + 1` failed attempts the slot is
/// dropped and the last execution error is kept. If no attempt ever yielded
/// program text, the incumbent's source is used instead and executed once.
pub fn realize_candidate(
    first: Result<String, BackendError>,
    parent: &Program,
    mode: EditMode,
    retries: u32,
    execute: &dyn Fn(&Program) -> Result<VisualState, ExecError>,
    regenerate: &mut dyn FnMut(u32) -> Result<String, BackendError>,
) -> Realization {
    let mut proposal = first;
    let mut last_failure: Option<(Program, ExecError)> = None;
    let mut regenerations = 0;
    let mut executor_runs = 0;
    for attempt in 0..=retries {
        if attempt > 0 {
            proposal = regenerate(attempt);
            regenerations += 1;
        }
        let Ok(text) = &proposal else { continue };
        let Ok(program) = Program::edit(parent, text.as_str(), mode) else {
            continue;
        };
        executor_runs += 1;
        match execute(&program) {
            Ok(state) => {
                return Realization {
                    candidate: EditCandidate {
                        program,
                        outcome: Ok(state),
                        attempts: attempt + 1,
                    },
                    regenerations,
                    executor_runs,
                    padded: false,
                }
            }
            Err(e) => last_failure = Some((program, e)),
        }
    }
    let attempts = retries + 1;
    match last_failure {
        Some((program, err)) => Realization {
            candidate: EditCandidate {
                program,
                outcome: Err(err),
                attempts,
            },
            regenerations,
            executor_runs,
            padded: false,
        },
        None => {
            let program =
                Program::edit(parent, parent.source(), mode).expect("incumbent source is non-empty");
            executor_runs += 1;
            let outcome = execute(&program);
            Realization {
                candidate: EditCandidate {
                    program,
                    outcome,
                    attempts,
                },
                regenerations,
                executor_runs,
                padded: true,
            }
        }
    }
}

/// Seed for round `round` of a multi-program run; round 0 uses the
/// configured seed unchanged so a one-domain, one-round run replays
/// [`refine`] exactly.
fn round_seed(seed: u64, round: usize) -> u64 {
    if round == 0 {
        seed
    } else {
        derive_seed(seed, &[0x524F_554E_44, round as u64])
    }
}

fn with_substitution(context: &[Program], slot: usize, p: &Program) -> Vec<Program> {
    let mut programs = context.to_vec();
    programs[slot] = p.clone();
    programs
}

/// Expansion and imagination, run once before any refinement.
fn prepare_intent(
    intent: &Intent,
    cfg: &SearchConfig,
    backends: &Backends<'_>,
    options: &RefineOptions,
) -> Result<Intent, EngineError> {
    let mut intent = intent.clone();
    if options.expand_intent {
        intent = backends
            .generator
            .expand_intent(&intent)
            .map_err(EngineError::Expansion)?;
    }
    if let Some(imaginer) = backends.imaginer {
        intent = imagine(
            imaginer,
            &intent,
            cfg.flags.imagination_enabled,
            options.imagination_count,
        )
        .map_err(EngineError::Imagination)?;
    }
    Ok(intent)
}

/// Single-program iterative refinement.
pub fn refine(
    cfg: &SearchConfig,
    p0: &Program,
    intent: &Intent,
    backends: &Backends<'_>,
    options: &RefineOptions,
) -> Result<RefineOutput, EngineError> {
    validate_config(cfg)?;
    let context = [p0.clone()];
    let initial_state = backends
        .executor
        .execute(&context, &options.params)
        .map_err(EngineError::Init)?;
    let intent = prepare_intent(intent, cfg, backends, options)?;
    let (best, state, trace) = refine_slot(cfg, &context, 0, initial_state, &intent, backends, options)?;
    Ok(RefineOutput {
        best,
        state,
        trace,
        intent,
    })
}

/// Refines `context[slot]`, rendering every candidate composited with the
/// rest of `context`.
fn refine_slot(
    cfg: &SearchConfig,
    context: &[Program],
    slot: usize,
    initial_state: VisualState,
    intent: &Intent,
    backends: &Backends<'_>,
    options: &RefineOptions,
) -> Result<(Program, VisualState, SearchTrace), EngineError> {
    let params = options.params;
    let execute = |p: &Program| {
        backends
            .executor
            .execute(&with_substitution(context, slot, p), &params)
    };
    let evaluator = backends.evaluator;
    let mut incumbent = context[slot].clone();
    let mut incumbent_state = initial_state;
    let mut trace = SearchTrace {
        config: cfg.clone(),
        initial: incumbent.clone(),
        initial_score: evaluator.score(&incumbent_state),
        iterations: Vec::with_capacity(cfg.depth),
        generator_calls: 0,
        retry_calls: 0,
        evaluator_queries: 0,
        executor_runs: 1,
        truncated: false,
        truncation_reason: None,
        final_program_id: incumbent.id().to_string(),
        imagined_images: intent.imagined_images().len(),
        initial_state: Some(incumbent_state.clone()),
    };
    let budget = cfg.budget;
    let b = cfg.branch;

    for (t, &mode) in cfg.schedule.iter().enumerate() {
        if let Some(cap) = budget.max_generator_calls {
            if trace.generator_calls + trace.retry_calls + b as u64 > cap {
                trace.truncated = true;
                trace.truncation_reason = Some(format!(
                    "generator budget {cap} exhausted before iteration {}",
                    t + 1
                ));
                break;
            }
        }
        if let Some(cap) = budget.max_executor_runs {
            if trace.executor_runs >= cap {
                trace.truncated = true;
                trace.truncation_reason = Some(format!(
                    "executor budget {cap} exhausted before iteration {}",
                    t + 1
                ));
                break;
            }
        }

        let iter_seed = derive_seed(cfg.seed, &[t as u64]);
        let ctx = ProposalContext {
            incumbent: &incumbent,
            state: &incumbent_state,
            intent,
            mode,
            seed: iter_seed,
            vision: cfg.flags.gen_vision_enabled,
        };
        let realized = par_map(b, cfg.max_parallel, |s| {
            let first = backends.generator.propose_one(&ctx, s, 0);
            realize_candidate(first, &incumbent, mode, cfg.retries, &execute, &mut |k| {
                backends.generator.propose_one(&ctx, s, k)
            })
        });

        let retry_calls: u64 = realized.iter().map(|r| r.regenerations as u64).sum();
        let executor_runs: u64 = realized.iter().map(|r| r.executor_runs as u64).sum();

        // successful candidates, then the incumbent last
        let mut pool: Vec<Contender<'_>> = realized
            .iter()
            .filter_map(|r| {
                r.candidate.state().map(|state| Contender {
                    program: &r.candidate.program,
                    state,
                })
            })
            .collect();
        let incumbent_index = if cfg.flags.revert_enabled {
            pool.push(Contender {
                program: &incumbent,
                state: &incumbent_state,
            });
            Some(pool.len() - 1)
        } else {
            None
        };

        if let Some(cap) = budget.max_evaluator_queries {
            let needed = pool.len().saturating_sub(1) as u64;
            if trace.evaluator_queries + needed > cap {
                trace.generator_calls += b as u64;
                trace.retry_calls += retry_calls;
                trace.executor_runs += executor_runs;
                trace.truncated = true;
                trace.truncation_reason = Some(format!(
                    "evaluator budget {cap} exhausted in iteration {}",
                    t + 1
                ));
                break;
            }
        }

        let (winner_program, winner_state, comparisons, rounds, failed) = if pool.is_empty() {
            (incumbent.clone(), incumbent_state.clone(), 0, 0, true)
        } else {
            let outcome = tournament(
                evaluator,
                &pool,
                intent,
                derive_seed(iter_seed, &[0x7052]),
                incumbent_index,
                cfg.max_parallel,
            )
            .map_err(|error| EngineError::Evaluator {
                iteration: t + 1,
                error,
            })?;
            let w = pool[outcome.winner];
            (
                w.program.clone(),
                w.state.clone(),
                outcome.comparisons,
                outcome.rounds,
                false,
            )
        };
        let pool_size = pool.len();
        drop(pool);

        let candidates = realized
            .into_iter()
            .enumerate()
            .map(|(s, r)| {
                let score = r.candidate.state().and_then(|st| evaluator.score(st));
                let EditCandidate {
                    program,
                    outcome,
                    attempts,
                } = r.candidate;
                let (state, error) = match outcome {
                    Ok(st) => (Some(st), None),
                    Err(e) => (None, Some(e)),
                };
                CandidateRecord {
                    slot: s,
                    program,
                    attempts,
                    error,
                    score,
                    image: None,
                    state,
                }
            })
            .collect();

        let reverted = winner_program.id() == incumbent.id();
        let record = IterationRecord {
            index: t + 1,
            mode,
            incumbent_id: incumbent.id().to_string(),
            candidates,
            winner_id: winner_program.id().to_string(),
            winner: winner_program.clone(),
            reverted,
            failed,
            pool_size,
            evaluator_queries: comparisons,
            tournament_rounds: rounds,
            generator_calls: b as u64,
            retry_calls,
            executor_runs,
            incumbent_score: evaluator.score(&incumbent_state),
            winner_score: evaluator.score(&winner_state),
            winner_image: None,
            winner_state: Some(winner_state.clone()),
        };
        trace.generator_calls += record.generator_calls;
        trace.retry_calls += retry_calls;
        trace.evaluator_queries += comparisons;
        trace.executor_runs += executor_runs;
        trace.iterations.push(record);

        incumbent = winner_program;
        incumbent_state = winner_state;
    }
    trace.final_program_id = incumbent.id().to_string();
    Ok((incumbent, incumbent_state, trace))
}

/// One program slot in a multi-program refinement.
#[derive(Clone, Copy)]
pub struct DomainSpec<'a> {
    pub config: &'a SearchConfig,
    pub initial: &'a Program,
    pub generator: &'a dyn Generator,
    pub evaluator: &'a dyn Evaluator,
}

#[derive(Debug, Clone)]
pub struct MultiOutput {
    pub programs: Vec<Program>,
    pub state: VisualState,
    pub trace: MultiTrace,
    pub intent: Intent,
}

/// Round-robin refinement of several programs rendered as one composite.
///
/// For each round and each domain `i` in order, one full refinement of depth
/// `config_i.depth` runs on program `i` while the current best programs of all
/// other domains stay fixed; every candidate is rendered with the whole list.
/// Expansion and imagination run once up front, using the first domain's
/// flags and generator.
pub fn refine_multi(
    domains: &[DomainSpec<'_>],
    intent: &Intent,
    executor: &dyn Executor,
    imaginer: Option<&dyn Imaginer>,
    options: &RefineOptions,
    rounds: usize,
) -> Result<MultiOutput, EngineError> {
    let first = domains.first().ok_or(EngineError::NoDomains)?;
    for d in domains {
        validate_config(d.config)?;
    }
    let mut programs: Vec<Program> = domains.iter().map(|d| d.initial.clone()).collect();
    let mut state = executor
        .execute(&programs, &options.params)
        .map_err(EngineError::Init)?;
    let intent = prepare_intent(
        intent,
        first.config,
        &Backends {
            executor,
            generator: first.generator,
            evaluator: first.evaluator,
            imaginer,
        },
        options,
    )?;

    let mut trace = MultiTrace {
        rounds,
        sub_refinements: Vec::new(),
        generator_calls: 0,
        retry_calls: 0,
        evaluator_queries: 0,
        executor_runs: 1,
        final_program_ids: Vec::new(),
        imagined_images: intent.imagined_images().len(),
    };
    'rounds: for round in 0..rounds {
        for (i, d) in domains.iter().enumerate() {
            let mut cfg = d.config.clone();
            cfg.seed = round_seed(cfg.seed, round);
            let backends = Backends {
                executor,
                generator: d.generator,
                evaluator: d.evaluator,
                imaginer: None,
            };
            let (best, best_state, sub) =
                refine_slot(&cfg, &programs, i, state.clone(), &intent, &backends, options)?;
            // the initial render of a sub-refinement reuses the composite
            // state carried over, so it is not a new executor run
            trace.generator_calls += sub.generator_calls;
            trace.retry_calls += sub.retry_calls;
            trace.evaluator_queries += sub.evaluator_queries;
            trace.executor_runs += sub.executor_runs - 1;
            let truncated = sub.truncated;
            trace.sub_refinements.push(SubRefinement {
                round,
                domain_index: i,
                trace: sub,
            });
            programs[i] = best;
            state = best_state;
            if truncated {
                break 'rounds;
            }
        }
    }
    trace.final_program_ids = programs.iter().map(|p| p.id().to_string()).collect();
    Ok(MultiOutput {
        programs,
        state,
        trace,
        intent,
    })
}

/// Classifies whether an execution error came from the program or the
/// infrastructure around it.
pub fn is_program_fault(e: &ExecError) -> bool {
    matches!(
        e.kind,
        ExecErrorKind::Parse | ExecErrorKind::Type | ExecErrorKind::Runtime
    )
}
