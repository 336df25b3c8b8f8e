//! Iterative refinement of visual programs.
//!
//! An edit generator proposes `b` variants of the incumbent program, an
//! executor renders them, and a pairwise evaluator picks a winner through a
//! single-elimination tournament. Repeating this `d` times, alternating
//! numeric "tweak" edits with structural "leap" edits and keeping the
//! incumbent in every pool so a bad iteration can be undone, refines a program
//! toward a textual or visual intent.
//!
//! Everything runs offline against the built-in texture language in [`dsl`]
//! with seeded mock backends, and against real renderers and vision-language
//! models through the pluggable backends in [`executor`], [`generate`],
//! [`evaluate`] and [`imagine`].

pub mod analysis;
pub mod backend;
pub mod dsl;
pub mod engine;
pub mod evaluate;
pub mod executor;
pub mod generate;
pub mod imagine;
pub mod model;
mod par;
pub mod raster;
pub mod rng;
pub mod templates;

pub use dsl::RenderParams;
pub use engine::{refine, refine_multi, Backends, EngineError, RefineOptions, RefineOutput};
pub use evaluate::{Evaluator, OracleEvaluator};
pub use executor::{ExecError, ExecErrorKind, Executor, ToyExecutor};
pub use model::{
    DomainTag, EditKind, EditMode, Intent, Program, SearchConfig, SearchTrace, VisualState,
};
pub use generate::{Generator, MockMutationGenerator};
pub use raster::Raster;
