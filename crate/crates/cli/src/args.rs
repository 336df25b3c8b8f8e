use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "vrefine", version, about = "Iterative refinement of visual programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refine a single program toward an intent.
    Refine {
        /// Program source file; defaults to a built-in wood texture.
        #[arg(long)]
        program: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Round-robin refinement of several programs rendered together.
    RefineMulti {
        /// Program files in render order (texture first, then post stages).
        #[arg(long = "program", required = true)]
        programs: Vec<PathBuf>,
        /// Domain tag per program; inferred for toy programs when omitted.
        #[arg(long = "domain")]
        domains: Vec<String>,
        /// Full passes over all programs.
        #[arg(long)]
        rounds: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run one refinement per factorization depth x branch = total.
    SweepDims {
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        program: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render one or more programs (texture then post stages) to a PNG.
    Render {
        #[arg(required = true)]
        programs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        width: u32,
        #[arg(long, default_value_t = 256)]
        height: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "VREFINE_EXECUTOR")]
        executor: Option<String>,
    },
    /// Line/character edit size between two program files, as JSON.
    Diffstats { prev: PathBuf, next: PathBuf },
    /// Generate reference images from a text intent.
    Imagine {
        #[arg(long)]
        intent: String,
        /// `file:<png>` or `http` (reads VREFINE_IMG_URL / _MODEL / _KEY).
        #[arg(long)]
        imaginer: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the built-in toy executor over the stdio wire protocol.
    ServeToy,
}

/// Settings shared by every refinement command. Each overrides the matching
/// `--config` key.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML or JSON settings file (`.json` selects JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Iterations d.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Candidates per iteration b.
    #[arg(long)]
    pub branch: Option<usize>,
    /// Regenerations after a failed candidate.
    #[arg(long)]
    pub retries: Option<u32>,
    /// Re-asks after an unparseable evaluator reply.
    #[arg(long)]
    pub eval_retries: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_parallel: Option<usize>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Seed passed to the renderer (noise offsets), distinct from the search seed.
    #[arg(long)]
    pub render_seed: Option<u64>,

    #[arg(long)]
    pub no_revert: bool,
    #[arg(long, conflicts_with = "leap_only")]
    pub tweak_only: bool,
    #[arg(long)]
    pub leap_only: bool,
    #[arg(long)]
    pub no_imagination: bool,
    #[arg(long)]
    pub no_gen_vision: bool,
    #[arg(long)]
    pub no_eval_vision: bool,

    /// `mock` or `vlm`.
    #[arg(long)]
    pub generator: Option<String>,
    /// `oracle` or `vlm`.
    #[arg(long)]
    pub evaluator: Option<String>,
    /// Oracle target: a PNG, or a program file rendered with the run's settings.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// `toy`, `subprocess:<cmd>`, or `http:<url>`.
    #[arg(long, env = "VREFINE_EXECUTOR")]
    pub executor: Option<String>,
    /// `none`, `file:<png>`, or `http`.
    #[arg(long)]
    pub imaginer: Option<String>,
    /// Directory overriding the built-in prompt templates.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub intent: Option<String>,
    /// Reference image (repeatable).
    #[arg(long = "reference")]
    pub references: Vec<PathBuf>,
    #[arg(long)]
    pub imagination_count: Option<usize>,
    /// Expand the intent with the generator before refinement.
    #[arg(long)]
    pub expand_intent: bool,
    /// Sampling temperature for the VLM generator.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Executor request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    #[arg(long)]
    pub max_generator_calls: Option<u64>,
    #[arg(long)]
    pub max_evaluator_queries: Option<u64>,
    #[arg(long)]
    pub max_executor_runs: Option<u64>,
    /// Run directory; defaults to `runs/run-<unix time>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
