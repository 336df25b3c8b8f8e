//! Resolution of run settings: built-in defaults, then the `--config` file,
//! then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use vrefine_core::executor::{ExecutorSpec, DEFAULT_TIMEOUT};
use vrefine_core::{EditMode, RenderParams, SearchConfig};

use crate::args::RunArgs;

/// A problem with how the program was invoked (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Keys accepted in a config file. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub depth: Option<usize>,
    pub branch: Option<usize>,
    /// `alternate`, `tweak` or `leap`.
    pub mode: Option<String>,
    pub retries: Option<u32>,
    pub eval_retries: Option<u32>,
    pub seed: Option<u64>,
    pub max_parallel: Option<usize>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub render_seed: Option<u64>,
    pub revert: Option<bool>,
    pub imagination: Option<bool>,
    pub gen_vision: Option<bool>,
    pub eval_vision: Option<bool>,
    pub generator: Option<String>,
    pub evaluator: Option<String>,
    pub target: Option<PathBuf>,
    pub executor: Option<String>,
    pub imaginer: Option<String>,
    pub templates: Option<PathBuf>,
    pub intent: Option<String>,
    pub references: Option<Vec<PathBuf>>,
    pub imagination_count: Option<usize>,
    pub expand_intent: Option<bool>,
    pub temperature: Option<f64>,
    pub timeout: Option<u64>,
    pub max_generator_calls: Option<u64>,
    pub max_evaluator_queries: Option<u64>,
    pub max_executor_runs: Option<u64>,
    pub program: Option<PathBuf>,
    pub programs: Option<Vec<PathBuf>>,
    pub rounds: Option<usize>,
    pub total: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read config {}: {e}", path.display())),
        };
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed: Result<Self, String> = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        let mut cfg = match parsed {
            Ok(c) => c,
            Err(e) => return usage(format!("invalid config {}: {e}", path.display())),
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut cfg.target, &mut cfg.templates, &mut cfg.program, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            rebase(p);
        }
        for list in [&mut cfg.references, &mut cfg.programs].into_iter().flatten() {
            list.iter_mut().for_each(rebase);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Mock,
    Vlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Oracle,
    Vlm,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub search: SearchConfig,
    pub params: RenderParams,
    pub generator: GeneratorKind,
    pub evaluator: EvaluatorKind,
    pub target: Option<PathBuf>,
    pub executor: String,
    pub imaginer: Option<String>,
    pub templates: Option<PathBuf>,
    pub intent: String,
    pub references: Vec<PathBuf>,
    pub imagination_count: usize,
    pub expand_intent: bool,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub program: Option<PathBuf>,
    pub programs: Vec<PathBuf>,
    pub rounds: usize,
    pub total: usize,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn executor_spec(&self) -> anyhow::Result<ExecutorSpec> {
        self.executor.parse().or_else(|e: String| usage(e))
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

pub const DEFAULT_INTENT: &str = "a warm, finely grained natural wood texture";

fn parse_mode(s: &str) -> anyhow::Result<Option<EditMode>> {
    match s {
        "alternate" => Ok(None),
        "tweak" => Ok(Some(EditMode::Tweak)),
        "leap" => Ok(Some(EditMode::Leap)),
        other => usage(format!("unknown mode `{other}` (alternate, tweak, leap)")),
    }
}

/// Merges defaults, the optional config file, and flags.
pub fn resolve(a: &RunArgs) -> anyhow::Result<Settings> {
    let f = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };

    let mode = if a.tweak_only {
        Some(EditMode::Tweak)
    } else if a.leap_only {
        Some(EditMode::Leap)
    } else {
        match &f.mode {
            Some(m) => parse_mode(m)?,
            None => None,
        }
    };

    let depth = a.depth.or(f.depth).unwrap_or(4);
    let branch = a.branch.or(f.branch).unwrap_or(8);
    let mut search = SearchConfig::new(depth, branch).with_schedule(mode);
    search.retries = a.retries.or(f.retries).unwrap_or(search.retries);
    search.eval_retries = a.eval_retries.or(f.eval_retries).unwrap_or(search.eval_retries);
    search.seed = a.seed.or(f.seed).unwrap_or(0);
    search.max_parallel = a.max_parallel.or(f.max_parallel).unwrap_or(1);
    let flag = |off: bool, file: Option<bool>| !off && file.unwrap_or(true);
    search.flags.revert_enabled = flag(a.no_revert, f.revert);
    search.flags.imagination_enabled = flag(a.no_imagination, f.imagination);
    search.flags.gen_vision_enabled = flag(a.no_gen_vision, f.gen_vision);
    search.flags.eval_vision_enabled = flag(a.no_eval_vision, f.eval_vision);
    search.budget.max_generator_calls = a.max_generator_calls.or(f.max_generator_calls);
    search.budget.max_evaluator_queries = a.max_evaluator_queries.or(f.max_evaluator_queries);
    search.budget.max_executor_runs = a.max_executor_runs.or(f.max_executor_runs);
    if let Err(e) = search.validate() {
        return usage(e.to_string());
    }

    let params = RenderParams::new(
        a.width.or(f.width).unwrap_or(64),
        a.height.or(f.height).unwrap_or(64),
        a.render_seed.or(f.render_seed).unwrap_or(0),
    );
    if params.width == 0 || params.height == 0 {
        return usage("width and height must be at least 1");
    }

    let generator = match a.generator.as_deref().or(f.generator.as_deref()).unwrap_or("mock") {
        "mock" => GeneratorKind::Mock,
        "vlm" => GeneratorKind::Vlm,
        other => return usage(format!("unknown generator `{other}` (mock, vlm)")),
    };
    let evaluator = match a.evaluator.as_deref().or(f.evaluator.as_deref()).unwrap_or("oracle") {
        "oracle" => EvaluatorKind::Oracle,
        "vlm" => EvaluatorKind::Vlm,
        other => return usage(format!("unknown evaluator `{other}` (oracle, vlm)")),
    };
    let target = a.target.clone().or(f.target);
    if evaluator == EvaluatorKind::Oracle && target.is_none() {
        return usage("the oracle evaluator needs --target");
    }

    let settings = Settings {
        search,
        params,
        generator,
        evaluator,
        target,
        executor: a.executor.clone().or(f.executor).unwrap_or_else(|| "toy".into()),
        imaginer: a.imaginer.clone().or(f.imaginer).filter(|s| s != "none"),
        templates: a.templates.clone().or(f.templates),
        intent: a.intent.clone().or(f.intent).unwrap_or_else(|| DEFAULT_INTENT.into()),
        references: if a.references.is_empty() {
            f.references.unwrap_or_default()
        } else {
            a.references.clone()
        },
        imagination_count: a.imagination_count.or(f.imagination_count).unwrap_or(1),
        expand_intent: a.expand_intent || f.expand_intent.unwrap_or(false),
        temperature: a.temperature.or(f.temperature).unwrap_or(0.7),
        timeout_secs: a.timeout.or(f.timeout).unwrap_or(DEFAULT_TIMEOUT.as_secs()),
        program: f.program,
        programs: f.programs.unwrap_or_default(),
        rounds: f.rounds.unwrap_or(1),
        total: f.total.unwrap_or(32),
        out: a.out.clone().or(f.out),
    };
    settings.executor_spec()?;
    Ok(settings)
}
