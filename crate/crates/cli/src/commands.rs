use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use vrefine_core::analysis::{self, diff_stats, SweepTask};
use vrefine_core::backend::ChatClient;
use vrefine_core::dsl::{self, Role};
use vrefine_core::engine::{
    refine, refine_multi, write_multi_run_dir, write_run_dir, Backends, DomainSpec, RefineOptions,
};
use vrefine_core::evaluate::{Evaluator, OracleEvaluator, VlmEvaluator};
use vrefine_core::executor::{serve, ExecutorSpec, Executor, ToyExecutor};
use vrefine_core::generate::{Generator, MockMutationGenerator, VlmGenerator};
use vrefine_core::imagine::{imagine, HttpImageGen, Imaginer, MockFileImaginer};
use vrefine_core::templates::TemplateSet;
use vrefine_core::{DomainTag, Intent, Program, Raster, RenderParams};

use crate::args::{Cli, Command, RunArgs};
use crate::settings::{resolve, usage, EvaluatorKind, GeneratorKind, Settings};

const DEFAULT_PROGRAM: &str = include_str!("../../core/corpus/wood.vtx");

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Refine { program, run } => cmd_refine(program, &run),
        Command::RefineMulti {
            programs,
            domains,
            rounds,
            run,
        } => cmd_refine_multi(programs, domains, rounds, &run),
        Command::SweepDims { total, program, run } => cmd_sweep(total, program, &run),
        Command::Render {
            programs,
            out,
            width,
            height,
            seed,
            executor,
        } => cmd_render(&programs, &out, RenderParams::new(width, height, seed), executor),
        Command::Diffstats { prev, next } => {
            let d = diff_stats(&read(&prev)?, &read(&next)?);
            println!("{}", serde_json::to_string(&d)?);
            Ok(())
        }
        Command::Imagine {
            intent,
            imaginer,
            count,
            out,
        } => cmd_imagine(&intent, &imaginer, count, &out),
        Command::ServeToy => {
            let stdin = io::stdin().lock();
            let stdout = io::stdout().lock();
            serve(stdin, stdout, &ToyExecutor)?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn out_dir(s: &Settings) -> PathBuf {
    s.out.clone().unwrap_or_else(|| {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        PathBuf::from("runs").join(format!("run-{secs}"))
    })
}

/// Domain for a program file: toy texture unless it reads `input`.
fn infer_domain(source: &str) -> DomainTag {
    match dsl::parse(source) {
        Ok(p) if p.role() == Role::Post => DomainTag::ToyPost,
        _ => DomainTag::ToyTexture,
    }
}

fn load_program(path: Option<&Path>, domain: Option<DomainTag>) -> anyhow::Result<Program> {
    let source = match path {
        Some(p) => read(p)?,
        None => DEFAULT_PROGRAM.to_string(),
    };
    let domain = domain.unwrap_or_else(|| infer_domain(&source));
    Program::initial(domain, source).map_err(|e| anyhow!("{e}"))
}

/// The oracle target: a PNG, or a program rendered with the run's settings.
fn load_target(path: &Path, executor: &dyn Executor, params: &RenderParams) -> anyhow::Result<Raster> {
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        return Raster::read_png(path).with_context(|| format!("reading target {}", path.display()));
    }
    let program = load_program(Some(path), None)?;
    let state = executor
        .execute(&[program], params)
        .map_err(|e| anyhow!("rendering target {}: {e}", path.display()))?;
    Ok(state.image)
}

fn build_intent(s: &Settings) -> anyhow::Result<Intent> {
    let refs = s
        .references
        .iter()
        .map(|p| Raster::read_png(p).with_context(|| format!("reading reference {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let intent = Intent::new(s.intent.clone()).map_err(|e| anyhow!("{e}"))?;
    if refs.is_empty() {
        Ok(intent)
    } else {
        intent.with_references(refs).map_err(|e| anyhow!("{e}"))
    }
}

fn build_imaginer(spec: &str) -> anyhow::Result<Box<dyn Imaginer>> {
    if let Some(path) = spec.strip_prefix("file:") {
        return Ok(Box::new(MockFileImaginer::new(path)));
    }
    if spec == "http" {
        return Ok(Box::new(HttpImageGen::from_env()?));
    }
    usage(format!("unknown imaginer `{spec}` (none, file:<png>, http)"))
}

fn templates(s: &Settings) -> anyhow::Result<TemplateSet> {
    Ok(match &s.templates {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::builtin(),
    })
}

/// Owned backends for one command.
struct Stack {
    executor: Box<dyn Executor>,
    generator: Box<dyn Generator>,
    evaluator: Box<dyn Evaluator>,
    imaginer: Option<Box<dyn Imaginer>>,
}

impl Stack {
    fn build(s: &Settings) -> anyhow::Result<Self> {
        let executor = s
            .executor_spec()?
            .build(s.search.max_parallel, s.timeout());
        let generator: Box<dyn Generator> = match s.generator {
            GeneratorKind::Mock => Box::new(MockMutationGenerator::new(s.search.seed)),
            GeneratorKind::Vlm => Box::new(VlmGenerator::new(
                ChatClient::from_env()?.with_temperature(s.temperature),
                templates(s)?,
            )),
        };
        let evaluator: Box<dyn Evaluator> = match s.evaluator {
            EvaluatorKind::Oracle => {
                let path = s.target.as_deref().expect("resolved settings carry a target");
                Box::new(OracleEvaluator::new(load_target(path, &*executor, &s.params)?))
            }
            EvaluatorKind::Vlm => Box::new(VlmEvaluator::new(
                ChatClient::from_env()?.with_temperature(0.0),
                templates(s)?,
                s.search.flags.eval_vision_enabled,
                s.search.eval_retries,
            )),
        };
        let imaginer = s.imaginer.as_deref().map(build_imaginer).transpose()?;
        Ok(Self {
            executor,
            generator,
            evaluator,
            imaginer,
        })
    }

    fn backends(&self) -> Backends<'_> {
        Backends {
            executor: &*self.executor,
            generator: &*self.generator,
            evaluator: &*self.evaluator,
            imaginer: self.imaginer.as_deref(),
        }
    }
}

fn options(s: &Settings) -> RefineOptions {
    RefineOptions {
        params: s.params,
        imagination_count: s.imagination_count,
        expand_intent: s.expand_intent,
    }
}

fn write_settings(dir: &Path, s: &Settings) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("settings.json"), serde_json::to_string_pretty(s)?)?;
    Ok(())
}

fn fmt_score(s: Option<f64>) -> String {
    s.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

fn cmd_refine(program: Option<PathBuf>, args: &RunArgs) -> anyhow::Result<()> {
    let mut s = resolve(args)?;
    s.program = program.or(s.program);
    let p0 = load_program(s.program.as_deref(), None)?;
    let stack = Stack::build(&s)?;
    let intent = build_intent(&s)?;
    let out = refine(&s.search, &p0, &intent, &stack.backends(), &options(&s))?;
    let dir = out_dir(&s);
    let trace = write_run_dir(&dir, &out)?;
    analysis::report(&trace, &dir)?;
    write_settings(&dir, &s)?;

    println!("run directory: {}", dir.display());
    println!("final program: {}", out.best.id());
    println!(
        "generator calls: {} (+{} retries), evaluator queries: {}, executor runs: {}",
        trace.generator_calls, trace.retry_calls, trace.evaluator_queries, trace.executor_runs
    );
    println!(
        "score: {} -> {}",
        fmt_score(trace.initial_score),
        fmt_score(trace.final_score())
    );
    if let Some(reason) = &trace.truncation_reason {
        println!("truncated: {reason}");
    }
    Ok(())
}

fn cmd_refine_multi(
    programs: Vec<PathBuf>,
    domains: Vec<String>,
    rounds: Option<usize>,
    args: &RunArgs,
) -> anyhow::Result<()> {
    let mut s = resolve(args)?;
    if !programs.is_empty() {
        s.programs = programs;
    }
    s.rounds = rounds.unwrap_or(s.rounds);
    if !domains.is_empty() && domains.len() != s.programs.len() {
        return usage("--domain must be given once per --program or not at all");
    }
    let initial = s
        .programs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let tag = match domains.get(i) {
                Some(d) => Some(d.parse::<DomainTag>().or_else(|e| usage(e))?),
                None => None,
            };
            load_program(Some(p), tag)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let stack = Stack::build(&s)?;
    let intent = build_intent(&s)?;
    let specs: Vec<DomainSpec<'_>> = initial
        .iter()
        .map(|p| DomainSpec {
            config: &s.search,
            initial: p,
            generator: &*stack.generator,
            evaluator: &*stack.evaluator,
        })
        .collect();
    let out = refine_multi(
        &specs,
        &intent,
        &*stack.executor,
        stack.imaginer.as_deref(),
        &options(&s),
        s.rounds,
    )?;
    let dir = out_dir(&s);
    let trace = write_multi_run_dir(&dir, &out)?;
    write_settings(&dir, &s)?;

    println!("run directory: {}", dir.display());
    println!("final programs: {}", trace.final_program_ids.join(", "));
    println!(
        "generator calls: {} (+{} retries), evaluator queries: {}, executor runs: {}",
        trace.generator_calls, trace.retry_calls, trace.evaluator_queries, trace.executor_runs
    );
    if let Some(score) = stack.evaluator.score(&out.state) {
        println!("final score: {score:.6}");
    }
    Ok(())
}

fn cmd_sweep(total: Option<usize>, program: Option<PathBuf>, args: &RunArgs) -> anyhow::Result<()> {
    let mut s = resolve(args)?;
    s.total = total.unwrap_or(s.total);
    s.program = program.or(s.program);
    if s.total == 0 {
        return usage("--total must be at least 1");
    }
    let p0 = load_program(s.program.as_deref(), None)?;
    let stack = Stack::build(&s)?;
    let task = SweepTask {
        program: p0,
        intent: build_intent(&s)?,
        base: s.search.clone(),
        mode: match (args.tweak_only, args.leap_only) {
            (true, _) => Some(vrefine_core::EditMode::Tweak),
            (_, true) => Some(vrefine_core::EditMode::Leap),
            _ => None,
        },
        options: options(&s),
    };
    let rows = analysis::sweep_dimensions(s.total, &task, &stack.backends(), 1);
    let dir = out_dir(&s);
    std::fs::create_dir_all(&dir)?;
    analysis::write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    analysis::write_sweep_json(&dir.join("sweep.json"), &rows)?;
    write_settings(&dir, &s)?;

    print!("{}", read(&dir.join("sweep.csv"))?);
    io::stdout().flush()?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed; see sweep.json", rows.len());
    }
    Ok(())
}

fn cmd_render(
    programs: &[PathBuf],
    out: &Path,
    params: RenderParams,
    executor: Option<String>,
) -> anyhow::Result<()> {
    let spec: ExecutorSpec = executor
        .as_deref()
        .unwrap_or("toy")
        .parse()
        .or_else(|e: String| usage(e))?;
    let list = programs
        .iter()
        .map(|p| load_program(Some(p), None))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let state = spec
        .build(1, vrefine_core::executor::DEFAULT_TIMEOUT)
        .execute(&list, &params)
        .map_err(|e| anyhow!("{e}"))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    state.image.write_png(out)?;
    println!("{}", state.image.sha256_hex());
    Ok(())
}

fn cmd_imagine(text: &str, spec: &str, count: usize, out: &Path) -> anyhow::Result<()> {
    let imaginer = build_imaginer(spec)?;
    let intent = Intent::new(text).map_err(|e| anyhow!("{e}"))?;
    let intent = imagine(&*imaginer, &intent, true, count)?;
    std::fs::create_dir_all(out)?;
    for (k, img) in intent.imagined_images().iter().enumerate() {
        let path = out.join(format!("imagined_{k}.png"));
        img.write_png(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}
