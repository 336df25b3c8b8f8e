use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vrefine_core::dsl::{self, mutate_tweak};
use vrefine_core::engine::{refine, Backends, RefineOptions};
use vrefine_core::evaluate::{tournament, Contender, OracleEvaluator};
use vrefine_core::executor::{Executor, ToyExecutor};
use vrefine_core::model::{DomainTag, Intent, Program, SearchConfig};
use vrefine_core::{MockMutationGenerator, RenderParams};

const WOOD: &str = include_str!("../../core/corpus/wood.vtx");
const GRANITE: &str = include_str!("../../core/corpus/granite.vtx");

fn bench_render(c: &mut Criterion) {
    let mut group = c.benchmark_group("render");
    for (name, src) in [("wood", WOOD), ("granite", GRANITE)] {
        let program = dsl::parse(src).unwrap();
        for size in [64u32, 256] {
            let params = RenderParams::new(size, size, 0);
            group.bench_with_input(BenchmarkId::new(name, size), &params, |b, p| {
                b.iter(|| dsl::render(black_box(std::slice::from_ref(&program)), *p).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_tournament(c: &mut Criterion) {
    let params = RenderParams::new(64, 64, 0);
    let parsed = dsl::parse(WOOD).unwrap();
    let target = dsl::render(&[dsl::parse(&mutate_tweak(&parsed, 1)).unwrap()], params).unwrap();
    let eval = OracleEvaluator::new(target);
    let intent = Intent::new("match the target").unwrap();
    let programs: Vec<Program> = (0..9)
        .map(|s| Program::initial(DomainTag::ToyTexture, mutate_tweak(&parsed, 100 + s)).unwrap())
        .collect();
    let states: Vec<_> = programs
        .iter()
        .map(|p| ToyExecutor.execute(std::slice::from_ref(p), &params).unwrap())
        .collect();
    let pool: Vec<Contender> = programs
        .iter()
        .zip(&states)
        .map(|(program, state)| Contender { program, state })
        .collect();
    c.bench_function("tournament/9", |b| {
        b.iter(|| tournament(&eval, black_box(&pool), &intent, 7, Some(8), 1).unwrap())
    });
}

fn bench_refine(c: &mut Criterion) {
    let params = RenderParams::new(32, 32, 0);
    let parsed = dsl::parse(WOOD).unwrap();
    let target = dsl::render(&[dsl::parse(&mutate_tweak(&parsed, 1)).unwrap()], params).unwrap();
    let eval = OracleEvaluator::new(target);
    let generator = MockMutationGenerator::new(0);
    let backends = Backends {
        executor: &ToyExecutor,
        generator: &generator,
        evaluator: &eval,
        imaginer: None,
    };
    let p0 = Program::initial(DomainTag::ToyTexture, WOOD).unwrap();
    let intent = Intent::new("match the target").unwrap();
    let options = RefineOptions {
        params,
        ..RefineOptions::default()
    };
    let cfg = SearchConfig::new(2, 4);
    c.bench_function("refine/2x4@32", |b| {
        b.iter(|| refine(&cfg, &p0, &intent, &backends, &options).unwrap())
    });
}

criterion_group!(benches, bench_render, bench_tournament, bench_refine);
criterion_main!(benches);
