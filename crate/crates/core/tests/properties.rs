//! Seeded properties of the texture language and edit mutators.

use std::path::PathBuf;

use proptest::prelude::*;
use vrefine_core::analysis::diff_stats;
use vrefine_core::dsl::{self, is_tweak, mutate_leap, mutate_tweak, RenderParams};

fn corpus() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| std::fs::read_to_string(p).unwrap())
        .filter(|s| !dsl::parse(s).unwrap().uses_post_features)
        .collect()
}

/// A corpus program after `leaps` structural mutations.
fn evolved(index: usize, seed: u64, leaps: u32) -> String {
    let c = corpus();
    let mut src = c[index % c.len()].clone();
    for k in 0..leaps {
        src = mutate_leap(&dsl::parse(&src).unwrap(), seed.wrapping_add(k as u64));
    }
    src
}

#[test]
fn leap_output_always_parses_and_renders() {
    let c = corpus();
    for seed in 0..1000u64 {
        let src = &c[seed as usize % c.len()];
        let out = mutate_leap(&dsl::parse(src).unwrap(), seed);
        let parsed = dsl::parse(&out).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{out}"));
        assert!(!parsed.uses_post_features);
        assert!(!is_tweak(src, &out).unwrap(), "seed {seed}: leap stayed in the tweak family");
        dsl::render(&[parsed], RenderParams::new(4, 4, seed)).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pretty_print_round_trips(i in 0usize..16, seed in any::<u64>(), leaps in 0u32..4) {
        let src = evolved(i, seed, leaps);
        let ast = dsl::parse(&src).unwrap().ast;
        let printed = ast.to_string();
        let again = dsl::parse(&printed).unwrap().ast;
        prop_assert_eq!(&ast, &again);
        prop_assert_eq!(printed, again.to_string());
    }

    #[test]
    fn tweaks_stay_in_family(i in 0usize..16, seed in any::<u64>(), leaps in 0u32..3) {
        let src = evolved(i, seed, leaps);
        let out = mutate_tweak(&dsl::parse(&src).unwrap(), seed ^ 0xABCD);
        prop_assert!(dsl::parse(&out).is_ok());
        prop_assert!(is_tweak(&src, &out).unwrap());
        prop_assert!(is_tweak(&out, &src).unwrap());
        prop_assert!(is_tweak(&src, &src).unwrap());
    }

    #[test]
    fn is_tweak_is_symmetric(i in 0usize..16, j in 0usize..16, seed in any::<u64>()) {
        let a = evolved(i, seed, 1);
        let b = evolved(j, seed, (j % 2) as u32);
        prop_assert_eq!(is_tweak(&a, &b).unwrap(), is_tweak(&b, &a).unwrap());
    }

    #[test]
    fn diff_stats_swap_symmetry(a in prop::collection::vec("[a-c]{0,3}", 0..8),
                                b in prop::collection::vec("[a-c]{0,3}", 0..8)) {
        let (a, b) = (a.join("\n"), b.join("\n"));
        let f = diff_stats(&a, &b);
        let r = diff_stats(&b, &a);
        prop_assert_eq!((f.lines_added, f.chars_added), (r.lines_deleted, r.chars_deleted));
        prop_assert_eq!((f.lines_deleted, f.chars_deleted), (r.lines_added, r.chars_added));
    }
}
