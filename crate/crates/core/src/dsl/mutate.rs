//! Seeded program mutators used by the offline edit generator.
//!
//! Both mutators draw from a [`SplitMix64`] stream seeded with `rng_seed`.
//!
//! Tweak stream, per numeric literal in token order:
//!
//! ```text
//! r = next_f64()
//! if r < 0.4:
//!     if value == 0: value = (next_f64() < 0.5) ? -0.25 : 0.25
//!     else:          value = value * (0.5 + next_f64())
//!     value = round_half_away(value * 10^4) / 10^4
//! ```

use std::collections::HashMap;

use super::ast::{format_number, Ast, Expr, Type};
use super::builtins::Builtin;
use super::lexer::TokenKind;
use super::parser::{binding_types, infer, Parsed};
use crate::rng::SplitMix64;

pub const TWEAK_PROBABILITY: f64 = 0.4;

/// Maximum depth of freshly generated subtrees in leap edits.
pub const MAX_FRESH_DEPTH: usize = 4;

/// Rounds to four decimal places, half away from zero.
pub fn round4(v: f64) -> f64 {
    let r = (v * 10_000.0).round() / 10_000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Rewrites numeric literals in place, leaving every other byte of the
/// source (layout, comments) untouched. The result is always a tweak of the
/// input.
pub fn mutate_tweak(parsed: &Parsed, rng_seed: u64) -> String {
    let mut rng = SplitMix64::new(rng_seed);
    let src = &parsed.source;
    let mut out = String::with_capacity(src.len() + 16);
    let mut last = 0;
    for tok in &parsed.tokens {
        let TokenKind::Number(value) = tok.kind else {
            continue;
        };
        if rng.next_f64() >= TWEAK_PROBABILITY {
            continue;
        }
        let new = if value == 0.0 {
            if rng.next_f64() < 0.5 {
                -0.25
            } else {
                0.25
            }
        } else {
            round4(value * (0.5 + rng.next_f64()))
        };
        out.push_str(&src[last..tok.start]);
        out.push_str(&format_number(new));
        last = tok.end;
    }
    out.push_str(&src[last..]);
    out
}

/// The structural change a leap edit applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LeapKind {
    /// `output = mix(output, <fresh>, t)`.
    WrapMix,
    /// One pattern builtin call replaced by a different pattern builtin.
    SwapBuiltin,
    /// A color ramp inserted over an existing scalar expression.
    InsertRamp,
}

/// Applies one structural mutation chosen uniformly among [`LeapKind`]s and
/// returns the canonical source of the result. When the chosen mutation has
/// no site to act on, it falls back to [`LeapKind::WrapMix`].
pub fn mutate_leap(parsed: &Parsed, rng_seed: u64) -> String {
    mutate_leap_with_kind(parsed, rng_seed).0
}

pub fn mutate_leap_with_kind(parsed: &Parsed, rng_seed: u64) -> (String, LeapKind) {
    let mut rng = SplitMix64::new(rng_seed);
    let mut ast = parsed.ast.clone();
    let env = binding_types(&ast);
    let kind = match rng.below(3) {
        0 => LeapKind::WrapMix,
        1 => LeapKind::SwapBuiltin,
        _ => LeapKind::InsertRamp,
    };
    let applied = match kind {
        LeapKind::WrapMix => {
            wrap_mix(&mut ast, parsed.output_type, &mut rng);
            LeapKind::WrapMix
        }
        LeapKind::SwapBuiltin => {
            if swap_builtin(&mut ast, &mut rng) {
                LeapKind::SwapBuiltin
            } else {
                wrap_mix(&mut ast, parsed.output_type, &mut rng);
                LeapKind::WrapMix
            }
        }
        LeapKind::InsertRamp => {
            insert_ramp(&mut ast, parsed.output_type, &env, &mut rng);
            LeapKind::InsertRamp
        }
    };
    (ast.to_string(), applied)
}

fn wrap_mix(ast: &mut Ast, out_ty: Type, rng: &mut SplitMix64) {
    let fresh = match out_ty {
        Type::Scalar => fresh_scalar(rng, MAX_FRESH_DEPTH),
        Type::Color => fresh_color(rng, MAX_FRESH_DEPTH),
    };
    let t = Expr::Number(round4(rng.range(0.2, 0.8)));
    let old = std::mem::replace(&mut ast.output, Expr::Number(0.0));
    ast.output = Expr::call("mix", vec![old, fresh, t]);
}

fn swap_builtin(ast: &mut Ast, rng: &mut SplitMix64) -> bool {
    let mut sites = 0usize;
    for root in ast.roots() {
        root.visit(&mut |e| {
            if is_pattern_call(e) {
                sites += 1;
            }
        });
    }
    if sites == 0 {
        return false;
    }
    let target = rng.below(sites);
    let mut seen = 0usize;
    for root in ast.roots_mut() {
        if let Some(done) = swap_nth(root, target, &mut seen, rng) {
            return done;
        }
    }
    false
}

fn is_pattern_call(e: &Expr) -> bool {
    matches!(e, Expr::Call { name, .. }
        if Builtin::from_name(name).is_some_and(|b| Builtin::PATTERNS.contains(&b)))
}

fn swap_nth(e: &mut Expr, target: usize, seen: &mut usize, rng: &mut SplitMix64) -> Option<bool> {
    if is_pattern_call(e) {
        if *seen == target {
            let Expr::Call { name, args } = e else {
                unreachable!()
            };
            let old = Builtin::from_name(name).expect("pattern builtin");
            let choices: Vec<Builtin> = Builtin::PATTERNS
                .into_iter()
                .filter(|&b| b != old)
                .collect();
            let new = choices[rng.below(choices.len())];
            let arity = new.fixed_arity().expect("patterns have fixed arity");
            let mut new_args: Vec<Expr> = std::mem::take(args).into_iter().take(arity).collect();
            while new_args.len() < arity {
                new_args.push(fresh_param(new, new_args.len(), rng));
            }
            *name = new.name().to_string();
            *args = new_args;
            return Some(true);
        }
        *seen += 1;
    }
    match e {
        Expr::Call { args, .. } => {
            for a in args {
                if let Some(done) = swap_nth(a, target, seen, rng) {
                    return Some(done);
                }
            }
            None
        }
        Expr::Binary { lhs, rhs, .. } => swap_nth(lhs, target, seen, rng)
            .or_else(|| swap_nth(rhs, target, seen, rng)),
        _ => None,
    }
}

fn insert_ramp(ast: &mut Ast, out_ty: Type, env: &HashMap<String, Type>, rng: &mut SplitMix64) {
    let lo = round4(rng.range(0.0, 0.4));
    let hi = round4(rng.range(0.6, 1.0));
    let c0 = fresh_rgb(rng);
    let c1 = fresh_rgb(rng);
    let make_ramp = |t: Expr| Expr::call("ramp", vec![t, Expr::Number(lo), c0, Expr::Number(hi), c1]);
    match out_ty {
        Type::Scalar => {
            let old = std::mem::replace(&mut ast.output, Expr::Number(0.0));
            ast.output = make_ramp(old);
        }
        Type::Color => {
            let mut scalars: Vec<Expr> = ast
                .bindings
                .iter()
                .filter(|(_, e)| infer(e, env) == Some(Type::Scalar))
                .map(|(n, _)| Expr::Ident(n.clone()))
                .collect();
            for root in ast.roots() {
                root.visit(&mut |e| {
                    if matches!(e, Expr::Call { .. }) && infer(e, env) == Some(Type::Scalar) {
                        scalars.push(e.clone());
                    }
                });
            }
            let over = if scalars.is_empty() {
                fresh_pattern(rng)
            } else {
                let i = rng.below(scalars.len());
                scalars.swap_remove(i)
            };
            let t = Expr::Number(round4(rng.range(0.2, 0.8)));
            let old = std::mem::replace(&mut ast.output, Expr::Number(0.0));
            ast.output = Expr::call("mix", vec![old, make_ramp(over), t]);
        }
    }
}

fn fresh_param(b: Builtin, index: usize, rng: &mut SplitMix64) -> Expr {
    let v = match (b, index) {
        (Builtin::Noise | Builtin::Voronoi, 0) => round4(rng.range(1.0, 12.0)),
        (Builtin::Noise | Builtin::Voronoi, 1) => rng.below(100) as f64,
        (Builtin::Voronoi, _) => round4(rng.range(0.3, 1.0)),
        (Builtin::Checker, _) => (2 + rng.below(11)) as f64,
        (Builtin::Stripes, 0) => round4(rng.range(1.0, 10.0)),
        (Builtin::Stripes, _) => rng.below(180) as f64,
        _ => round4(rng.next_f64()),
    };
    Expr::Number(v)
}

fn fresh_pattern(rng: &mut SplitMix64) -> Expr {
    let b = Builtin::PATTERNS[rng.below(Builtin::PATTERNS.len())];
    let arity = b.fixed_arity().expect("patterns have fixed arity");
    let args = (0..arity).map(|i| fresh_param(b, i, rng)).collect();
    Expr::call(b.name(), args)
}

fn fresh_rgb(rng: &mut SplitMix64) -> Expr {
    Expr::Color([
        round4(rng.next_f64()),
        round4(rng.next_f64()),
        round4(rng.next_f64()),
    ])
}

/// A random scalar expression of depth at most `depth` (`depth >= 2`).
fn fresh_scalar(rng: &mut SplitMix64, depth: usize) -> Expr {
    if depth < 3 || rng.below(3) != 0 {
        return fresh_pattern(rng);
    }
    let a = fresh_scalar(rng, depth - 1);
    let b = fresh_scalar(rng, depth - 1);
    let t = Expr::Number(round4(rng.next_f64()));
    Expr::call("mix", vec![a, b, t])
}

/// A random color expression of depth at most `depth`.
fn fresh_color(rng: &mut SplitMix64, depth: usize) -> Expr {
    if depth < 3 {
        return fresh_rgb(rng);
    }
    match rng.below(3) {
        0 => fresh_rgb(rng),
        1 => {
            let t = fresh_scalar(rng, depth - 1);
            let (lo, hi) = (round4(rng.range(0.0, 0.4)), round4(rng.range(0.6, 1.0)));
            Expr::call(
                "ramp",
                vec![
                    t,
                    Expr::Number(lo),
                    fresh_rgb(rng),
                    Expr::Number(hi),
                    fresh_rgb(rng),
                ],
            )
        }
        _ => {
            let t = fresh_scalar(rng, depth - 1);
            Expr::call("mix", vec![fresh_rgb(rng), fresh_rgb(rng), t])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{is_tweak, parse};
    use super::*;

    const SAMPLE: &str = "n = noise(4.0, 7)\nc = mix(rgb(0.2, 0.1, 0), rgb(0.9, 0.8, 0.6), n)\noutput c\n";

    #[test]
    fn tweak_without_literals_is_identity() {
        let p = parse("a = input output a").unwrap();
        assert_eq!(mutate_tweak(&p, 3), "a = input output a");
    }

    #[test]
    fn tweak_is_deterministic_and_in_neighborhood() {
        let p = parse(SAMPLE).unwrap();
        for seed in 0..200 {
            let a = mutate_tweak(&p, seed);
            assert_eq!(a, mutate_tweak(&p, seed));
            assert!(is_tweak(SAMPLE, &a).unwrap(), "seed {seed}: {a}");
        }
    }

    #[test]
    fn tweak_preserves_comments() {
        let src = "# wood\nk = 3.0 # rings\noutput k";
        let p = parse(src).unwrap();
        for seed in 0..20 {
            let out = mutate_tweak(&p, seed);
            assert!(out.starts_with("# wood\nk = "));
            assert!(out.ends_with(" # rings\noutput k"));
        }
    }

    #[test]
    fn leap_parses_and_is_deterministic() {
        let p = parse(SAMPLE).unwrap();
        for seed in 0..300 {
            let (a, kind) = mutate_leap_with_kind(&p, seed);
            assert_eq!(a, mutate_leap(&p, seed));
            let q = parse(&a).unwrap_or_else(|e| panic!("seed {seed} ({kind:?}): {e}\n{a}"));
            assert_eq!(q.output_type, p.output_type);
        }
    }

    #[test]
    fn leap_on_scalar_output() {
        let p = parse("output checker(4)").unwrap();
        for seed in 0..100 {
            let out = mutate_leap(&p, seed);
            parse(&out).unwrap();
            assert!(!is_tweak("output checker(4)", &out).unwrap());
        }
    }

    #[test]
    fn fresh_subtrees_respect_depth() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..500 {
            assert!(fresh_color(&mut rng, MAX_FRESH_DEPTH).depth() <= MAX_FRESH_DEPTH);
            assert!(fresh_scalar(&mut rng, MAX_FRESH_DEPTH).depth() <= MAX_FRESH_DEPTH);
        }
    }

    #[test]
    fn round4_behaviour() {
        assert_eq!(round4(1.23456), 1.2346);
        assert_eq!(round4(-0.00001), 0.0);
        assert!(round4(-0.00001).is_sign_positive());
    }
}
