//! Bit-exactness against the Python reference in `tests/oracle/dsl_oracle.py`.

use std::path::PathBuf;

use serde::Deserialize;
use vrefine_core::dsl::{self, mutate_tweak, value_noise, RenderParams};

#[derive(Deserialize)]
struct NoisePoint {
    x: u64,
    y: u64,
    seed: u64,
    value: u64,
}

#[derive(Deserialize)]
struct Tweak {
    seed: u64,
    values: Vec<u64>,
}

#[derive(Deserialize)]
struct Oracle {
    width: u32,
    height: u32,
    seed: u64,
    renders: std::collections::BTreeMap<String, String>,
    noise: Vec<NoisePoint>,
    tweak_program: String,
    tweaks: Vec<Tweak>,
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn oracle() -> Oracle {
    let text = std::fs::read_to_string(manifest().join("tests/data/dsl_oracle.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn value_noise_matches_reference_bits() {
    let o = oracle();
    assert_eq!(o.noise.len(), 1000);
    for (i, p) in o.noise.iter().enumerate() {
        let got = value_noise(f64::from_bits(p.x), f64::from_bits(p.y), p.seed);
        assert_eq!(got.to_bits(), p.value, "point {i}");
    }
}

#[test]
fn tweak_stream_matches_reference() {
    let o = oracle();
    let parsed = dsl::parse(&o.tweak_program).unwrap();
    assert_eq!(o.tweaks.len(), 64);
    for t in &o.tweaks {
        let out = dsl::parse(&mutate_tweak(&parsed, t.seed)).unwrap();
        let got: Vec<u64> = out
            .tokens
            .iter()
            .filter_map(|tok| match tok.kind {
                dsl::TokenKind::Number(v) => Some(v.to_bits()),
                _ => None,
            })
            .collect();
        assert_eq!(got, t.values, "seed {}", t.seed);
    }
}

#[test]
fn corpus_render_hashes() {
    let o = oracle();
    assert_eq!(o.renders.len(), 4);
    for (name, want) in &o.renders {
        let src = std::fs::read_to_string(manifest().join(format!("corpus/{name}.vtx"))).unwrap();
        let parsed = dsl::parse(&src).unwrap();
        let img = dsl::render(&[parsed], RenderParams::new(o.width, o.height, o.seed)).unwrap();
        assert_eq!(&img.sha256_hex(), want, "{name}");
    }
}

#[test]
fn every_corpus_program_renders() {
    let dir = manifest().join("corpus");
    let texture = dsl::parse("output rgb(0.5, 0.4, 0.3)").unwrap();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let src = std::fs::read_to_string(&path).unwrap();
        let parsed = dsl::parse(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stages = if parsed.uses_post_features {
            vec![texture.clone(), parsed]
        } else {
            vec![parsed]
        };
        dsl::render(&stages, RenderParams::new(32, 32, 1))
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
