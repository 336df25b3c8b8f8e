//! Chat-model backends against a stub endpoint.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use common::{chat_reply, HttpStub};
use serde_json::Value;
use vrefine_core::backend::{BackendError, ChatClient};
use vrefine_core::engine::{refine, Backends, RefineOptions};
use vrefine_core::evaluate::{Contender, Evaluator, VlmEvaluator, Winner};
use vrefine_core::generate::{Generator, ProposalContext, VlmGenerator};
use vrefine_core::imagine::{imagine, HttpImageGen};
use vrefine_core::templates::TemplateSet;
use vrefine_core::{
    DomainTag, EditMode, Intent, Program, Raster, RenderParams, SearchConfig, ToyExecutor, VisualState,
};

fn state(rgb: [u8; 3]) -> VisualState {
    VisualState {
        image: Raster::filled(4, 4, rgb).unwrap(),
        seed: 0,
        program_ids: vec![],
    }
}

fn image_count(body: &str) -> usize {
    let v: Value = serde_json::from_str(body).unwrap();
    v["messages"][0]["content"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["type"] == "image_url")
        .count()
}

#[test]
fn generator_extracts_code_and_attaches_images() {
    let stub = HttpStub::start(|_, _| {
        (200, chat_reply("Differences: too dark.\n```\noutput rgb(0.9, 0.1, 0.1)\n```"))
    });
    let g = VlmGenerator::new(ChatClient::new(stub.url.clone(), "m", None), TemplateSet::builtin());
    let p = Program::initial(DomainTag::ToyTexture, "output rgb(0.5, 0.1, 0.1)").unwrap();
    let s = state([128, 25, 25]);
    let i = Intent::new("bright red")
        .unwrap()
        .with_references(vec![Raster::filled(2, 2, [255, 0, 0]).unwrap()])
        .unwrap();
    let ctx = ProposalContext {
        incumbent: &p,
        state: &s,
        intent: &i,
        mode: EditMode::Tweak,
        seed: 0,
        vision: true,
    };
    assert_eq!(g.propose_one(&ctx, 0, 0).unwrap(), "output rgb(0.9, 0.1, 0.1)");
    let body = &stub.bodies()[0];
    assert_eq!(image_count(body), 2);
    assert!(body.contains("bright red"));
}

#[test]
fn evaluator_retries_unparseable_replies() {
    let n = Arc::new(AtomicUsize::new(0));
    let c = n.clone();
    let stub = HttpStub::start(move |_, _| {
        let k = c.fetch_add(1, Ordering::SeqCst);
        (200, chat_reply(if k == 0 { "hmm, hard to say" } else { "The second.\nCHOICE: 2" }))
    });
    let e = VlmEvaluator::new(ChatClient::new(stub.url.clone(), "m", None), TemplateSet::builtin(), true, 2);
    let p = Program::initial(DomainTag::ToyTexture, "output 0").unwrap();
    let (a, b) = (state([0; 3]), state([255; 3]));
    let choice = e
        .compare(
            Contender { program: &p, state: &a },
            Contender { program: &p, state: &b },
            &Intent::new("white").unwrap(),
        )
        .unwrap();
    assert_eq!(choice.winner, Winner::Second);
    assert_eq!(choice.queries_used, 2);
    assert_eq!(image_count(&stub.bodies()[0]), 2);
}

#[test]
fn evaluator_defaults_to_first_and_surfaces_transport_errors() {
    let stub = HttpStub::start(|_, _| (200, chat_reply("no verdict")));
    let e = VlmEvaluator::new(ChatClient::new(stub.url.clone(), "m", None), TemplateSet::builtin(), false, 1);
    let p = Program::initial(DomainTag::ToyTexture, "output 0").unwrap();
    let s = state([0; 3]);
    let i = Intent::new("x").unwrap();
    let c = Contender { program: &p, state: &s };
    let choice = e.compare(c, c, &i).unwrap();
    assert_eq!((choice.winner, choice.queries_used), (Winner::First, 2));

    let stub = HttpStub::start(|_, _| (401, "{}".into()));
    let e = VlmEvaluator::new(ChatClient::new(stub.url.clone(), "m", None), TemplateSet::builtin(), false, 0);
    assert!(matches!(e.compare(c, c, &i), Err(BackendError::Auth(_))));
}

#[test]
fn full_refinement_through_chat_backends() {
    let stub = HttpStub::start(|_, body| {
        let text = if body.contains("CHOICE") {
            "CHOICE: 1".to_string()
        } else {
            "```\noutput rgb(0.2, 0.3, 0.4)\n```".to_string()
        };
        (200, chat_reply(&text))
    });
    let client = ChatClient::new(stub.url.clone(), "m", Some("k".into()));
    let g = VlmGenerator::new(client.clone(), TemplateSet::builtin());
    let e = VlmEvaluator::new(client, TemplateSet::builtin(), true, 0);
    let p = Program::initial(DomainTag::ToyTexture, "output rgb(0.1, 0.1, 0.1)").unwrap();
    let cfg = SearchConfig::new(2, 3);
    let out = refine(
        &cfg,
        &p,
        &Intent::new("slate blue").unwrap(),
        &Backends {
            executor: &ToyExecutor,
            generator: &g,
            evaluator: &e,
            imaginer: None,
        },
        &RefineOptions {
            params: RenderParams::new(8, 8, 0),
            ..RefineOptions::default()
        },
    )
    .unwrap();
    assert_eq!(out.trace.generator_calls, 6);
    assert_eq!(out.trace.evaluator_queries, 6);
}

#[test]
fn image_generation_endpoint() {
    let png = Raster::filled(3, 3, [10, 200, 30]).unwrap().to_png().unwrap();
    let b64 = STANDARD.encode(png);
    let stub = HttpStub::start(move |_, _| {
        (200, serde_json::json!({"data": [{"b64_json": b64}]}).to_string())
    });
    let gen = HttpImageGen::new(stub.url.clone(), "img", None);
    let i = imagine(&gen, &Intent::new("green moss").unwrap(), true, 1).unwrap();
    assert_eq!(i.imagined_images()[0].pixel(1, 1), [10, 200, 30]);
    let req: Value = serde_json::from_str(&stub.bodies()[0]).unwrap();
    assert_eq!(req["prompt"], "green moss");
}
