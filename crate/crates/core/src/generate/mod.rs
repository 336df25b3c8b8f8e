//! Edit generators: propose `b` variants of the incumbent program.

use crate::backend::{BackendError, ChatClient, Part};
use crate::dsl;
use crate::model::{EditMode, Intent, Program, VisualState};
use crate::par::par_map;
use crate::rng::derive_seed;
use crate::templates::{fill, TemplateSet};

/// Everything a generator may condition one proposal on.
#[derive(Debug, Clone, Copy)]
pub struct ProposalContext<'a> {
    pub incumbent: &'a Program,
    pub state: &'a VisualState,
    pub intent: &'a Intent,
    pub mode: EditMode,
    /// Per-iteration seed chosen by the engine.
    pub seed: u64,
    /// Attach the current render and intent images to the request.
    pub vision: bool,
}

pub trait Generator: Send + Sync {
    /// One proposal for `slot`. `attempt` is 0 for the first request and
    /// counts regenerations after failures.
    fn propose_one(
        &self,
        ctx: &ProposalContext<'_>,
        slot: usize,
        attempt: u32,
    ) -> Result<String, BackendError>;

    /// Semantic upsampling of a terse intent.
    fn expand_intent(&self, intent: &Intent) -> Result<Intent, BackendError>;
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn propose_one(&self, ctx: &ProposalContext<'_>, slot: usize, attempt: u32) -> Result<String, BackendError> {
        (**self).propose_one(ctx, slot, attempt)
    }

    fn expand_intent(&self, intent: &Intent) -> Result<Intent, BackendError> {
        (**self).expand_intent(intent)
    }
}

impl<G: Generator + ?Sized> Generator for &G {
    fn propose_one(&self, ctx: &ProposalContext<'_>, slot: usize, attempt: u32) -> Result<String, BackendError> {
        (**self).propose_one(ctx, slot, attempt)
    }

    fn expand_intent(&self, intent: &Intent) -> Result<Intent, BackendError> {
        (**self).expand_intent(intent)
    }
}

/// Requests `b` proposals, concurrently up to `max_parallel`, returned in
/// slot order.
pub fn propose(
    generator: &dyn Generator,
    ctx: &ProposalContext<'_>,
    b: usize,
    max_parallel: usize,
) -> Vec<Result<String, BackendError>> {
    par_map(b, max_parallel, |slot| generator.propose_one(ctx, slot, 0))
}

/// Offline generator built on the seeded DSL mutators. Proposals are a pure
/// function of (incumbent source, seeds, mode, slot, attempt).
#[derive(Debug, Clone, Copy, Default)]
pub struct MockMutationGenerator {
    pub seed: u64,
}

impl MockMutationGenerator {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn proposal_seed(&self, ctx_seed: u64, mode: EditMode, slot: usize, attempt: u32) -> u64 {
        let mode_label = match mode {
            EditMode::Tweak => 1,
            EditMode::Leap => 2,
        };
        derive_seed(self.seed, &[ctx_seed, mode_label, slot as u64, attempt as u64])
    }
}

impl Generator for MockMutationGenerator {
    fn propose_one(&self, ctx: &ProposalContext<'_>, slot: usize, attempt: u32) -> Result<String, BackendError> {
        let parsed = dsl::parse(ctx.incumbent.source())
            .map_err(|e| BackendError::Parse(format!("incumbent does not parse: {e}")))?;
        let seed = self.proposal_seed(ctx.seed, ctx.mode, slot, attempt);
        Ok(match ctx.mode {
            EditMode::Tweak => dsl::mutate_tweak(&parsed, seed),
            EditMode::Leap => dsl::mutate_leap(&parsed, seed),
        })
    }

    fn expand_intent(&self, intent: &Intent) -> Result<Intent, BackendError> {
        check_intent(intent)?;
        Ok(intent.clone().with_expanded_text(intent.text()))
    }
}

fn check_intent(intent: &Intent) -> Result<(), BackendError> {
    if intent.text().trim().is_empty() {
        return Err(BackendError::Precondition("intent text is empty".into()));
    }
    Ok(())
}

/// Generator backed by a chat VLM. Diversity across the `b` proposals comes
/// from sampling temperature.
#[derive(Debug, Clone)]
pub struct VlmGenerator {
    client: ChatClient,
    templates: TemplateSet,
}

impl VlmGenerator {
    pub fn new(client: ChatClient, templates: TemplateSet) -> Self {
        Self { client, templates }
    }

    /// The multimodal prompt for one proposal.
    pub fn prompt(&self, ctx: &ProposalContext<'_>) -> Vec<Part> {
        let images: Vec<_> = if ctx.vision {
            std::iter::once(ctx.state.image.clone())
                .chain(ctx.intent.guidance_images().cloned())
                .collect()
        } else {
            Vec::new()
        };
        let has_images = if images.is_empty() { "no" } else { "yes" };
        let text = fill(
            self.templates.generator(ctx.mode, ctx.vision),
            &[
                ("intent_text", ctx.intent.best_text()),
                ("program_source", ctx.incumbent.source()),
                ("mode", ctx.mode.as_str()),
                ("has_images", has_images),
            ],
        );
        std::iter::once(Part::Text(text))
            .chain(images.into_iter().map(Part::Image))
            .collect()
    }
}

impl Generator for VlmGenerator {
    fn propose_one(&self, ctx: &ProposalContext<'_>, _slot: usize, _attempt: u32) -> Result<String, BackendError> {
        let reply = self.client.complete(&self.prompt(ctx))?;
        Ok(extract_code(&reply))
    }

    fn expand_intent(&self, intent: &Intent) -> Result<Intent, BackendError> {
        check_intent(intent)?;
        let prompt = fill(&self.templates.expand_intent, &[("intent_text", intent.text())]);
        let reply = self.client.complete(&[Part::Text(prompt)])?;
        let expanded = reply.trim();
        if expanded.is_empty() {
            return Err(BackendError::Parse("empty expansion".into()));
        }
        Ok(intent.clone().with_expanded_text(expanded))
    }
}

/// Body of the first fenced code block, or the whole trimmed response when
/// there is none. An info string after the opening fence is skipped; an
/// unterminated block runs to the end of the text.
pub fn extract_code(response: &str) -> String {
    let Some(open) = response.find("```") else {
        return response.trim().to_string();
    };
    let after = &response[open + 3..];
    let (body_start, inline) = match after.find('\n') {
        Some(nl) if !after[..nl].contains("```") => (nl + 1, false),
        _ => (0, true),
    };
    let body = &after[body_start..];
    let body = match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    };
    if inline {
        body.trim().to_string()
    } else {
        body.trim_end_matches(['\n', '\r', ' ', '\t']).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainTag;
    use crate::raster::Raster;

    #[test]
    fn extract_first_fence() {
        assert_eq!(
            extract_code("here you go: ```\noutput rgb(1,0,0)\n```"),
            "output rgb(1,0,0)"
        );
        assert_eq!(
            extract_code("a\n```dsl\nx = 1\noutput x\n```\nb\n```\nother\n```"),
            "x = 1\noutput x"
        );
        assert_eq!(extract_code("  output rgb(0,0,1)\n "), "output rgb(0,0,1)");
        assert_eq!(extract_code("```output 1```"), "output 1");
        assert_eq!(extract_code("text ```\noutput 2\n"), "output 2");
    }

    fn fixture() -> (Program, VisualState, Intent) {
        let p = Program::initial(
            DomainTag::ToyTexture,
            "n = noise(3.0, 1)\noutput mix(rgb(0.1,0.2,0.3), rgb(0.9,0.8,0.7), n)",
        )
        .unwrap();
        let s = VisualState {
            image: Raster::filled(2, 2, [0, 0, 0]).unwrap(),
            seed: 0,
            program_ids: vec![p.id().into()],
        };
        (p, s, Intent::new("marble").unwrap())
    }

    #[test]
    fn mock_tweaks_stay_in_neighborhood() {
        let (p, s, i) = fixture();
        let ctx = ProposalContext {
            incumbent: &p,
            state: &s,
            intent: &i,
            mode: EditMode::Tweak,
            seed: 17,
            vision: true,
        };
        let g = MockMutationGenerator::new(3);
        let out = propose(&g, &ctx, 8, 4);
        assert_eq!(out.len(), 8);
        for text in &out {
            assert!(dsl::is_tweak(p.source(), text.as_ref().unwrap()).unwrap());
        }
        // pure function of its inputs, independent of parallelism
        assert_eq!(out, propose(&g, &ctx, 8, 1));
    }

    #[test]
    fn mock_leap_parses() {
        let (p, s, i) = fixture();
        let ctx = ProposalContext {
            incumbent: &p,
            state: &s,
            intent: &i,
            mode: EditMode::Leap,
            seed: 5,
            vision: false,
        };
        let out = propose(&MockMutationGenerator::new(0), &ctx, 1, 1);
        dsl::parse(out[0].as_ref().unwrap()).unwrap();
    }

    #[test]
    fn mock_expand_echoes() {
        let i = Intent::new("damascus steel").unwrap();
        let e = MockMutationGenerator::new(0).expand_intent(&i).unwrap();
        assert_eq!(e.expanded_text(), Some("damascus steel"));
        assert_eq!(e.text(), "damascus steel");
    }

    #[test]
    fn vlm_prompt_respects_vision_flag() {
        let (p, s, i) = fixture();
        let i = i
            .with_references(vec![Raster::filled(2, 2, [9, 9, 9]).unwrap()])
            .unwrap();
        let g = VlmGenerator::new(ChatClient::new("http://unused", "m", None), TemplateSet::builtin());
        let mut ctx = ProposalContext {
            incumbent: &p,
            state: &s,
            intent: &i,
            mode: EditMode::Tweak,
            seed: 0,
            vision: true,
        };
        let parts = g.prompt(&ctx);
        assert_eq!(parts.iter().filter(|p| matches!(p, Part::Image(_))).count(), 2);
        match &parts[0] {
            Part::Text(t) => {
                assert!(t.contains(p.source()));
                assert!(t.contains("marble"));
                assert!(t.contains("TWEAK"));
            }
            _ => panic!("text first"),
        }
        ctx.vision = false;
        let parts = g.prompt(&ctx);
        assert_eq!(parts.len(), 1);
    }
}
