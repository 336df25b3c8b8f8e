//! Versioned prompt templates. Built-in copies live in `crates/core/templates/`
//! and any of them can be overridden from a directory of same-named files.
//!
//! Placeholders are written `{name}` and substituted verbatim.

use std::path::Path;

use crate::backend::BackendError;
use crate::model::EditMode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub generator_tweak: String,
    pub generator_leap: String,
    pub generator_code_only: String,
    pub evaluator_pairwise: String,
    pub evaluator_code_only: String,
    pub expand_intent: String,
}

const FILES: [&str; 6] = [
    "generator_tweak.txt",
    "generator_leap.txt",
    "generator_code_only.txt",
    "evaluator_pairwise.txt",
    "evaluator_code_only.txt",
    "expand_intent.txt",
];

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            generator_tweak: include_str!("../templates/generator_tweak.txt").into(),
            generator_leap: include_str!("../templates/generator_leap.txt").into(),
            generator_code_only: include_str!("../templates/generator_code_only.txt").into(),
            evaluator_pairwise: include_str!("../templates/evaluator_pairwise.txt").into(),
            evaluator_code_only: include_str!("../templates/evaluator_code_only.txt").into(),
            expand_intent: include_str!("../templates/expand_intent.txt").into(),
        }
    }

    /// Built-ins with any files present in `dir` substituted.
    pub fn load_dir(dir: &Path) -> Result<Self, BackendError> {
        if !dir.is_dir() {
            return Err(BackendError::Config(format!(
                "template directory {} does not exist",
                dir.display()
            )));
        }
        let mut set = Self::builtin();
        for name in FILES {
            let path = dir.join(name);
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| BackendError::Io(format!("{}: {e}", path.display())))?;
                *set.slot_mut(name) = text;
            }
        }
        Ok(set)
    }

    fn slot_mut(&mut self, file: &str) -> &mut String {
        match file {
            "generator_tweak.txt" => &mut self.generator_tweak,
            "generator_leap.txt" => &mut self.generator_leap,
            "generator_code_only.txt" => &mut self.generator_code_only,
            "evaluator_pairwise.txt" => &mut self.evaluator_pairwise,
            "evaluator_code_only.txt" => &mut self.evaluator_code_only,
            _ => &mut self.expand_intent,
        }
    }

    /// Template for the edit generator given the mode and whether images are
    /// sent.
    pub fn generator(&self, mode: EditMode, vision: bool) -> &str {
        match (vision, mode) {
            (false, _) => &self.generator_code_only,
            (true, EditMode::Tweak) => &self.generator_tweak,
            (true, EditMode::Leap) => &self.generator_leap,
        }
    }
}

/// Substitutes `{key}` placeholders.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(template.to_string(), |acc, (k, v)| {
        acc.replace(&format!("{{{k}}}"), v)
    })
}
