//! Domain types shared by every stage of a refinement run.

mod config;
mod trace;

pub use config::{validate_config, Budget, ConfigError, Flags, SearchConfig};
pub use trace::{
    CandidateRecord, EditCandidate, IterationRecord, MultiTrace, SearchTrace, SubRefinement,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::raster::{hex_lower, Raster};

/// Which environment a program targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Material,
    Lighting,
    Geometry,
    ToyTexture,
    ToyPost,
}

impl DomainTag {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::Material => "material",
            DomainTag::Lighting => "lighting",
            DomainTag::Geometry => "geometry",
            DomainTag::ToyTexture => "toy_texture",
            DomainTag::ToyPost => "toy_post",
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "material" => Ok(DomainTag::Material),
            "lighting" => Ok(DomainTag::Lighting),
            "geometry" => Ok(DomainTag::Geometry),
            "toy_texture" => Ok(DomainTag::ToyTexture),
            "toy_post" => Ok(DomainTag::ToyPost),
            other => Err(format!("unknown domain tag `{other}`")),
        }
    }
}

/// The edit family an iteration is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditMode {
    Tweak,
    Leap,
}

impl EditMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EditMode::Tweak => "tweak",
            EditMode::Leap => "leap",
        }
    }
}

impl fmt::Display for EditMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Initial,
    Tweak,
    Leap,
}

impl From<EditMode> for EditKind {
    fn from(m: EditMode) -> Self {
        match m {
            EditMode::Tweak => EditKind::Tweak,
            EditMode::Leap => EditKind::Leap,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("program source is empty")]
    EmptySource,
}

/// One editable visual program.
///
/// The id is content-addressed: the first 16 hex digits of
/// `sha256(source ++ "\0" ++ parent_id)`, so replays reproduce ids exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    id: String,
    domain: DomainTag,
    source: String,
    parent_id: Option<String>,
    edit_kind: EditKind,
}

impl Program {
    /// A root program with no parent.
    pub fn initial(domain: DomainTag, source: impl Into<String>) -> Result<Self, ProgramError> {
        Self::build(domain, source.into(), None, EditKind::Initial)
    }

    /// An edit of `parent` produced in `mode`.
    pub fn edit(
        parent: &Program,
        source: impl Into<String>,
        mode: EditMode,
    ) -> Result<Self, ProgramError> {
        Self::build(
            parent.domain,
            source.into(),
            Some(parent.id.clone()),
            mode.into(),
        )
    }

    fn build(
        domain: DomainTag,
        source: String,
        parent_id: Option<String>,
        edit_kind: EditKind,
    ) -> Result<Self, ProgramError> {
        if source.trim().is_empty() {
            return Err(ProgramError::EmptySource);
        }
        let id = content_id(&source, parent_id.as_deref());
        Ok(Self {
            id,
            domain,
            source,
            parent_id,
            edit_kind,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn parent_id(&self) -> Option<&str> {
        self.parent_id.as_deref()
    }

    pub fn edit_kind(&self) -> EditKind {
        self.edit_kind
    }
}

fn content_id(source: &str, parent: Option<&str>) -> String {
    let mut h = Sha256::new();
    h.update(source.as_bytes());
    h.update([0u8]);
    h.update(parent.unwrap_or("").as_bytes());
    hex_lower(&h.finalize()[..8])
}

/// A rendered result of executing an ordered list of programs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualState {
    pub image: Raster,
    pub seed: u64,
    pub program_ids: Vec<String>,
}

impl VisualState {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntentError {
    #[error("intent text is empty")]
    EmptyText,
    #[error("imagined images cannot coexist with user reference images")]
    ImaginedWithReferences,
}

/// What the user wants: a description plus optional image references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    reference_images: Vec<Raster>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    imagined_images: Vec<Raster>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expanded_text: Option<String>,
}

impl Intent {
    pub fn new(text: impl Into<String>) -> Result<Self, IntentError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(IntentError::EmptyText);
        }
        Ok(Self {
            text,
            reference_images: Vec::new(),
            imagined_images: Vec::new(),
            expanded_text: None,
        })
    }

    pub fn with_references(mut self, images: Vec<Raster>) -> Result<Self, IntentError> {
        if !images.is_empty() && !self.imagined_images.is_empty() {
            return Err(IntentError::ImaginedWithReferences);
        }
        self.reference_images = images;
        Ok(self)
    }

    pub fn with_imagined(mut self, images: Vec<Raster>) -> Result<Self, IntentError> {
        if !images.is_empty() && !self.reference_images.is_empty() {
            return Err(IntentError::ImaginedWithReferences);
        }
        self.imagined_images = images;
        Ok(self)
    }

    pub fn with_expanded_text(mut self, expanded: impl Into<String>) -> Self {
        self.expanded_text = Some(expanded.into());
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn expanded_text(&self) -> Option<&str> {
        self.expanded_text.as_deref()
    }

    /// The most detailed description available.
    pub fn best_text(&self) -> &str {
        self.expanded_text.as_deref().unwrap_or(&self.text)
    }

    pub fn reference_images(&self) -> &[Raster] {
        &self.reference_images
    }

    pub fn imagined_images(&self) -> &[Raster] {
        &self.imagined_images
    }

    /// User references followed by imagined references; both are treated the
    /// same by generators and evaluators.
    pub fn guidance_images(&self) -> impl Iterator<Item = &Raster> {
        self.reference_images.iter().chain(&self.imagined_images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_invariants() {
        assert_eq!(
            Program::initial(DomainTag::ToyTexture, "  \n"),
            Err(ProgramError::EmptySource)
        );
        let p = Program::initial(DomainTag::ToyTexture, "output rgb(1,0,0)").unwrap();
        assert_eq!(p.parent_id(), None);
        assert_eq!(p.edit_kind(), EditKind::Initial);
        assert_eq!(p.id().len(), 16);

        let q = Program::edit(&p, "output rgb(1,0,0)", EditMode::Tweak).unwrap();
        assert_eq!(q.parent_id(), Some(p.id()));
        assert_eq!(q.edit_kind(), EditKind::Tweak);
        // same source, different parent: different identity
        assert_ne!(q.id(), p.id());
    }

    #[test]
    fn ids_are_content_addressed() {
        let a = Program::initial(DomainTag::ToyTexture, "output rgb(0,0,1)").unwrap();
        let b = Program::initial(DomainTag::ToyTexture, "output rgb(0,0,1)").unwrap();
        assert_eq!(a.id(), b.id());
    }

    #[test]
    fn intent_invariants() {
        assert_eq!(Intent::new(""), Err(IntentError::EmptyText));
        let img = Raster::filled(1, 1, [0, 0, 0]).unwrap();
        let i = Intent::new("red")
            .unwrap()
            .with_references(vec![img.clone()])
            .unwrap();
        assert_eq!(
            i.with_imagined(vec![img]),
            Err(IntentError::ImaginedWithReferences)
        );
    }
}
