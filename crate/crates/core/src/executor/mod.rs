//! Program execution: `programs -> VisualState`.
//!
//! [`ToyExecutor`] runs the built-in texture language in process. Remote
//! executors speak the newline-delimited JSON protocol in [`wire`] over a
//! subprocess's stdio or HTTP. [`CachedExecutor`] memoizes any of them.

mod remote;
mod server;
pub mod wire;

pub use remote::{Connection, HttpExecutor, SubprocessExecutor, DEFAULT_TIMEOUT};
pub use server::{handle_message, serve, CAPABILITIES};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::{self, DslError, RenderParams, Role};
use crate::model::{DomainTag, Program, VisualState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecErrorKind {
    Parse,
    Type,
    Runtime,
    Protocol,
    Timeout,
    Internal,
}

impl ExecErrorKind {
    /// Deterministic failures that will recur on identical input.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            ExecErrorKind::Parse | ExecErrorKind::Type | ExecErrorKind::Runtime
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?} error: {message}")]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub message: String,
}

impl ExecError {
    pub fn new(kind: ExecErrorKind, message: impl Into<String>) -> Self {
        let mut message = message.into();
        if message.is_empty() {
            message = format!("{kind:?} error").to_lowercase();
        }
        Self { kind, message }
    }

    pub fn protocol(message: impl Into<String>) -> Self {
        Self::new(ExecErrorKind::Protocol, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ExecErrorKind::Internal, message)
    }
}

impl From<DslError> for ExecError {
    fn from(e: DslError) -> Self {
        let kind = match e {
            DslError::Parse { .. } => ExecErrorKind::Parse,
            DslError::Type { .. } | DslError::UnknownIdentifier { .. } | DslError::Arity { .. } => {
                ExecErrorKind::Type
            }
            DslError::Runtime { .. } => ExecErrorKind::Runtime,
        };
        ExecError::new(kind, e.to_string())
    }
}

/// Executes an ordered list of programs as one composite render.
pub trait Executor: Send + Sync {
    fn execute(&self, programs: &[Program], params: &RenderParams)
        -> Result<VisualState, ExecError>;
}

impl<E: Executor + ?Sized> Executor for &E {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        (**self).execute(programs, params)
    }
}

impl<E: Executor + ?Sized> Executor for Box<E> {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        (**self).execute(programs, params)
    }
}

impl<E: Executor + ?Sized> Executor for std::sync::Arc<E> {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        (**self).execute(programs, params)
    }
}

/// In-process executor for `toy_texture` / `toy_post` programs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyExecutor;

impl ToyExecutor {
    pub fn render_sources(
        &self,
        programs: &[(DomainTag, &str)],
        params: &RenderParams,
    ) -> Result<crate::raster::Raster, ExecError> {
        if programs.is_empty() {
            return Err(ExecError::internal("no programs to execute"));
        }
        let mut parsed = Vec::with_capacity(programs.len());
        for (i, (domain, source)) in programs.iter().enumerate() {
            let role = match (i, domain) {
                (0, DomainTag::ToyTexture) => Role::Texture,
                (0, other) => {
                    return Err(ExecError::internal(format!(
                        "first program must be toy_texture, got {other}"
                    )))
                }
                (_, DomainTag::ToyPost) => Role::Post,
                (_, other) => {
                    return Err(ExecError::internal(format!(
                        "program {} must be toy_post, got {other}",
                        i + 1
                    )))
                }
            };
            parsed.push(dsl::parse_as(source, role)?);
        }
        Ok(dsl::render(&parsed, *params)?)
    }
}

impl Executor for ToyExecutor {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        let sources: Vec<_> = programs.iter().map(|p| (p.domain(), p.source())).collect();
        let image = self.render_sources(&sources, params)?;
        Ok(VisualState {
            image,
            seed: params.seed,
            program_ids: programs.iter().map(|p| p.id().to_string()).collect(),
        })
    }
}

type CacheKey = [u8; 32];

fn cache_key(programs: &[Program], params: &RenderParams) -> CacheKey {
    let mut h = Sha256::new();
    for p in programs {
        h.update(p.domain().as_str().as_bytes());
        h.update([0]);
        h.update((p.source().len() as u64).to_le_bytes());
        h.update(p.source().as_bytes());
    }
    h.update(params.width.to_le_bytes());
    h.update(params.height.to_le_bytes());
    h.update(params.seed.to_le_bytes());
    h.finalize().into()
}

/// Memoizes renders by content hash of (domain, source) pairs and render
/// parameters. Transient failures (protocol, timeout) are never cached.
pub struct CachedExecutor<E> {
    inner: E,
    cache: Mutex<HashMap<CacheKey, Result<crate::raster::Raster, ExecError>>>,
    runs: AtomicU64,
    hits: AtomicU64,
}

impl<E: Executor> CachedExecutor<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
            runs: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    /// Calls that reached the wrapped executor.
    pub fn runs(&self) -> u64 {
        self.runs.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Executor> Executor for CachedExecutor<E> {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        let key = cache_key(programs, params);
        let ids = || programs.iter().map(|p| p.id().to_string()).collect();
        let cached = self.cache.lock().expect("cache lock").get(&key).cloned();
        if let Some(hit) = cached {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return hit.map(|image| VisualState {
                image,
                seed: params.seed,
                program_ids: ids(),
            });
        }
        self.runs.fetch_add(1, Ordering::Relaxed);
        let result = self.inner.execute(programs, params);
        let entry = match &result {
            Ok(s) => Some(Ok(s.image.clone())),
            Err(e) if e.kind.is_deterministic() => Some(Err(e.clone())),
            Err(_) => None,
        };
        if let Some(entry) = entry {
            self.cache.lock().expect("cache lock").insert(key, entry);
        }
        result.map(|mut s| {
            s.program_ids = ids();
            s
        })
    }
}

/// Executor backend selection, as accepted by `VREFINE_EXECUTOR` and the CLI:
/// `toy`, `subprocess:<command>`, or `http:<url>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutorSpec {
    Toy,
    Subprocess(String),
    Http(String),
}

impl FromStr for ExecutorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "toy" {
            Ok(ExecutorSpec::Toy)
        } else if let Some(cmd) = s.strip_prefix("subprocess:") {
            if cmd.trim().is_empty() {
                return Err("subprocess executor needs a command".into());
            }
            Ok(ExecutorSpec::Subprocess(cmd.to_string()))
        } else if let Some(url) = s.strip_prefix("http:") {
            // accept both `http:http://host` and `http://host`
            let url = if url.starts_with("//") {
                format!("http:{url}")
            } else {
                url.to_string()
            };
            Ok(ExecutorSpec::Http(url))
        } else if s.starts_with("https:") {
            Ok(ExecutorSpec::Http(s.to_string()))
        } else {
            Err(format!(
                "unknown executor `{s}` (expected toy, subprocess:<cmd>, or http:<url>)"
            ))
        }
    }
}

impl fmt::Display for ExecutorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecutorSpec::Toy => f.write_str("toy"),
            ExecutorSpec::Subprocess(c) => write!(f, "subprocess:{c}"),
            ExecutorSpec::Http(u) => write!(f, "http:{u}"),
        }
    }
}

impl ExecutorSpec {
    pub const ENV: &'static str = "VREFINE_EXECUTOR";

    pub fn from_env() -> Result<Option<Self>, String> {
        match std::env::var(Self::ENV) {
            Ok(v) if !v.is_empty() => v.parse().map(Some),
            _ => Ok(None),
        }
    }

    /// Instantiates the backend. `pool` bounds the number of concurrent
    /// subprocess connections.
    pub fn build(&self, pool: usize, timeout: Duration) -> Box<dyn Executor> {
        match self {
            ExecutorSpec::Toy => Box::new(ToyExecutor),
            ExecutorSpec::Subprocess(cmd) => {
                Box::new(SubprocessExecutor::new(cmd.clone(), pool).with_timeout(timeout))
            }
            ExecutorSpec::Http(url) => Box::new(HttpExecutor::new(url.clone()).with_timeout(timeout)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(src: &str) -> Program {
        Program::initial(DomainTag::ToyTexture, src).unwrap()
    }

    #[test]
    fn toy_matches_dsl_render() {
        let p = prog("output mix(rgb(0,0,0), rgb(1,1,1), noise(4.0, 0))");
        let params = RenderParams::new(16, 16, 3);
        let s = ToyExecutor.execute(&[p.clone()], &params).unwrap();
        let direct = dsl::render(&[dsl::parse(p.source()).unwrap()], params).unwrap();
        assert_eq!(s.image, direct);
        assert_eq!(s.program_ids, vec![p.id().to_string()]);
        assert_eq!(s.seed, 3);
    }

    #[test]
    fn unknown_function_is_classified() {
        let e = ToyExecutor
            .execute(&[prog("output nosuchfn(1)")], &RenderParams::default())
            .unwrap_err();
        assert!(matches!(e.kind, ExecErrorKind::Type | ExecErrorKind::Parse));
        assert!(!e.message.is_empty());
    }

    #[test]
    fn domain_order_enforced() {
        let post = Program::initial(DomainTag::ToyPost, "output exposure(input, 1)").unwrap();
        let e = ToyExecutor
            .execute(&[post.clone()], &RenderParams::default())
            .unwrap_err();
        assert_eq!(e.kind, ExecErrorKind::Internal);
        let tex = prog("output rgb(0.25,0.25,0.25)");
        let s = ToyExecutor
            .execute(&[tex, post], &RenderParams::new(1, 1, 0))
            .unwrap();
        assert_eq!(s.image.pixel(0, 0), [128, 128, 128]);
        assert!(ToyExecutor.execute(&[], &RenderParams::default()).is_err());
    }

    #[test]
    fn cache_hit_skips_inner_run() {
        let exec = CachedExecutor::new(ToyExecutor);
        let params = RenderParams::new(8, 8, 0);
        let a = prog("output noise(3, 1)");
        let first = exec.execute(&[a.clone()], &params).unwrap();
        assert_eq!(exec.runs(), 1);
        let second = exec.execute(&[a.clone()], &params).unwrap();
        assert_eq!(exec.runs(), 1);
        assert_eq!(exec.hits(), 1);
        assert_eq!(first, second);

        // same source under a different parent: cached pixels, new ids
        let child = Program::edit(&a, a.source(), crate::model::EditMode::Tweak).unwrap();
        let third = exec.execute(&[child.clone()], &params).unwrap();
        assert_eq!(exec.runs(), 1);
        assert_eq!(third.image, first.image);
        assert_eq!(third.program_ids, vec![child.id().to_string()]);
    }

    #[test]
    fn cache_is_transparent() {
        let exec = CachedExecutor::new(ToyExecutor);
        let params = RenderParams::new(8, 8, 9);
        for src in ["output voronoi(5, 2, 1)", "output nope", "output stripes(3, 45)"] {
            let p = prog(src);
            let plain = ToyExecutor.execute(&[p.clone()], &params);
            assert_eq!(exec.execute(&[p.clone()], &params), plain);
            assert_eq!(exec.execute(&[p], &params), plain);
        }
    }

    #[test]
    fn executor_spec_parsing() {
        assert_eq!("toy".parse(), Ok(ExecutorSpec::Toy));
        assert_eq!(
            "subprocess:vrefine serve-toy".parse(),
            Ok(ExecutorSpec::Subprocess("vrefine serve-toy".into()))
        );
        assert_eq!(
            "http:http://localhost:9000".parse(),
            Ok(ExecutorSpec::Http("http://localhost:9000".into()))
        );
        assert_eq!(
            "http://localhost:9000".parse(),
            Ok(ExecutorSpec::Http("http://localhost:9000".into()))
        );
        assert!("blender".parse::<ExecutorSpec>().is_err());
        assert!("subprocess:".parse::<ExecutorSpec>().is_err());
    }
}
