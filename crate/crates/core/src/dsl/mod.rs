//! A small procedural-texture language.
//!
//! Programs are a list of `name = expr` bindings followed by `output expr`.
//! Expressions are either `Scalar` or `Color`; see `docs/dsl.md` for the
//! grammar and builtin table. Rendering is a pure function of
//! `(programs, width, height, seed)`.

mod ast;
mod builtins;
mod lexer;
mod mutate;
mod noise;
mod parser;
mod render;

pub use ast::{format_number, Ast, BinOp, Expr, Type};
pub use builtins::Builtin;
pub use lexer::{tokenize, Token, TokenKind};
pub use mutate::{
    mutate_leap, mutate_leap_with_kind, mutate_tweak, round4, LeapKind, MAX_FRESH_DEPTH,
    TWEAK_PROBABILITY,
};
pub use noise::{fade, lattice_hash, lattice_value, value_noise, voronoi, VORONOI_Y_SALT};
pub use parser::{binding_types, infer, parse, parse_as, Parsed, Role, INPUT};
pub use render::{offset_seed, quantize, render, RenderParams};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DslError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("type error at {line}:{col}: {message}")]
    Type {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("`{name}` at {line}:{col} expects {expected} arguments, found {found}")]
    Arity {
        line: usize,
        col: usize,
        name: String,
        expected: String,
        found: usize,
    },
    #[error("runtime error: {message}")]
    Runtime { message: String },
}

impl DslError {
    pub(crate) fn parse(line: usize, col: usize, message: impl Into<String>) -> Self {
        DslError::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    pub(crate) fn runtime(message: impl Into<String>) -> Self {
        DslError::Runtime {
            message: message.into(),
        }
    }
}

/// True iff `q` differs from `p` only in the values of number literals:
/// same token count, same token kinds in the same positions, and identical
/// non-numeric tokens. Comments and whitespace are ignored.
pub fn is_tweak(p: &str, q: &str) -> Result<bool, DslError> {
    let a = parse(p)?;
    let b = parse(q)?;
    Ok(a.tokens.len() == b.tokens.len()
        && a.tokens.iter().zip(&b.tokens).all(|(x, y)| match (&x.kind, &y.kind) {
            (TokenKind::Number(_), TokenKind::Number(_)) => true,
            (k1, k2) => k1 == k2,
        }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tweak_examples() {
        let p = "scale = 2.0\noutput noise(scale, 0)";
        let q = "scale = 3.5\noutput noise(scale, 0)";
        assert!(is_tweak(p, q).unwrap());
        assert!(is_tweak(p, p).unwrap());
        let wrapped = "scale = 2.0\noutput mix(noise(scale, 0), 0, 0.5)";
        assert!(!is_tweak(p, wrapped).unwrap());
    }

    #[test]
    fn tweak_ignores_layout_and_comments() {
        assert!(is_tweak("output noise(1,2)", "# c\noutput  noise( 3 , 4 )").unwrap());
        assert!(!is_tweak("output noise(1,2)", "output voronoi(1,2,3)").unwrap());
    }

    #[test]
    fn tweak_propagates_parse_errors() {
        assert!(is_tweak("output", "output 1").is_err());
    }
}
