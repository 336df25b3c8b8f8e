use super::ast::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Noise,
    Voronoi,
    Checker,
    Stripes,
    Clamp,
    Mix,
    Rgb,
    Ramp,
    Exposure,
    Tint,
    Contrast,
}

pub(crate) enum SigError {
    Arity { expected: String },
    Type(String),
}

use Type::{Color as C, Scalar as S};

impl Builtin {
    pub const ALL: [Builtin; 11] = [
        Builtin::Noise,
        Builtin::Voronoi,
        Builtin::Checker,
        Builtin::Stripes,
        Builtin::Clamp,
        Builtin::Mix,
        Builtin::Rgb,
        Builtin::Ramp,
        Builtin::Exposure,
        Builtin::Tint,
        Builtin::Contrast,
    ];

    /// Scalar pattern generators that take only scalar parameters.
    pub const PATTERNS: [Builtin; 4] = [
        Builtin::Noise,
        Builtin::Voronoi,
        Builtin::Checker,
        Builtin::Stripes,
    ];

    pub fn from_name(name: &str) -> Option<Builtin> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Noise => "noise",
            Builtin::Voronoi => "voronoi",
            Builtin::Checker => "checker",
            Builtin::Stripes => "stripes",
            Builtin::Clamp => "clamp",
            Builtin::Mix => "mix",
            Builtin::Rgb => "rgb",
            Builtin::Ramp => "ramp",
            Builtin::Exposure => "exposure",
            Builtin::Tint => "tint",
            Builtin::Contrast => "contrast",
        }
    }

    /// Only legal in post-process programs.
    pub fn is_post_only(self) -> bool {
        matches!(self, Builtin::Exposure | Builtin::Tint | Builtin::Contrast)
    }

    /// Parameter count for fixed-arity builtins.
    pub fn fixed_arity(self) -> Option<usize> {
        self.fixed_params().map(|p| p.len())
    }

    fn fixed_params(self) -> Option<&'static [Type]> {
        Some(match self {
            Builtin::Noise => &[S, S],
            Builtin::Voronoi => &[S, S, S],
            Builtin::Checker => &[S],
            Builtin::Stripes => &[S, S],
            Builtin::Clamp => &[S, S, S],
            Builtin::Rgb => &[S, S, S],
            Builtin::Exposure => &[C, S],
            Builtin::Tint => &[C, C],
            Builtin::Contrast => &[C, S],
            Builtin::Mix | Builtin::Ramp => return None,
        })
    }

    pub(crate) fn check(self, args: &[Type]) -> Result<Type, SigError> {
        let name = self.name();
        let mismatch = |i: usize, want: Type, got: Type| {
            SigError::Type(format!(
                "argument {} of `{name}` must be {want}, found {got}",
                i + 1
            ))
        };
        match self {
            Builtin::Mix => {
                if args.len() != 3 {
                    return Err(SigError::Arity {
                        expected: "3".into(),
                    });
                }
                if args[0] != args[1] {
                    return Err(SigError::Type(format!(
                        "`mix` operands must share a type, found {} and {}",
                        args[0], args[1]
                    )));
                }
                if args[2] != S {
                    return Err(mismatch(2, S, args[2]));
                }
                Ok(args[0])
            }
            Builtin::Ramp => {
                if args.len() < 3 || args.len() % 2 == 0 {
                    return Err(SigError::Arity {
                        expected: "t followed by one or more (position, color) pairs".into(),
                    });
                }
                if args[0] != S {
                    return Err(mismatch(0, S, args[0]));
                }
                for (i, &t) in args.iter().enumerate().skip(1) {
                    let want = if i % 2 == 1 { S } else { C };
                    if t != want {
                        return Err(mismatch(i, want, t));
                    }
                }
                Ok(C)
            }
            _ => {
                let params = self.fixed_params().unwrap_or(&[]);
                if params.len() != args.len() {
                    return Err(SigError::Arity {
                        expected: params.len().to_string(),
                    });
                }
                for (i, (&want, &got)) in params.iter().zip(args).enumerate() {
                    if want != got {
                        return Err(mismatch(i, want, got));
                    }
                }
                Ok(match self {
                    Builtin::Rgb | Builtin::Exposure | Builtin::Tint | Builtin::Contrast => C,
                    _ => S,
                })
            }
        }
    }
}
