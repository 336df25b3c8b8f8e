use std::collections::HashMap;

use super::ast::{Ast, BinOp, Expr, Type};
use super::builtins::{Builtin, SigError};
use super::lexer::{tokenize, Token, TokenKind};
use super::DslError;

/// Upstream pixel color inside post-process programs.
pub const INPUT: &str = "input";

const MAX_NESTING: usize = 200;

/// Whether a program generates a texture or post-processes an upstream one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Texture,
    Post,
}

/// A type-checked program together with the token stream it came from.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub source: String,
    pub tokens: Vec<Token>,
    pub ast: Ast,
    pub output_type: Type,
    /// Uses `input` or a post-only builtin.
    pub uses_post_features: bool,
}

impl Parsed {
    pub fn role(&self) -> Role {
        if self.uses_post_features {
            Role::Post
        } else {
            Role::Texture
        }
    }
}

/// Parses and type-checks a program. Post-process features are accepted;
/// use [`parse_as`] to enforce a role.
pub fn parse(source: &str) -> Result<Parsed, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        env: HashMap::new(),
        uses_post: false,
        nesting: 0,
        eof: eof_position(source),
    };
    let (ast, output_type) = p.program()?;
    let uses_post = p.uses_post;
    Ok(Parsed {
        source: source.to_string(),
        tokens,
        ast,
        output_type,
        uses_post_features: uses_post,
    })
}

/// Parses a program and rejects post-process features in texture programs.
pub fn parse_as(source: &str, role: Role) -> Result<Parsed, DslError> {
    let parsed = parse(source)?;
    if role == Role::Texture && parsed.uses_post_features {
        let tok = parsed.tokens.iter().find(|t| match &t.kind {
            TokenKind::Ident(n) => {
                n == INPUT || Builtin::from_name(n).is_some_and(Builtin::is_post_only)
            }
            _ => false,
        });
        let (line, col) = tok.map(|t| (t.line, t.col)).unwrap_or((1, 1));
        return Err(DslError::Type {
            line,
            col,
            message: "`input` and post-process builtins are only valid in post-process programs"
                .into(),
        });
    }
    Ok(parsed)
}

fn eof_position(src: &str) -> (usize, usize) {
    let line = src.matches('\n').count() + 1;
    let col = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Infers the type of an expression from an already type-checked program.
/// Returns `None` for ill-typed input.
pub fn infer(e: &Expr, env: &HashMap<String, Type>) -> Option<Type> {
    match e {
        Expr::Number(_) => Some(Type::Scalar),
        Expr::Color(_) => Some(Type::Color),
        Expr::Ident(n) if n == INPUT => Some(Type::Color),
        Expr::Ident(n) => env.get(n).copied(),
        Expr::Call { name, args } => {
            let tys = args
                .iter()
                .map(|a| infer(a, env))
                .collect::<Option<Vec<_>>>()?;
            Builtin::from_name(name)?.check(&tys).ok()
        }
        Expr::Binary { lhs, rhs, .. } => Some(binary_type(infer(lhs, env)?, infer(rhs, env)?)),
    }
}

/// Binding name → type for every binding of a checked program.
pub fn binding_types(ast: &Ast) -> HashMap<String, Type> {
    let mut env = HashMap::new();
    for (name, e) in &ast.bindings {
        if let Some(t) = infer(e, &env) {
            env.insert(name.clone(), t);
        }
    }
    env
}

fn binary_type(a: Type, b: Type) -> Type {
    if a == Type::Scalar && b == Type::Scalar {
        Type::Scalar
    } else {
        Type::Color
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    env: HashMap<String, Type>,
    uses_post: bool,
    nesting: usize,
    eof: (usize, usize),
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.eof, |t| (t.line, t.col))
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        let (line, col) = self.here();
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), |t| t.kind.describe());
        DslError::parse(line, col, format!("expected {wanted}, found {found}"))
    }

    fn expect(&mut self, kind: TokenKind, wanted: &str) -> Result<(), DslError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn program(&mut self) -> Result<(Ast, Type), DslError> {
        let mut bindings = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(self.unexpected("a binding or `output`"));
            };
            match &tok.kind {
                TokenKind::Output => {
                    self.pos += 1;
                    let (output, ty) = self.expr()?;
                    if self.peek().is_some() {
                        return Err(self.unexpected("end of input after the output expression"));
                    }
                    return Ok((Ast { bindings, output }, ty));
                }
                TokenKind::Ident(name) => {
                    self.pos += 1;
                    if name == INPUT || Builtin::from_name(name).is_some() {
                        return Err(DslError::parse(
                            tok.line,
                            tok.col,
                            format!("`{name}` is reserved and cannot be bound"),
                        ));
                    }
                    if self.env.contains_key(name) {
                        return Err(DslError::parse(
                            tok.line,
                            tok.col,
                            format!("`{name}` is already bound"),
                        ));
                    }
                    self.expect(TokenKind::Equals, "`=`")?;
                    let (e, ty) = self.expr()?;
                    self.env.insert(name.clone(), ty);
                    bindings.push((name.clone(), e));
                }
                _ => return Err(self.unexpected("a binding or `output`")),
            }
        }
    }

    fn expr(&mut self) -> Result<(Expr, Type), DslError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            let (line, col) = self.here();
            return Err(DslError::parse(line, col, "expression nested too deeply"));
        }
        let r = self.sum();
        self.nesting -= 1;
        r
    }

    fn sum(&mut self) -> Result<(Expr, Type), DslError> {
        let (mut lhs, mut lt) = self.product()?;
        while matches!(self.peek(), Some(Token { kind: TokenKind::Plus, .. })) {
            self.pos += 1;
            let (rhs, rt) = self.product()?;
            lt = binary_type(lt, rt);
            lhs = Expr::Binary {
                op: BinOp::Add,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok((lhs, lt))
    }

    fn product(&mut self) -> Result<(Expr, Type), DslError> {
        let (mut lhs, mut lt) = self.atom()?;
        while matches!(self.peek(), Some(Token { kind: TokenKind::Star, .. })) {
            self.pos += 1;
            let (rhs, rt) = self.atom()?;
            lt = binary_type(lt, rt);
            lhs = Expr::Binary {
                op: BinOp::Mul,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok((lhs, lt))
    }

    fn atom(&mut self) -> Result<(Expr, Type), DslError> {
        let Some(tok) = self.bump() else {
            return Err(self.unexpected("an expression"));
        };
        match &tok.kind {
            TokenKind::Number(v) => Ok((Expr::Number(*v), Type::Scalar)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if matches!(self.peek(), Some(Token { kind: TokenKind::LParen, .. })) {
                    self.pos += 1;
                    self.call(tok, name)
                } else if name == INPUT {
                    self.uses_post = true;
                    Ok((Expr::Ident(name.clone()), Type::Color))
                } else if let Some(&ty) = self.env.get(name) {
                    Ok((Expr::Ident(name.clone()), ty))
                } else {
                    Err(DslError::UnknownIdentifier {
                        line: tok.line,
                        col: tok.col,
                        name: name.clone(),
                    })
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected("an expression"))
            }
        }
    }

    fn call(&mut self, tok: &Token, name: &str) -> Result<(Expr, Type), DslError> {
        let mut args = Vec::new();
        let mut types = Vec::new();
        if matches!(self.peek(), Some(Token { kind: TokenKind::RParen, .. })) {
            self.pos += 1;
        } else {
            loop {
                let (e, t) = self.expr()?;
                args.push(e);
                types.push(t);
                match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Comma) => self.pos += 1,
                    Some(TokenKind::RParen) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.unexpected("`,` or `)`")),
                }
            }
        }
        let Some(builtin) = Builtin::from_name(name) else {
            return Err(DslError::UnknownIdentifier {
                line: tok.line,
                col: tok.col,
                name: name.to_string(),
            });
        };
        if builtin.is_post_only() {
            self.uses_post = true;
        }
        let ty = builtin.check(&types).map_err(|e| match e {
            SigError::Arity { expected } => DslError::Arity {
                line: tok.line,
                col: tok.col,
                name: name.to_string(),
                expected,
                found: args.len(),
            },
            SigError::Type(message) => DslError::Type {
                line: tok.line,
                col: tok.col,
                message,
            },
        })?;
        if builtin == Builtin::Rgb {
            if let [Expr::Number(r), Expr::Number(g), Expr::Number(b)] = args.as_slice() {
                return Ok((Expr::Color([*r, *g, *b]), Type::Color));
            }
        }
        Ok((
            Expr::Call {
                name: name.to_string(),
                args,
            },
            ty,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_identifier() {
        assert!(matches!(
            parse("output solid"),
            Err(DslError::UnknownIdentifier { ref name, .. }) if name == "solid"
        ));
    }

    #[test]
    fn color_literal_output() {
        let p = parse("output rgb(1,0,0)").unwrap();
        assert_eq!(p.ast.output, Expr::Color([1.0, 0.0, 0.0]));
        assert_eq!(p.output_type, Type::Color);
        assert!(p.ast.bindings.is_empty());
    }

    #[test]
    fn mix_of_colors_is_color() {
        let p = parse("c = mix(rgb(0,0,0), rgb(1,1,1), noise(4.0, 7)) output c").unwrap();
        assert_eq!(p.output_type, Type::Color);
        assert_eq!(p.ast.bindings.len(), 1);
        assert!(matches!(&p.ast.bindings[0].1, Expr::Call { name, .. } if name == "mix"));
    }

    #[test]
    fn unknown_function_and_arity() {
        assert!(matches!(
            parse("output nosuchfn(1)"),
            Err(DslError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("output noise(1)"),
            Err(DslError::Arity { found: 1, .. })
        ));
        assert!(matches!(
            parse("output ramp(0.5, 0)"),
            Err(DslError::Arity { .. })
        ));
    }

    #[test]
    fn type_errors() {
        assert!(matches!(
            parse("output mix(rgb(1,1,1), 0.5, 0.5)"),
            Err(DslError::Type { .. })
        ));
        assert!(matches!(
            parse("output noise(rgb(1,1,1), 0)"),
            Err(DslError::Type { .. })
        ));
        assert!(matches!(
            parse("output ramp(0.5, 0, 1, 1, rgb(1,1,1))"),
            Err(DslError::Type { .. })
        ));
    }

    #[test]
    fn rgb_with_expressions_is_call() {
        let p = parse("n = noise(2, 0) output rgb(n, n, 1)").unwrap();
        assert!(matches!(p.ast.output, Expr::Call { .. }));
        assert_eq!(p.output_type, Type::Color);
    }

    #[test]
    fn post_features_and_roles() {
        let p = parse("output exposure(input, 1.0)").unwrap();
        assert_eq!(p.role(), Role::Post);
        assert!(parse_as("output exposure(input, 1.0)", Role::Post).is_ok());
        assert!(matches!(
            parse_as("output input", Role::Texture),
            Err(DslError::Type { .. })
        ));
        assert!(parse_as("output rgb(1,0,0)", Role::Post).is_ok());
    }

    #[test]
    fn binding_rules() {
        assert!(parse("input = 1 output input").is_err());
        assert!(parse("noise = 1 output noise").is_err());
        assert!(parse("a = 1 a = 2 output a").is_err());
        assert!(matches!(
            parse("a = b b = 1 output a"),
            Err(DslError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("a = a output a"),
            Err(DslError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn syntax_errors_report_positions() {
        match parse("a = 1\noutput (a") {
            Err(DslError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("output").is_err());
        assert!(parse("output 1 2").is_err());
        assert!(parse("output noise(1,,2)").is_err());
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("output {}1{}", "(".repeat(5000), ")".repeat(5000));
        assert!(matches!(parse(&src), Err(DslError::Parse { .. })));
    }

    #[test]
    fn precedence() {
        let p = parse("output 1 + 2 * 3").unwrap();
        match p.ast.output {
            Expr::Binary {
                op: BinOp::Add,
                rhs,
                ..
            } => assert!(matches!(*rhs, Expr::Binary { op: BinOp::Mul, .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_binary_broadcasts_to_color() {
        let p = parse("output 0.5 * rgb(1, 0, 0) + 0.1").unwrap();
        assert_eq!(p.output_type, Type::Color);
    }
}
