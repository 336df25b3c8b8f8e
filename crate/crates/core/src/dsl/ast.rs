use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Scalar,
    Color,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Scalar => "Scalar",
            Type::Color => "Color",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Mul,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// `rgb(r, g, b)` with three literal arguments.
    Color([f64; 3]),
    Ident(String),
    Call { name: String, args: Vec<Expr> },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call {
            name: name.to_string(),
            args,
        }
    }

    /// Leaves count as depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Color(_) | Expr::Ident(_) => 1,
            Expr::Call { args, .. } => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.depth().max(rhs.depth()),
        }
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            _ => {}
        }
    }
}

/// A parsed program: ordered bindings followed by one output expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub bindings: Vec<(String, Expr)>,
    pub output: Expr,
}

impl Ast {
    /// All expressions in source order: binding bodies, then the output.
    pub fn roots(&self) -> impl Iterator<Item = &Expr> {
        self.bindings.iter().map(|(_, e)| e).chain([&self.output])
    }

    pub fn roots_mut(&mut self) -> impl Iterator<Item = &mut Expr> {
        self.bindings
            .iter_mut()
            .map(|(_, e)| e)
            .chain([&mut self.output])
    }
}

/// Formats a literal so that it lexes back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Number(v) => out.push_str(&format_number(*v)),
        Expr::Color([r, g, b]) => {
            out.push_str(&format!(
                "rgb({}, {}, {})",
                format_number(*r),
                format_number(*g),
                format_number(*b)
            ));
        }
        Expr::Ident(name) => out.push_str(name),
        Expr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
        Expr::Binary { op, lhs, rhs } => {
            let (sym, prec) = match op {
                BinOp::Add => (" + ", 1),
                BinOp::Mul => (" * ", 2),
            };
            let needs_parens = |child: &Expr, right: bool| match child {
                Expr::Binary { op: c, .. } => {
                    let cp = if *c == BinOp::Add { 1 } else { 2 };
                    cp < prec || (right && cp == prec)
                }
                _ => false,
            };
            for (child, right) in [(lhs.as_ref(), false), (rhs.as_ref(), true)] {
                if right {
                    out.push_str(sym);
                }
                if needs_parens(child, right) {
                    out.push('(');
                    write_expr(out, child);
                    out.push(')');
                } else {
                    write_expr(out, child);
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}

/// Canonical source form: one binding per line, then the output line.
impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, e) in &self.bindings {
            writeln!(f, "{name} = {e}")?;
        }
        writeln!(f, "output {}", self.output)
    }
}
