use std::collections::HashMap;

use super::ast::{BinOp, Expr};
use super::builtins::Builtin;
use super::noise::{value_noise, voronoi};
use super::parser::{Parsed, INPUT};
use super::DslError;
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RenderParams {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
}

impl RenderParams {
    pub fn new(width: u32, height: u32, seed: u64) -> Self {
        Self {
            width,
            height,
            seed,
        }
    }
}

impl Default for RenderParams {
    fn default() -> Self {
        Self::new(64, 64, 0)
    }
}

#[derive(Debug, Clone, Copy)]
enum Val {
    S(f64),
    C([f64; 3]),
}

impl Val {
    fn scalar(self) -> f64 {
        match self {
            Val::S(s) => s,
            Val::C(c) => c[0],
        }
    }

    fn color(self) -> [f64; 3] {
        match self {
            Val::S(s) => [s, s, s],
            Val::C(c) => c,
        }
    }
}

enum Node {
    Num(f64),
    Col([f64; 3]),
    Slot(usize),
    Input,
    Call(Builtin, Vec<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

struct Compiled {
    bindings: Vec<Node>,
    output: Node,
}

struct Pixel {
    u: f64,
    v: f64,
    seed: u64,
    input: [f64; 3],
}

fn compile(parsed: &Parsed) -> Result<Compiled, DslError> {
    let mut slots = HashMap::new();
    let mut bindings = Vec::with_capacity(parsed.ast.bindings.len());
    for (name, e) in &parsed.ast.bindings {
        bindings.push(compile_expr(e, &slots)?);
        slots.insert(name.as_str(), slots.len());
    }
    let output = compile_expr(&parsed.ast.output, &slots)?;
    Ok(Compiled { bindings, output })
}

fn compile_expr(e: &Expr, slots: &HashMap<&str, usize>) -> Result<Node, DslError> {
    Ok(match e {
        Expr::Number(v) => Node::Num(*v),
        Expr::Color(c) => Node::Col(*c),
        Expr::Ident(n) if n == INPUT => Node::Input,
        Expr::Ident(n) => Node::Slot(
            *slots
                .get(n.as_str())
                .ok_or_else(|| DslError::runtime(format!("unbound identifier `{n}`")))?,
        ),
        Expr::Call { name, args } => {
            let b = Builtin::from_name(name)
                .ok_or_else(|| DslError::runtime(format!("unknown builtin `{name}`")))?;
            let args = args
                .iter()
                .map(|a| compile_expr(a, slots))
                .collect::<Result<_, _>>()?;
            Node::Call(b, args)
        }
        Expr::Binary { op, lhs, rhs } => Node::Bin(
            *op,
            Box::new(compile_expr(lhs, slots)?),
            Box::new(compile_expr(rhs, slots)?),
        ),
    })
}

/// Seed for a noise call: the render seed plus the rounded offset, wrapping.
pub fn offset_seed(seed: u64, offset: f64) -> u64 {
    seed.wrapping_add(offset.round() as i64 as u64)
}

fn finite(x: f64, what: &str) -> Result<f64, DslError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(DslError::runtime(format!("non-finite {what}")))
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn eval(n: &Node, px: &Pixel, slots: &[Val]) -> Result<Val, DslError> {
    Ok(match n {
        Node::Num(v) => Val::S(*v),
        Node::Col(c) => Val::C(*c),
        Node::Slot(i) => slots[*i],
        Node::Input => Val::C(px.input),
        Node::Bin(op, a, b) => {
            let a = eval(a, px, slots)?;
            let b = eval(b, px, slots)?;
            let f = |x: f64, y: f64| match op {
                BinOp::Add => x + y,
                BinOp::Mul => x * y,
            };
            match (a, b) {
                (Val::S(x), Val::S(y)) => Val::S(f(x, y)),
                _ => {
                    let (x, y) = (a.color(), b.color());
                    Val::C([f(x[0], y[0]), f(x[1], y[1]), f(x[2], y[2])])
                }
            }
        }
        Node::Call(b, args) => {
            let mut vals = [Val::S(0.0); 3];
            let fixed = b.fixed_arity().unwrap_or(if *b == Builtin::Mix { 3 } else { 0 });
            for (slot, a) in vals.iter_mut().zip(args.iter().take(fixed)) {
                *slot = eval(a, px, slots)?;
            }
            let s = |i: usize| vals[i].scalar();
            match b {
                Builtin::Noise => {
                    let scale = s(0);
                    let x = finite(px.u * scale, "noise coordinate")?;
                    let y = finite(px.v * scale, "noise coordinate")?;
                    Val::S(value_noise(x, y, offset_seed(px.seed, s(1))))
                }
                Builtin::Voronoi => {
                    let scale = s(0);
                    let x = finite(px.u * scale, "voronoi coordinate")?;
                    let y = finite(px.v * scale, "voronoi coordinate")?;
                    Val::S(voronoi(x, y, offset_seed(px.seed, s(1)), s(2)))
                }
                Builtin::Checker => {
                    let scale = s(0);
                    let cx = finite((px.u * scale).floor(), "checker coordinate")?;
                    let cy = finite((px.v * scale).floor(), "checker coordinate")?;
                    Val::S((cx + cy).rem_euclid(2.0))
                }
                Builtin::Stripes => {
                    let a = s(1).to_radians();
                    let d = px.u * a.cos() + px.v * a.sin();
                    Val::S(0.5 + 0.5 * (std::f64::consts::TAU * s(0) * d).sin())
                }
                Builtin::Clamp => Val::S(s(0).max(s(1)).min(s(2))),
                Builtin::Mix => match (vals[0], vals[1]) {
                    (Val::S(a), Val::S(b)) => Val::S(lerp(a, b, s(2))),
                    (a, b) => {
                        let (a, b, t) = (a.color(), b.color(), s(2));
                        Val::C([lerp(a[0], b[0], t), lerp(a[1], b[1], t), lerp(a[2], b[2], t)])
                    }
                },
                Builtin::Rgb => Val::C([s(0), s(1), s(2)]),
                Builtin::Ramp => ramp(args, px, slots)?,
                Builtin::Exposure => {
                    let k = 2f64.powf(s(1));
                    let c = vals[0].color();
                    Val::C([c[0] * k, c[1] * k, c[2] * k])
                }
                Builtin::Tint => {
                    let (c, t) = (vals[0].color(), vals[1].color());
                    Val::C([c[0] * t[0], c[1] * t[1], c[2] * t[2]])
                }
                Builtin::Contrast => {
                    let (c, k) = (vals[0].color(), s(1));
                    let f = |x: f64| ((x - 0.5) * k + 0.5).clamp(0.0, 1.0);
                    Val::C([f(c[0]), f(c[1]), f(c[2])])
                }
            }
        }
    })
}

/// Piecewise-linear color ramp over `(position, color)` stops.
fn ramp(args: &[Node], px: &Pixel, slots: &[Val]) -> Result<Val, DslError> {
    let t = eval(&args[0], px, slots)?.scalar();
    let mut stops = Vec::with_capacity(args.len() / 2);
    for pair in args[1..].chunks_exact(2) {
        let pos = eval(&pair[0], px, slots)?.scalar();
        if let Some(&(prev, _)) = stops.last() {
            if pos < prev {
                return Err(DslError::runtime(format!(
                    "ramp positions must be non-decreasing ({prev} then {pos})"
                )));
            }
        }
        stops.push((pos, eval(&pair[1], px, slots)?.color()));
    }
    let (first_pos, first) = stops[0];
    let (last_pos, last) = stops[stops.len() - 1];
    if t <= first_pos {
        return Ok(Val::C(first));
    }
    if t >= last_pos {
        return Ok(Val::C(last));
    }
    for w in stops.windows(2) {
        let ((p0, c0), (p1, c1)) = (w[0], w[1]);
        if t < p1 {
            if p1 <= p0 {
                return Ok(Val::C(c1));
            }
            let k = (t - p0) / (p1 - p0);
            return Ok(Val::C([
                lerp(c0[0], c1[0], k),
                lerp(c0[1], c1[1], k),
                lerp(c0[2], c1[2], k),
            ]));
        }
    }
    Ok(Val::C(last))
}

/// `round(clamp(c, 0, 1) * 255)`; NaN maps to 0.
pub fn quantize(c: f64) -> u8 {
    if c.is_nan() {
        return 0;
    }
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Renders a texture program followed by zero or more post-process
/// programs. Each post program sees the previous stage's unquantized color as
/// `input`; quantization happens once at the end.
pub fn render(programs: &[Parsed], params: RenderParams) -> Result<Raster, DslError> {
    let Some(first) = programs.first() else {
        return Err(DslError::runtime("no programs to render"));
    };
    if first.uses_post_features {
        return Err(DslError::Type {
            line: 1,
            col: 1,
            message: "the first program must be a texture program (no `input`)".into(),
        });
    }
    if params.width == 0 || params.height == 0 {
        return Err(DslError::runtime("render dimensions must be at least 1x1"));
    }
    let stages = programs
        .iter()
        .map(compile)
        .collect::<Result<Vec<_>, _>>()?;
    let (w, h) = (params.width as usize, params.height as usize);
    let mut data = Vec::with_capacity(w * h * 3);
    let mut slots = Vec::new();
    for py in 0..h {
        let v = (py as f64 + 0.5) / h as f64;
        for px in 0..w {
            let u = (px as f64 + 0.5) / w as f64;
            let mut pixel = Pixel {
                u,
                v,
                seed: params.seed,
                input: [0.0; 3],
            };
            for stage in &stages {
                slots.clear();
                for b in &stage.bindings {
                    let val = eval(b, &pixel, &slots)?;
                    slots.push(val);
                }
                pixel.input = eval(&stage.output, &pixel, &slots)?.color();
            }
            data.extend(pixel.input.map(quantize));
        }
    }
    Raster::new(params.width, params.height, data)
        .map_err(|e| DslError::runtime(e.to_string()))
}
