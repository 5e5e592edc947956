//! User charts from a small expression language.
//!
//! ```text
//! # tractroid
//! name = my_pseudosphere
//! dim = 2
//! ambient = euclidean 3          # or: sphere 3 1.0 / hyperbolic 3 -1.0
//! curvature = -1
//! domain = 0.3 3.0, 0 6.283185307179586
//! const s = 1
//! x1 = s * sech(u1) * cos(u2)
//! x2 = s * sech(u1) * sin(u2)
//! x3 = u1 - tanh(u1)
//! ```
//!
//! Expressions use `+ - * / ^`, parentheses, the parameters `u1..un`, the
//! constants `pi` and `e`, user constants, and the functions `sin cos tan sinh
//! cosh tanh sech exp ln log sqrt atan asin acos asinh abs`. Every expression
//! is generic over [`Real`], so user charts are differentiable by AD.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::geometry::{AmbientKind, AmbientModel, ChartMap, ClosedForm, ImmersionChart};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sech,
    Exp,
    Ln,
    Sqrt,
    Atan,
    Asin,
    Acos,
    Asinh,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sech" => Func::Sech,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            "asin" => Func::Asin,
            "acos" => Func::Acos,
            "asinh" => Func::Asinh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply<S: Real>(self, x: S) -> S {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Sech => x.sech(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Atan => x.atan(),
            Func::Asin => x.asin(),
            Func::Acos => x.acos(),
            Func::Asinh => x.asinh(),
            Func::Abs => x.abs(),
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    PowI(Box<Expr>, i32),
    PowF(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval<S: Real>(&self, u: &[S]) -> S {
        match self {
            Expr::Num(v) => S::cst(*v),
            Expr::Var(i) => u[*i],
            Expr::Neg(a) => -a.eval(u),
            Expr::Add(a, b) => a.eval(u) + b.eval(u),
            Expr::Sub(a, b) => a.eval(u) - b.eval(u),
            Expr::Mul(a, b) => a.eval(u) * b.eval(u),
            Expr::Div(a, b) => a.eval(u) / b.eval(u),
            Expr::PowI(a, n) => a.eval(u).powi(*n),
            Expr::PowF(a, p) => a.eval(u).powf(*p),
            Expr::Call(f, a) => f.apply(a.eval(u)),
        }
    }

    /// Value when the expression does not depend on any parameter.
    fn constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Var(_) => None,
            Expr::Neg(a) => a.constant().map(|v| -v),
            _ => {
                let mut uses_var = false;
                self.visit(&mut |e| uses_var |= matches!(e, Expr::Var(_)));
                (!uses_var).then(|| self.eval::<f64>(&[]))
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::PowI(a, _) | Expr::PowF(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Num(_) | Expr::Var(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Token>> {
    let err = |m: String| Error::Parse { line, message: m };
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let v = text.parse::<f64>().map_err(|_| err(format!("bad number '{text}'")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Token::Ident(chars[start..k].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Token::Op(c));
            k += 1;
        } else {
            return Err(err(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    dim: usize,
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn err(&self, m: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: m.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exponent = self.unary()?;
        let p = exponent.constant().ok_or_else(|| self.err("exponent must be constant"))?;
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            Ok(Expr::PowI(Box::new(base), p as i32))
        } else {
            Ok(Expr::PowF(Box::new(base), p))
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end of expression"))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("missing ')'"));
                }
                Ok(e)
            }
            Token::Op(c) => Err(self.err(format!("unexpected '{c}'"))),
            Token::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(self.err(format!("function {name} needs '('")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.err("missing ')'"));
                    }
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(rest) = name.strip_prefix('u') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if k == 0 || k > self.dim {
                            return Err(self.err(format!("parameter {name} outside u1..u{}", self.dim)));
                        }
                        return Ok(Expr::Var(k - 1));
                    }
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => self
                        .constants
                        .get(&name)
                        .map(|v| Expr::Num(*v))
                        .ok_or_else(|| self.err(format!("unknown identifier '{name}'"))),
                }
            }
        }
    }
}

/// Parse one expression over `u1..u{dim}`.
pub fn parse_expr(text: &str, dim: usize, constants: &BTreeMap<String, f64>, line: usize) -> Result<Expr> {
    let tokens = tokenize(text, line)?;
    let mut p = Parser { tokens, pos: 0, line, dim, constants };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}

/// Chart map given by one expression per container coordinate.
#[derive(Debug, Clone)]
pub struct ExprMap {
    pub coords: Vec<Expr>,
}

impl ClosedForm for ExprMap {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        self.coords.iter().map(|e| e.eval(u)).collect()
    }
}

/// Everything declared in a chart file.
#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub name: String,
    pub ambient: AmbientModel,
    pub curvature: f64,
    pub domain: Vec<(f64, f64)>,
    pub map: ExprMap,
}

impl ChartSpec {
    pub fn into_chart(self) -> Result<ImmersionChart> {
        let map: Arc<dyn ChartMap> = Arc::new(self.map);
        ImmersionChart::new(self.name, map, self.ambient, self.curvature, self.domain)
    }
}

fn number(s: &str, line: usize, constants: &BTreeMap<String, f64>) -> Result<f64> {
    parse_expr(s, 0, constants, line)?
        .constant()
        .ok_or_else(|| Error::Parse { line, message: format!("'{s}' is not a constant") })
}

/// Parse a chart file.
pub fn parse_chart(text: &str) -> Result<ChartSpec> {
    let mut constants = BTreeMap::new();
    let mut name = String::from("user_chart");
    let mut dim: Option<usize> = None;
    let mut ambient: Option<(AmbientKind, usize, f64)> = None;
    let mut curvature: Option<f64> = None;
    let mut domain: Option<Vec<(f64, f64)>> = None;
    let mut coords: BTreeMap<usize, (usize, String)> = BTreeMap::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let perr = |m: String| Error::Parse { line, message: m };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(a, b)| (a.trim(), b.trim()))
            .ok_or_else(|| perr("expected 'key = value'".into()))?;
        if value.is_empty() {
            return Err(perr(format!("missing value for '{key}'")));
        }
        if let Some(cname) = key.strip_prefix("const ") {
            let cname = cname.trim();
            if cname.is_empty() || !cname.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(perr(format!("bad constant name '{cname}'")));
            }
            let v = number(value, line, &constants)?;
            constants.insert(cname.to_string(), v);
            continue;
        }
        match key {
            "name" => name = value.to_string(),
            "dim" => {
                let d = value.parse::<usize>().map_err(|_| perr(format!("bad dimension '{value}'")))?;
                if d == 0 {
                    return Err(perr("dimension must be positive".into()));
                }
                dim = Some(d);
            }
            "ambient" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let kind = match parts.first().copied() {
                    Some("euclidean") => AmbientKind::Euclidean,
                    Some("sphere") => AmbientKind::Sphere,
                    Some("hyperbolic") => AmbientKind::Hyperbolic,
                    other => return Err(perr(format!("unknown ambient {other:?}"))),
                };
                let m = parts
                    .get(1)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| perr("ambient needs a dimension".into()))?;
                let c = match (kind, parts.get(2)) {
                    (AmbientKind::Euclidean, None) => 0.0,
                    (AmbientKind::Euclidean, Some(_)) => {
                        return Err(perr("euclidean ambient takes no curvature".into()));
                    }
                    (_, Some(s)) => number(s, line, &constants)?,
                    (_, None) => return Err(perr("curved ambient needs a curvature".into())),
                };
                if parts.len() > 3 {
                    return Err(perr("trailing words after ambient".into()));
                }
                ambient = Some((kind, m, c));
            }
            "curvature" => curvature = Some(number(value, line, &constants)?),
            "domain" => {
                let mut d = Vec::new();
                for interval in value.split(',') {
                    let ends: Vec<&str> = interval.split_whitespace().collect();
                    if ends.len() != 2 {
                        return Err(perr(format!("interval '{}' needs two endpoints", interval.trim())));
                    }
                    d.push((number(ends[0], line, &constants)?, number(ends[1], line, &constants)?));
                }
                domain = Some(d);
            }
            _ => {
                let idx = key
                    .strip_prefix('x')
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&i| i > 0)
                    .ok_or_else(|| perr(format!("unknown key '{key}'")))?;
                if coords.insert(idx, (line, value.to_string())).is_some() {
                    return Err(perr(format!("coordinate x{idx} defined twice")));
                }
            }
        }
    }

    let last = text.lines().count().max(1);
    let missing = |what: &str| Error::Parse { line: last, message: format!("missing '{what}'") };
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let (kind, m, c_tilde) = ambient.ok_or_else(|| missing("ambient"))?;
    let ambient = AmbientModel::new(kind, m, c_tilde)?;
    let curvature = curvature.ok_or_else(|| missing("curvature"))?;
    let domain = domain.ok_or_else(|| missing("domain"))?;
    if domain.len() != dim {
        return Err(Error::Parse {
            line: last,
            message: format!("domain has {} intervals, dim is {dim}", domain.len()),
        });
    }
    let width = ambient.embedding_dimension();
    let mut exprs = Vec::with_capacity(width);
    for i in 1..=width {
        let (line, src) = coords.remove(&i).ok_or_else(|| missing(&format!("x{i}")))?;
        exprs.push(parse_expr(&src, dim, &constants, line)?);
    }
    if let Some((i, (line, _))) = coords.into_iter().next() {
        return Err(Error::Parse { line, message: format!("x{i} exceeds container dimension {width}") });
    }
    Ok(ChartSpec { name, ambient, curvature, domain, map: ExprMap { coords: exprs } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Engine;

    const TRACTROID: &str = "\
# tractroid
name = t
dim = 2
ambient = euclidean 3
curvature = -1
domain = 0.3 3.0, 0 2*pi
x1 = sech(u1) * cos(u2)
x2 = sech(u1) * sin(u2)
x3 = u1 - tanh(u1)
";

    #[test]
    fn precedence_and_powers() {
        let c = BTreeMap::new();
        let e = parse_expr("-u1^2 + 2*u2/4 - (1 - u1)", 2, &c, 1).unwrap();
        assert!((e.eval(&[3.0, 2.0]) - (-9.0 + 1.0 + 2.0)).abs() < 1e-15);
        let e = parse_expr("2^-1 * u1^1.5", 1, &c, 1).unwrap();
        assert!((e.eval(&[4.0]) - 4.0).abs() < 1e-14);
        let e = parse_expr("1.5e-1 + e", 0, &c, 1).unwrap();
        assert!((e.eval::<f64>(&[]) - 0.15 - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn tractroid_matches_catalog() {
        let chart = parse_chart(TRACTROID).unwrap().into_chart().unwrap();
        assert_eq!(chart.engine(), Engine::Ad);
        let cat = crate::catalog::pseudosphere().chart;
        for u in [[0.5, 0.3], [1.7, 4.0]] {
            let a = chart.jet(&u, 2).unwrap();
            let b = cat.jet(&u, 2).unwrap();
            assert!((a.x - b.x).norm() < 1e-15);
            let (a2, b2) = (a.d2.unwrap(), b.d2.unwrap());
            assert!((&a2[0][1] - &b2[0][1]).norm() < 1e-14);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = TRACTROID.replace("tanh(u1)", "tanh(u3)");
        assert!(matches!(parse_chart(&bad), Err(Error::Parse { line: 9, .. })));
        let bad = TRACTROID.replace("x2 =", "y2 =");
        assert!(matches!(parse_chart(&bad), Err(Error::Parse { line: 8, .. })));
        let bad = TRACTROID.replace("cos(u2)", "cos(u2");
        assert!(matches!(parse_chart(&bad), Err(Error::Parse { line: 7, .. })));
        let bad = TRACTROID.replace("x3 = u1 - tanh(u1)\n", "");
        assert!(matches!(parse_chart(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn constants_and_curved_ambients() {
        let text = "dim = 2\nambient = sphere 3 1\ncurvature = 0\nconst t = pi/4\n\
                    domain = 0 1, 0 1\nx1 = cos(t)*cos(u1)\nx2 = cos(t)*sin(u1)\n\
                    x3 = sin(t)*cos(u2)\nx4 = sin(t)*sin(u2)\n";
        let spec = parse_chart(text).unwrap();
        assert_eq!(spec.ambient.curvature(), 1.0);
        let chart = spec.into_chart().unwrap();
        assert!((chart.big_c() - 1.0).abs() < 1e-15);
        assert!(chart.evaluate(&[0.2, 0.3]).is_ok());
    }
}
