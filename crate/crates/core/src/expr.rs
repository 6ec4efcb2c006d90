//! A small expression language for functions `f(z, w)` and curve polynomials.
//!
//! Variables: `xi` (or `zeta`), `eta` (or `w`), `z` (or `z1`), `z2`, ...;
//! constants `i`, `pi` and decimal numbers; operators `+ - * /`, integer
//! powers `^n`, parentheses and `exp(...)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::polycurve::{BivariatePolynomial, CurvePoint};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Xi,
    Eta,
    /// Zero-based parameter index.
    Z(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
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
        let paren = self.eat('(');
        let negative = self.eat('-');
        let n = match self.tokens.get(self.pos) {
            Some(Token::Num(v)) if v.fract() == 0.0 && v.abs() <= 1e4 => *v as i32,
            _ => return Err(Error::Parse("exponent must be an integer".into())),
        };
        self.pos += 1;
        if paren && !self.eat(')') {
            return Err(Error::Parse("missing `)` after exponent".into()));
        }
        Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(Complex64::new(v, 0.0))),
            Token::Op('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing `)`".into()));
                }
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "xi" | "zeta" => Ok(Expr::Xi),
                "eta" | "w" => Ok(Expr::Eta),
                "z" => Ok(Expr::Z(0)),
                "i" => Ok(Expr::Const(Complex64::i())),
                "pi" => Ok(Expr::Const(Complex64::new(PI, 0.0))),
                "exp" => {
                    if !self.eat('(') {
                        return Err(Error::Parse("expected `(` after exp".into()));
                    }
                    let e = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Parse("missing `)`".into()));
                    }
                    Ok(Expr::Exp(Box::new(e)))
                }
                _ => match name.strip_prefix('z').and_then(|d| d.parse::<usize>().ok()) {
                    Some(k) if k >= 1 => Ok(Expr::Z(k - 1)),
                    _ => Err(Error::Parse(format!("unknown identifier `{name}`"))),
                },
            },
            Token::Op(c) => Err(Error::Parse(format!("unexpected `{c}`"))),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0 };
    if p.tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Parse(format!("trailing input at token {}", p.pos + 1)));
    }
    Ok(e)
}

type Poly = BTreeMap<(u32, u32), Complex64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (&(i, j), x) in a {
        for (&(k, l), y) in b {
            *out.entry((i + k, j + l)).or_insert(Complex64::new(0.0, 0.0)) += x * y;
        }
    }
    out
}

fn poly_add(mut a: Poly, b: &Poly, sign: f64) -> Poly {
    for (&k, v) in b {
        *a.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v * sign;
    }
    a
}

impl Expr {
    pub fn eval(&self, z: &[Complex64], w: &CurvePoint) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Xi => w.xi,
            Expr::Eta => w.eta,
            Expr::Z(k) => z.get(*k).copied().unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
            Expr::Neg(a) => -a.eval(z, w),
            Expr::Add(a, b) => a.eval(z, w) + b.eval(z, w),
            Expr::Sub(a, b) => a.eval(z, w) - b.eval(z, w),
            Expr::Mul(a, b) => a.eval(z, w) * b.eval(z, w),
            Expr::Div(a, b) => a.eval(z, w) / b.eval(z, w),
            Expr::Pow(a, n) => a.eval(z, w).powi(*n),
            Expr::Exp(a) => a.eval(z, w).exp(),
        }
    }

    /// Number of parameters referenced (highest index plus one).
    pub fn parameter_count(&self) -> usize {
        match self {
            Expr::Z(k) => k + 1,
            Expr::Const(_) | Expr::Xi | Expr::Eta => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) => a.parameter_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.parameter_count().max(b.parameter_count())
            }
        }
    }

    fn expand(&self) -> Result<Poly> {
        let not_poly = |what: &str| Error::Parse(format!("curve expressions must be polynomial in xi, eta ({what})"));
        Ok(match self {
            Expr::Const(c) => Poly::from([((0, 0), *c)]),
            Expr::Xi => Poly::from([((1, 0), Complex64::new(1.0, 0.0))]),
            Expr::Eta => Poly::from([((0, 1), Complex64::new(1.0, 0.0))]),
            Expr::Z(_) => return Err(not_poly("parameter z")),
            Expr::Neg(a) => a.expand()?.into_iter().map(|(k, v)| (k, -v)).collect(),
            Expr::Add(a, b) => poly_add(a.expand()?, &b.expand()?, 1.0),
            Expr::Sub(a, b) => poly_add(a.expand()?, &b.expand()?, -1.0),
            Expr::Mul(a, b) => poly_mul(&a.expand()?, &b.expand()?),
            Expr::Div(a, b) => {
                let d = b.expand()?;
                match d.iter().filter(|(_, v)| v.norm() != 0.0).collect::<Vec<_>>().as_slice() {
                    [(&(0, 0), c)] => {
                        let c = **c;
                        a.expand()?.into_iter().map(|(k, v)| (k, v / c)).collect()
                    }
                    _ => return Err(not_poly("division by a non-constant")),
                }
            }
            Expr::Pow(a, n) => {
                if *n < 0 {
                    return Err(not_poly("negative power"));
                }
                let base = a.expand()?;
                let mut acc = Poly::from([((0, 0), Complex64::new(1.0, 0.0))]);
                for _ in 0..*n {
                    acc = poly_mul(&acc, &base);
                }
                acc
            }
            Expr::Exp(_) => return Err(not_poly("exp")),
        })
    }

    /// The expression as a polynomial `P(xi, eta)`.
    pub fn to_polynomial(&self) -> Result<BivariatePolynomial> {
        let terms: Vec<_> = self.expand()?.into_iter().filter(|(_, v)| v.norm() != 0.0).collect();
        if terms.is_empty() {
            return Err(Error::Parse("curve polynomial is identically zero".into()));
        }
        BivariatePolynomial::new(terms).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Expr::Const(c) => write!(f, "({}+{}*i)", c.re, c.im),
            Expr::Xi => f.write_str("xi"),
            Expr::Eta => f.write_str("eta"),
            Expr::Z(k) => write!(f, "z{}", k + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "{a}^({n})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// A parsed expression used as `f(z, w)`.
#[derive(Clone, Debug)]
pub struct ExprFunction {
    pub source: String,
    pub expr: Expr,
}

impl ExprFunction {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(ExprFunction { source: text.to_string(), expr: parse(text)? })
    }
}

impl FiberFunction for ExprFunction {
    fn eval(&self, z: &[Complex64], w: &CurvePoint) -> Complex64 {
        self.expr.eval(z, w)
    }
}

/// Parses a curve either as an expression (`eta^2 - xi`) or as lines of
/// `i j re im` monomials.
pub fn parse_curve(text: &str) -> Result<BivariatePolynomial> {
    let trimmed = text.trim();
    let tabular = trimmed
        .lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .all(|l| l.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).all(|t| t.parse::<f64>().is_ok()));
    if tabular && !trimmed.is_empty() {
        BivariatePolynomial::parse(trimmed)
    } else {
        parse(trimmed)?.to_polynomial()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluates() {
        let w = CurvePoint::new(c(0.5, 0.25), c(2.0, -1.0));
        let z = [c(0.1, 0.0), c(0.0, 2.0)];
        let cases: [(&str, Complex64); 7] = [
            ("1/(w - (2 + z))", (w.eta - (2.0 + z[0])).inv()),
            ("-xi^2 + 3*eta", -w.xi * w.xi + 3.0 * w.eta),
            ("exp(zeta) * z2", w.xi.exp() * z[1]),
            ("2^-1 + i*pi", c(0.5, PI)),
            ("xi^(-2)", w.xi.powi(-2)),
            ("1.5e-1 * z1", 0.15 * z[0]),
            ("-(xi - 1)^2", -(w.xi - 1.0).powi(2)),
        ];
        for (text, want) in cases {
            let got = parse(text).unwrap().eval(&z, &w);
            assert!((got - want).norm() < 1e-14, "{text}: {got} vs {want}");
        }
        assert_eq!(parse("exp(z2) + z").unwrap().parameter_count(), 2);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "xi +", "(xi", "xi ^ 1.5", "foo", "xi $ 2", "exp xi", "3 4"] {
            assert!(matches!(parse(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn curves() {
        let p = parse_curve("eta^2 - xi^2").unwrap();
        assert_eq!(p.coeffs().len(), 2);
        assert_eq!(p.coeffs()[&(2, 0)], c(-1.0, 0.0));
        let q = parse_curve("(eta - xi)*(eta + xi)").unwrap();
        assert_eq!(p, q);
        let t = parse_curve("0 2 1 0\n1 0 -1 0\n").unwrap();
        assert_eq!(t, parse_curve("eta^2 - xi").unwrap());
        assert!(parse_curve("eta - z").is_err());
        assert!(parse_curve("1/eta").is_err());
        assert!(parse_curve("eta - eta").is_err());
    }
}
