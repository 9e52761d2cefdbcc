//! Expression-defined scalar functions with symbolic derivatives.
//!
//! A tiny language — `+ - * / ^` (integer powers), `exp`, `sin`, one free
//! variable, rational and decimal literals — whose abstract syntax can be
//! differentiated symbolically to any order (`cos` appears internally as
//! the derivative of `sin` but is not part of the input language). Maps
//! configured as strings therefore get third-order jets with no
//! finite-difference error: the only rounding is in the final `f64`
//! evaluation.
//!
//! ```
//! use centerjet::expr::Expr;
//! let f: Expr = "2*x/(1+x)".parse().unwrap();
//! let fp = f.derivative();
//! assert!((f.eval(1.0) - 1.0).abs() < 1e-15);        // 2/(1+1)
//! assert!((fp.eval(0.0) - 2.0).abs() < 1e-15);       // f'(x) = 2/(1+x)²
//! ```

use crate::jet::Q;
use num::{BigInt, One, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum ExprError {
    #[error("cannot parse expression: {0}")]
    Parse(String),
}

/// Expression tree over one variable with exact rational constants.
#[derive(Debug, Clone)]
pub enum Expr {
    Const(Q),
    Var,
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    /// Integer power of a subexpression (negative allowed).
    Pow(Arc<Expr>, i32),
    Neg(Arc<Expr>),
    Exp(Arc<Expr>),
    Sin(Arc<Expr>),
    /// Not parseable from input; arises as the derivative of `Sin`.
    Cos(Arc<Expr>),
}

fn qc(n: i64) -> Expr {
    Expr::Const(Q::from_integer(BigInt::from(n)))
}

// smart constructors: fold constants and drop units so iterated
// differentiation doesn't balloon the tree
fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(x), _) if x.is_zero() => b,
        (_, Expr::Const(y)) if y.is_zero() => a,
        _ => Expr::Add(Arc::new(a), Arc::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (_, Expr::Const(y)) if y.is_zero() => a,
        _ => Expr::Sub(Arc::new(a), Arc::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(x), _) if x.is_zero() => qc(0),
        (_, Expr::Const(y)) if y.is_zero() => qc(0),
        (Expr::Const(x), _) if x.is_one() => b,
        (_, Expr::Const(y)) if y.is_one() => a,
        _ => Expr::Mul(Arc::new(a), Arc::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if !y.is_zero() => Expr::Const(x / y),
        (Expr::Const(x), _) if x.is_zero() => qc(0),
        (_, Expr::Const(y)) if y.is_one() => a,
        _ => Expr::Div(Arc::new(a), Arc::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match &a {
        Expr::Const(x) => Expr::Const(-x),
        _ => Expr::Neg(Arc::new(a)),
    }
}

fn powi(a: Expr, k: i32) -> Expr {
    match k {
        0 => qc(1),
        1 => a,
        _ => match &a {
            Expr::Const(x) if !(x.is_zero() && k < 0) => {
                let p = num::pow::pow(x.clone(), k.unsigned_abs() as usize);
                Expr::Const(if k < 0 { Q::one() / p } else { p })
            }
            _ => Expr::Pow(Arc::new(a), k),
        },
    }
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, k) => a.eval(x).powi(*k),
            Expr::Neg(a) => -a.eval(x),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
        }
    }

    /// Exact symbolic derivative.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => qc(0),
            Expr::Var => qc(1),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                powi((**b).clone(), 2),
            ),
            Expr::Pow(a, k) => mul(
                mul(qc(*k as i64), powi((**a).clone(), k - 1)),
                a.derivative(),
            ),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.derivative()),
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.derivative()),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.derivative())),
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, ExprError> {
        Parser::new(s)?.parse_all()
    }
}

/// An expression together with its first three derivatives, the unit a
/// configured map needs to expose local cubic jets.
#[derive(Debug, Clone)]
pub struct DiffChain {
    pub f: Expr,
    pub d1: Expr,
    pub d2: Expr,
    pub d3: Expr,
}

impl DiffChain {
    pub fn new(f: Expr) -> Self {
        let d1 = f.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        DiffChain { f, d1, d2, d3 }
    }

    /// `[f(x), f′(x), f″(x), f‴(x)]`.
    pub fn jet3(&self, x: f64) -> [f64; 4] {
        [
            self.f.eval(x),
            self.d1.eval(x),
            self.d2.eval(x),
            self.d3.eval(x),
        ]
    }
}

impl FromStr for DiffChain {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, ExprError> {
        Ok(DiffChain::new(s.parse()?))
    }
}

// --------------------------------------------------------------------------
// parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(q) => write!(f, "{q}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Slash => f.write_str("/"),
            Tok::Caret => f.write_str("^"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    var: Option<String>,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ExprError> {
        let mut toks = Vec::new();
        let bytes: Vec<char> = src.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                ' ' | '\t' | '\n' => i += 1,
                '+' => {
                    toks.push(Tok::Plus);
                    i += 1;
                }
                '-' => {
                    toks.push(Tok::Minus);
                    i += 1;
                }
                '*' => {
                    toks.push(Tok::Star);
                    i += 1;
                }
                '/' => {
                    toks.push(Tok::Slash);
                    i += 1;
                }
                '^' => {
                    toks.push(Tok::Caret);
                    i += 1;
                }
                '(' => {
                    toks.push(Tok::LParen);
                    i += 1;
                }
                ')' => {
                    toks.push(Tok::RParen);
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    let mut seen_dot = false;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_digit() || (bytes[i] == '.' && !seen_dot))
                    {
                        seen_dot |= bytes[i] == '.';
                        i += 1;
                    }
                    let lit: String = bytes[start..i].iter().collect();
                    toks.push(Tok::Num(parse_decimal(&lit)?));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_')
                    {
                        i += 1;
                    }
                    toks.push(Tok::Ident(bytes[start..i].iter().collect()));
                }
                other => {
                    return Err(ExprError::Parse(format!("unexpected character `{other}`")))
                }
            }
        }
        Ok(Parser {
            toks,
            pos: 0,
            var: None,
        })
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.expr()?;
        if self.pos != self.toks.len() {
            return Err(ExprError::Parse(format!(
                "trailing input at `{}`",
                self.toks[self.pos]
            )));
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = add(acc, self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = mul(acc, self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            return Ok(neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let negexp = if matches!(self.peek(), Some(Tok::Minus)) {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.bump() {
                Some(Tok::Num(q)) if q.is_integer() => {
                    let k = q
                        .to_integer()
                        .to_i32()
                        .ok_or_else(|| ExprError::Parse("exponent out of range".into()))?;
                    Ok(powi(base, if negexp { -k } else { k }))
                }
                other => Err(ExprError::Parse(format!(
                    "exponent must be an integer literal, got `{}`",
                    other.map(|t| t.to_string()).unwrap_or_default()
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.bump() {
            Some(Tok::Num(q)) => Ok(Expr::Const(q)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(ExprError::Parse("missing `)`".into())),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "exp" | "sin" => {
                    if !matches!(self.bump(), Some(Tok::LParen)) {
                        return Err(ExprError::Parse(format!("{name} needs parentheses")));
                    }
                    let arg = self.expr()?;
                    if !matches!(self.bump(), Some(Tok::RParen)) {
                        return Err(ExprError::Parse("missing `)`".into()));
                    }
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(Arc::new(arg)),
                        _ => Expr::Sin(Arc::new(arg)),
                    })
                }
                _ => {
                    match &self.var {
                        Some(v) if *v != name => {
                            return Err(ExprError::Parse(format!(
                                "one free variable only: `{v}` and `{name}` both appear"
                            )))
                        }
                        None => self.var = Some(name),
                        _ => {}
                    }
                    Ok(Expr::Var)
                }
            },
            other => Err(ExprError::Parse(format!(
                "expected a value, got `{}`",
                other.map(|t| t.to_string()).unwrap_or_else(|| "end".into())
            ))),
        }
    }
}

fn parse_decimal(lit: &str) -> Result<Q, ExprError> {
    let bad = || ExprError::Parse(format!("bad number literal `{lit}`"));
    match lit.split_once('.') {
        None => {
            let n: BigInt = lit.parse().map_err(|_| bad())?;
            Ok(Q::from_integer(n))
        }
        Some((whole, frac)) => {
            if frac.is_empty() || whole.chars().any(|c| !c.is_ascii_digit()) {
                return Err(bad());
            }
            let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
            let denom = BigInt::from(10u32).pow(frac.len() as u32);
            Ok(Q::new(digits, denom))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::q;

    fn p(s: &str) -> Expr {
        s.parse().unwrap()
    }

    #[test]
    fn precedence_and_literals() {
        assert_eq!(p("2+3*4^2").eval(0.0), 50.0);
        assert_eq!(p("0.25").eval(0.0), 0.25);
        assert_eq!(p("1/2 + 1/2").eval(0.0), 1.0);
        assert_eq!(p("-x^2").eval(3.0), -9.0); // unary minus binds below ^
        assert_eq!(p("x^-2").eval(2.0), 0.25);
        assert_eq!(p("(1+x)*(1-x)").eval(0.5), 0.75);
    }

    #[test]
    fn decimal_literals_are_exact() {
        match p("0.99") {
            Expr::Const(c) => assert_eq!(c, q(99, 100)),
            other => panic!("expected a constant, got {other:?}"),
        }
    }

    #[test]
    fn mobius_jet_matches_closed_form() {
        // f = 2x/(1+x): f' = 2/(1+x)², f'' = −4/(1+x)³, f''' = 12/(1+x)⁴
        let chain: DiffChain = "2*x/(1+x)".parse().unwrap();
        for x in [0.0, 0.5, 1.0, 2.0] {
            let d = 1.0 + x;
            let j = chain.jet3(x);
            assert!((j[0] - 2.0 * x / d).abs() < 1e-14);
            assert!((j[1] - 2.0 / d.powi(2)).abs() < 1e-14);
            assert!((j[2] + 4.0 / d.powi(3)).abs() < 1e-13);
            assert!((j[3] - 12.0 / d.powi(4)).abs() < 1e-13);
        }
    }

    #[test]
    fn exp_and_sin_derivatives() {
        let chain: DiffChain = "exp(2*x)".parse().unwrap();
        let j = chain.jet3(0.5);
        let e = (1.0f64).exp();
        assert!((j[0] - e).abs() < 1e-14);
        assert!((j[1] - 2.0 * e).abs() < 1e-13);
        assert!((j[3] - 8.0 * e).abs() < 1e-13);

        let chain: DiffChain = "sin(x)".parse().unwrap();
        let j = chain.jet3(1.2);
        assert!((j[1] - (1.2f64).cos()).abs() < 1e-15);
        assert!((j[2] + (1.2f64).sin()).abs() < 1e-15);
        assert!((j[3] + (1.2f64).cos()).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let chain: DiffChain = "x - 1/10*((x-1/2)^3 - 1/100*(x-1/2))".parse().unwrap();
        let h = 1e-5;
        for x in [0.3, 0.45, 0.55, 0.7] {
            let fd = (chain.f.eval(x + h) - chain.f.eval(x - h)) / (2.0 * h);
            assert!((chain.d1.eval(x) - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_two_variables_and_unknown_syntax() {
        assert!("x + y".parse::<Expr>().is_err());
        // `cos` is not input vocabulary: it lexes as an identifier, so the
        // parenthesized argument becomes trailing input
        assert!("cos(x)".parse::<Expr>().is_err());
        assert!("2 +".parse::<Expr>().is_err());
        assert!("x^x".parse::<Expr>().is_err());
        assert!("@".parse::<Expr>().is_err());
    }

    #[test]
    fn variable_name_is_free() {
        assert_eq!(p("t*t").eval(3.0), 9.0);
        assert_eq!(p("y + 1").eval(2.0), 3.0);
    }
}
