//! Arithmetic expressions for right-hand sides `f(x)` and candidate
//! addition formulas `R(x, y)`.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | "+" unary | power ;
//! power    = primary [ "^" unary ] ;          (* exponent must fold to a rational constant *)
//! primary  = number | variable | "sqrt" "(" expr ")" | "(" expr ")" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 = -(x^2)`) and is right
//! associative. A quotient of two exact constants, such as `13/12`, is folded
//! into an exact rational literal and only rounded when evaluated.

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};

use crate::error::{Error, Result};
use crate::jet::Jet;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    Rational(Rational),
    Float(f64),
}

impl Constant {
    pub fn value(&self) -> f64 {
        match self {
            Constant::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            Constant::Float(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Constant),
    /// Index into the expression's variable list.
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Rational),
    Sqrt(Box<Node>),
}

/// A parsed expression together with the names of its variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    root: Node,
    vars: Vec<String>,
}

impl ExprAst {
    /// Parses an expression in the single variable `x`.
    pub fn parse(source: &str) -> Result<Self> {
        Self::parse_with_vars(source, &["x"])
    }

    /// Parses an expression in `x` and `y`.
    pub fn parse_bivariate(source: &str) -> Result<Self> {
        Self::parse_with_vars(source, &["x", "y"])
    }

    /// Parses with an explicit list of permitted variable names.
    pub fn parse_with_vars(source: &str, vars: &[&str]) -> Result<Self> {
        if source.trim().is_empty() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let tokens = lex(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        let tok = p.peek();
        if tok.kind != Tok::End {
            return Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(ExprAst {
            root,
            vars: vars.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Highest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        fn walk(n: &Node) -> Option<usize> {
            match n {
                Node::Const(_) => None,
                Node::Var(i) => Some(*i),
                Node::Neg(a) | Node::Sqrt(a) | Node::Pow(a, _) => walk(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a).max(walk(b))
                }
            }
        }
        walk(&self.root)
    }

    /// If the expression is `sqrt(g)` or `g^(1/2)`, returns `g`.
    pub fn sqrt_radicand(&self) -> Option<ExprAst> {
        let inner = match &self.root {
            Node::Sqrt(g) => g,
            Node::Pow(g, e) if *e == Rational::new(1, 2) => g,
            _ => return None,
        };
        Some(ExprAst {
            root: (**inner).clone(),
            vars: self.vars.clone(),
        })
    }

    pub fn eval_scalar(&self, x: f64) -> Result<f64> {
        eval_node(&self.root, &[x])
    }

    pub fn eval_scalar2(&self, x: f64, y: f64) -> Result<f64> {
        eval_node(&self.root, &[x, y])
    }

    /// Propagates a jet through the expression; `x` stands for the first variable.
    pub fn eval_jet(&self, x: &Jet) -> Result<Jet> {
        jet_node(&self.root, &[x])
    }

    pub fn eval_jet2(&self, x: &Jet, y: &Jet) -> Result<Jet> {
        jet_node(&self.root, &[x, y])
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if *r.denom() == 1 && *r.numer() >= 0 {
        write!(f, "{}", r.numer())
    } else if *r.denom() == 1 {
        write!(f, "({})", r.numer())
    } else {
        write!(f, "({}/{})", r.numer(), r.denom())
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node, vars: &[String]) -> fmt::Result {
    let bin = |f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node| -> fmt::Result {
        write!(f, "(")?;
        write_node(f, a, vars)?;
        write!(f, " {op} ")?;
        write_node(f, b, vars)?;
        write!(f, ")")
    };
    match n {
        Node::Const(Constant::Rational(r)) => write_rational(f, r),
        Node::Const(Constant::Float(v)) => write!(f, "{v:?}"),
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(f, a, vars)?;
            write!(f, ")")
        }
        Node::Add(a, b) => bin(f, a, "+", b),
        Node::Sub(a, b) => bin(f, a, "-", b),
        Node::Mul(a, b) => bin(f, a, "*", b),
        Node::Div(a, b) => bin(f, a, "/", b),
        Node::Pow(a, e) => {
            write!(f, "(")?;
            write_node(f, a, vars)?;
            write!(f, "^")?;
            write_rational(f, e)?;
            write!(f, ")")
        }
        Node::Sqrt(a) => {
            write!(f, "sqrt(")?;
            write_node(f, a, vars)?;
            write!(f, ")")
        }
    }
}

fn eval_node(n: &Node, env: &[f64]) -> Result<f64> {
    Ok(match n {
        Node::Const(c) => c.value(),
        Node::Var(i) => *env
            .get(*i)
            .ok_or_else(|| Error::Domain(format!("variable #{i} is unbound")))?,
        Node::Neg(a) => -eval_node(a, env)?,
        Node::Add(a, b) => eval_node(a, env)? + eval_node(b, env)?,
        Node::Sub(a, b) => eval_node(a, env)? - eval_node(b, env)?,
        Node::Mul(a, b) => eval_node(a, env)? * eval_node(b, env)?,
        Node::Div(a, b) => {
            let num = eval_node(a, env)?;
            let den = eval_node(b, env)?;
            if den == 0.0 {
                return Err(Error::DivisionByZero);
            }
            num / den
        }
        Node::Sqrt(a) => {
            let v = eval_node(a, env)?;
            if v < 0.0 {
                return Err(Error::Domain(format!("sqrt of negative value {v}")));
            }
            v.sqrt()
        }
        Node::Pow(a, e) => pow_scalar(eval_node(a, env)?, e)?,
    })
}

fn pow_scalar(base: f64, e: &Rational) -> Result<f64> {
    let (p, q) = (*e.numer(), *e.denom());
    if q == 1 {
        if base == 0.0 && p < 0 {
            return Err(Error::DivisionByZero);
        }
        return Ok(match i32::try_from(p) {
            Ok(p) => base.powi(p),
            Err(_) => base.powf(p as f64),
        });
    }
    if base > 0.0 {
        Ok(base.powf(p as f64 / q as f64))
    } else if base == 0.0 {
        if p > 0 {
            Ok(0.0)
        } else {
            Err(Error::DivisionByZero)
        }
    } else {
        Err(Error::Domain(format!(
            "negative base {base} raised to non-integer power {p}/{q}"
        )))
    }
}

fn jet_node(n: &Node, env: &[&Jet]) -> Result<Jet> {
    let proto = env[0];
    match n {
        Node::Const(c) => Ok(Jet::constant(proto.center(), c.value(), proto.order())),
        Node::Var(i) => env
            .get(*i)
            .map(|j| (*j).clone())
            .ok_or_else(|| Error::Domain(format!("variable #{i} is unbound"))),
        Node::Neg(a) => Ok(jet_node(a, env)?.neg()),
        Node::Add(a, b) => jet_node(a, env)?.add(&jet_node(b, env)?),
        Node::Sub(a, b) => jet_node(a, env)?.sub(&jet_node(b, env)?),
        Node::Mul(a, b) => {
            // constant factors are common; avoid a full Cauchy product for them
            match (&**a, &**b) {
                (Node::Const(c), _) => Ok(jet_node(b, env)?.scale(c.value())),
                (_, Node::Const(c)) => Ok(jet_node(a, env)?.scale(c.value())),
                _ => jet_node(a, env)?.mul(&jet_node(b, env)?),
            }
        }
        Node::Div(a, b) => {
            let den = jet_node(b, env)?;
            if den.value() == 0.0 {
                return Err(Error::Domain(
                    "division by a series with zero constant term".into(),
                ));
            }
            jet_node(a, env)?.div(&den)
        }
        Node::Sqrt(a) => jet_node(a, env)?.sqrt(),
        Node::Pow(a, e) => jet_node(a, env)?.powq(*e.numer(), *e.denom()),
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Constant),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(_) => "number".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token {
                kind,
                offset: start,
            });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    i = k;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            out.push(Token {
                kind: Tok::Num(parse_number(text, start)?),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(src[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push(Token {
        kind: Tok::End,
        offset: src.len(),
    });
    Ok(out)
}

/// Decimal literal as an exact rational when it fits in `i64`, else a float.
fn parse_number(text: &str, offset: usize) -> Result<Constant> {
    let bad = || Error::Syntax {
        offset,
        message: format!("malformed number `{text}`"),
    };
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    if mantissa.matches('.').count() > 1 || mantissa == "." || mantissa.is_empty() {
        return Err(bad());
    }
    let float: f64 = text.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(k) => (&mantissa[..k], &mantissa[k + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let scale = exp - frac_part.len() as i32;
    let exact = (|| {
        let mut num: i64 = digits.parse().ok()?;
        let mut den: i64 = 1;
        if scale >= 0 {
            num = num.checked_mul(10i64.checked_pow(scale as u32)?)?;
        } else {
            den = 10i64.checked_pow((-scale) as u32)?;
        }
        Some(Rational::new(num, den))
    })();
    Ok(match exact {
        Some(r) => Constant::Rational(r),
        None => Constant::Float(float),
    })
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok) -> Result<()> {
        let t = self.next();
        if t.kind == kind {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                Tok::Plus => {
                    self.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().kind {
                Tok::Star => {
                    self.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = match (&lhs, &rhs) {
                        (
                            Node::Const(Constant::Rational(a)),
                            Node::Const(Constant::Rational(b)),
                        ) if *b.numer() != 0 => match a.checked_div(b) {
                            Some(q) => Node::Const(Constant::Rational(q)),
                            None => Node::Div(Box::new(lhs), Box::new(rhs)),
                        },
                        _ => Node::Div(Box::new(lhs), Box::new(rhs)),
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek().kind {
            Tok::Minus => {
                self.next();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek().kind != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let at = self.peek().offset;
        let exponent = self.unary()?;
        let e = fold_rational(&exponent).ok_or_else(|| Error::Syntax {
            offset: at,
            message: "exponent must be a constant rational".into(),
        })?;
        Ok(Node::Pow(Box::new(base), e))
    }

    fn primary(&mut self) -> Result<Node> {
        let t = self.next();
        match t.kind {
            Tok::Num(c) => Ok(Node::Const(c)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "sqrt" {
                    self.expect(Tok::LParen)?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Node::Sqrt(Box::new(inner)));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(Error::UnknownIdentifier {
                        name,
                        offset: t.offset,
                    }),
                }
            }
            other => Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }
}

/// Folds a variable-free subtree into an exact rational, if possible.
fn fold_rational(n: &Node) -> Option<Rational> {
    match n {
        Node::Const(Constant::Rational(r)) => Some(*r),
        Node::Const(Constant::Float(_)) | Node::Var(_) | Node::Sqrt(_) => None,
        Node::Neg(a) => Some(-fold_rational(a)?),
        Node::Add(a, b) => fold_rational(a)?.checked_add(&fold_rational(b)?),
        Node::Sub(a, b) => fold_rational(a)?.checked_sub(&fold_rational(b)?),
        Node::Mul(a, b) => fold_rational(a)?.checked_mul(&fold_rational(b)?),
        Node::Div(a, b) => {
            let d = fold_rational(b)?;
            if *d.numer() == 0 {
                return None;
            }
            fold_rational(a)?.checked_div(&d)
        }
        Node::Pow(a, e) => {
            let base = fold_rational(a)?;
            if *e.denom() != 1 {
                return None;
            }
            let p = i32::try_from(*e.numer()).ok()?;
            if p < 0 && *base.numer() == 0 {
                return None;
            }
            let mut acc = Rational::from_integer(1);
            for _ in 0..p.unsigned_abs() {
                acc = acc.checked_mul(&base)?;
            }
            Some(if p < 0 { acc.recip() } else { acc })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn parses_power() {
        let e = ExprAst::parse("x^2").unwrap();
        assert_eq!(e.root(), &Node::Pow(Box::new(Node::Var(0)), r(2, 1)));
    }

    #[test]
    fn precedence_rules() {
        // ^ over unary minus
        let e = ExprAst::parse("-x^2").unwrap();
        assert_eq!(e.eval_scalar(3.0).unwrap(), -9.0);
        // right associative ^
        let e = ExprAst::parse("x^3^2").unwrap();
        assert_eq!(e.root(), &Node::Pow(Box::new(Node::Var(0)), r(9, 1)));
        // left associative - and /
        assert_eq!(ExprAst::parse("10 - 4 - 3").unwrap().eval_scalar(0.0).unwrap(), 3.0);
        assert_eq!(ExprAst::parse("x/2/4").unwrap().eval_scalar(16.0).unwrap(), 2.0);
        assert_eq!(ExprAst::parse("2 + 3*x").unwrap().eval_scalar(2.0).unwrap(), 8.0);
    }

    #[test]
    fn weierstrass_polynomial_at_one() {
        let e = ExprAst::parse("4*x^3 - (13/12)*x - 35/216").unwrap();
        assert_relative_eq!(e.eval_scalar(1.0).unwrap(), 595.0 / 216.0, max_relative = 1e-15);
    }

    #[test]
    fn rational_literals_stay_exact() {
        let e = ExprAst::parse("13/12").unwrap();
        assert_eq!(e.root(), &Node::Const(Constant::Rational(r(13, 12))));
        let e = ExprAst::parse("1e-12").unwrap();
        assert_eq!(
            e.root(),
            &Node::Const(Constant::Rational(r(1, 1_000_000_000_000)))
        );
        let e = ExprAst::parse("2.5e-31").unwrap();
        assert_eq!(e.root(), &Node::Const(Constant::Float(2.5e-31)));
    }

    #[test]
    fn syntax_error_offsets() {
        match ExprAst::parse("x +") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(ExprAst::parse("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(ExprAst::parse(""), Err(Error::Syntax { .. })));
        assert!(matches!(ExprAst::parse("x ^ x"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(ExprAst::parse("x $ 1"), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(
            ExprAst::parse("x + y").unwrap_err(),
            Error::UnknownIdentifier {
                name: "y".into(),
                offset: 4
            }
        );
        assert!(matches!(
            ExprAst::parse("exp(x)"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(ExprAst::parse_bivariate("x*y").is_ok());
        assert!(ExprAst::parse_with_vars("1/(1-t)", &["t"]).is_ok());
    }

    #[test]
    fn scalar_domain_errors() {
        let e = ExprAst::parse("sqrt(x)").unwrap();
        assert!(matches!(e.eval_scalar(-1.0), Err(Error::Domain(_))));
        let e = ExprAst::parse("x^(1/3)").unwrap();
        assert!(matches!(e.eval_scalar(-8.0), Err(Error::Domain(_))));
        let e = ExprAst::parse("1/x").unwrap();
        assert_eq!(e.eval_scalar(0.0), Err(Error::DivisionByZero));
        let e = ExprAst::parse("x^(-2)").unwrap();
        assert_eq!(e.eval_scalar(0.0), Err(Error::DivisionByZero));
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(ExprAst::parse("x^2").unwrap().eval_scalar(3.0).unwrap(), 9.0);
        assert_eq!(ExprAst::parse("x/(2-x)").unwrap().eval_scalar(1.5).unwrap(), 3.0);
        let e = ExprAst::parse_bivariate("x*y + 0.001*x^2").unwrap();
        assert_relative_eq!(e.eval_scalar2(2.0, 3.0).unwrap(), 6.004);
    }

    #[test]
    fn jet_examples() {
        let sq = ExprAst::parse("x^2").unwrap();
        assert_eq!(sq.eval_jet(&Jet::variable(1.0, 2)).unwrap().coeffs(), &[1.0, 2.0, 1.0]);
        let geo = ExprAst::parse("1/(1-x)").unwrap();
        assert_eq!(geo.eval_jet(&Jet::variable(0.0, 4)).unwrap().coeffs(), &[1.0; 5]);
        let rt = ExprAst::parse("sqrt(x)").unwrap();
        assert!(matches!(rt.eval_jet(&Jet::variable(0.0, 3)), Err(Error::Domain(_))));
        let inv = ExprAst::parse("1/x").unwrap();
        assert!(matches!(inv.eval_jet(&Jet::variable(0.0, 3)), Err(Error::Domain(_))));
    }

    #[test]
    fn display_round_trip() {
        for src in [
            "4*x^3 - (13/12)*x - 35/216",
            "-x^2 + sqrt(1 - x)/3",
            "x^(-1/2) * 2.5e-31",
            "x^(3/2) - -x",
            "1/0",
        ] {
            let a = ExprAst::parse(src).unwrap();
            let b = ExprAst::parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{src} -> {a}");
        }
    }

    #[test]
    fn sqrt_radicand_detection() {
        let e = ExprAst::parse("sqrt(4*x^3 - 1)").unwrap();
        assert!(e.sqrt_radicand().is_some());
        let e = ExprAst::parse("x^(1/2)").unwrap();
        assert!(e.sqrt_radicand().is_some());
        let e = ExprAst::parse("2*sqrt(x)").unwrap();
        assert!(e.sqrt_radicand().is_none());
    }
}
