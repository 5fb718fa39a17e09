//! Expression language for per-index map coefficients.
//!
//! Grammar (whitespace-insensitive, no implicit multiplication):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := integer | 'i' | '(' expr ')'
//! ```
//!
//! `^` binds tightest and takes a nonnegative integer literal, so `-i^2`
//! means `-(i^2)`. Evaluation at an index is exact rational arithmetic.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;

use crate::error::{Error, Result};
use crate::rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    /// The index variable `i`.
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> std::result::Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => pos += 1,
            b'+' => { out.push((pos, Tok::Plus)); pos += 1 }
            b'-' => { out.push((pos, Tok::Minus)); pos += 1 }
            b'*' => { out.push((pos, Tok::Star)); pos += 1 }
            b'/' => { out.push((pos, Tok::Slash)); pos += 1 }
            b'^' => { out.push((pos, Tok::Caret)); pos += 1 }
            b'(' => { out.push((pos, Tok::LParen)); pos += 1 }
            b')' => { out.push((pos, Tok::RParen)); pos += 1 }
            b'0'..=b'9' => {
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                let digits = &src[start..pos];
                out.push((start, Tok::Int(digits.parse().expect("digits"))));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = pos;
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_')
                {
                    pos += 1;
                }
                out.push((start, Tok::Ident(src[start..pos].to_string())));
            }
            _ => {
                return Err(ParseError {
                    pos,
                    msg: format!("unexpected character '{}'", &src[pos..].chars().next().unwrap()),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    at: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { pos: self.pos(), msg: msg.into() }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> std::result::Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let pos = self.pos();
            match self.bump() {
                Some(Tok::Int(n)) => {
                    let exp = u32::try_from(&n)
                        .map_err(|_| ParseError { pos, msg: format!("exponent {n} is too large") })?;
                    return Ok(Expr::Pow(Box::new(base), exp));
                }
                _ => {
                    return Err(ParseError {
                        pos,
                        msg: "exponent must be a nonnegative integer literal".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> std::result::Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Int(n)),
            Some(Tok::Ident(name)) if name == "i" => Ok(Expr::Var),
            Some(Tok::Ident(name)) => Err(ParseError {
                pos,
                msg: format!("unknown identifier '{name}' (the only variable is 'i')"),
            }),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(ParseError { pos: self.pos(), msg: "expected ')'".into() }),
                }
            }
            Some(other) => Err(ParseError { pos, msg: format!("expected a value, found {other:?}") }),
            None => Err(ParseError { pos, msg: "unexpected end of input".into() }),
        }
    }
}

/// Parses one coefficient expression.
pub fn parse(src: &str) -> std::result::Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks: &toks, at: 0, end: src.len() };
    let expr = p.expr()?;
    if p.at < toks.len() {
        let hint = match p.peek() {
            Some(Tok::Int(_)) | Some(Tok::Ident(_)) => "; implicit multiplication is not supported, write '*'",
            _ => "",
        };
        return Err(p.err(format!("unexpected trailing input{hint}")));
    }
    Ok(expr)
}

impl Expr {
    /// Exact value at index `i`.
    pub fn eval(&self, i: u32) -> Result<BigRational> {
        match self {
            Expr::Int(n) => Ok(BigRational::from_integer(n.clone())),
            Expr::Var => Ok(BigRational::from_integer(BigInt::from(i))),
            Expr::Neg(e) => Ok(-e.eval(i)?),
            Expr::Add(a, b) => Ok(a.eval(i)? + b.eval(i)?),
            Expr::Sub(a, b) => Ok(a.eval(i)? - b.eval(i)?),
            Expr::Mul(a, b) => Ok(a.eval(i)? * b.eval(i)?),
            Expr::Div(a, b) => {
                let denom = b.eval(i)?;
                if denom.is_zero() {
                    return Err(Error::DivisionByZero { index: i });
                }
                Ok(a.eval(i)? / denom)
            }
            Expr::Pow(base, k) => Ok(rational::pow_u32(&base.eval(i)?, *k)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Int(_) | Expr::Var => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.prec();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Int(n) => write!(f, "{n}")?,
            Expr::Var => write!(f, "i")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "-")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(base, k) => {
                base.fmt_prec(f, 5)?;
                write!(f, "^{k}")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    /// Prints a form that parses back to the identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn eval_str(src: &str, i: u32) -> BigRational {
        parse(src).unwrap().eval(i).unwrap()
    }

    #[test]
    fn coefficient_expressions_evaluate_exactly() {
        assert_eq!(eval_str("i/(i+1)", 3), q(3, 4));
        assert_eq!(eval_str("1/(i+1)^2", 1), q(1, 4));
        assert_eq!(eval_str("(2*i+1)/i", 2), q(5, 2));
        assert_eq!(eval_str("-i/(i+1)", 2), q(-2, 3));
        assert_eq!(eval_str("1/(i+1)", 4), q(1, 5));
    }

    #[test]
    fn unary_minus_binds_below_power() {
        assert_eq!(parse("-i^2").unwrap(), parse("-(i^2)").unwrap());
        assert_eq!(eval_str("-i^2", 2), q(-4, 1));
        assert_eq!(eval_str("(-i)^2", 2), q(4, 1));
    }

    #[test]
    fn whitespace_is_ignored() {
        assert_eq!(parse(" i / ( i + 1 ) ").unwrap(), parse("i/(i+1)").unwrap());
    }

    #[test]
    fn implicit_multiplication_is_rejected() {
        let err = parse("2i").unwrap_err();
        assert_eq!(err.pos, 1);
        assert!(err.msg.contains("implicit multiplication"), "{}", err.msg);
    }

    #[test]
    fn error_positions_point_at_the_problem() {
        assert_eq!(parse("i+").unwrap_err().pos, 2);
        assert_eq!(parse("(i+1").unwrap_err().pos, 4);
        assert_eq!(parse("i^i").unwrap_err().pos, 2);
        assert_eq!(parse("i^-1").unwrap_err().pos, 2);
        let err = parse("x+1").unwrap_err();
        assert_eq!(err.pos, 0);
        assert!(err.msg.contains("unknown identifier 'x'"));
        assert_eq!(parse("i ? 1").unwrap_err().pos, 2);
    }

    #[test]
    fn division_by_zero_names_the_index() {
        let e = parse("1/(i-1)").unwrap();
        assert_eq!(e.eval(2).unwrap(), q(1, 1));
        match e.eval(1) {
            Err(Error::DivisionByZero { index: 1 }) => {}
            other => panic!("expected division by zero at i = 1, got {other:?}"),
        }
    }

    #[test]
    fn display_round_trips_the_named_coefficients() {
        for src in ["i/(i+1)", "1/(i+1)^2", "(2*i+1)/i", "-i/(i+1)", "1/(i+1)", "-i^2"] {
            let tree = parse(src).unwrap();
            let printed = tree.to_string();
            assert_eq!(parse(&printed).unwrap(), tree, "{src} -> {printed}");
        }
    }

    mod properties {
        use super::*;
        use num::BigInt;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0i64..30).prop_map(|n| Expr::Int(BigInt::from(n))),
                Just(Expr::Var),
            ];
            leaf.prop_recursive(4, 24, 3, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                    inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                    (inner, 0u32..4).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
                ]
            })
        }

        /// Fraction arithmetic on i128, written independently of the
        /// BigRational path. None signals overflow or division by zero.
        fn eval_i128(e: &Expr, i: i128) -> Option<(i128, i128)> {
            fn gcd(a: i128, b: i128) -> i128 {
                if b == 0 { a.abs() } else { gcd(b, a % b) }
            }
            fn norm(n: i128, d: i128) -> Option<(i128, i128)> {
                if d == 0 {
                    return None;
                }
                let g = gcd(n, d);
                let (mut n, mut d) = if g == 0 { (0, 1) } else { (n / g, d / g) };
                if d < 0 {
                    n = n.checked_neg()?;
                    d = d.checked_neg()?;
                }
                Some((n, d))
            }
            let (n, d) = match e {
                Expr::Int(v) => (i128::try_from(v).ok()?, 1),
                Expr::Var => (i, 1),
                Expr::Neg(a) => {
                    let (n, d) = eval_i128(a, i)?;
                    (n.checked_neg()?, d)
                }
                Expr::Add(a, b) => {
                    let (an, ad) = eval_i128(a, i)?;
                    let (bn, bd) = eval_i128(b, i)?;
                    (an.checked_mul(bd)?.checked_add(bn.checked_mul(ad)?)?, ad.checked_mul(bd)?)
                }
                Expr::Sub(a, b) => {
                    let (an, ad) = eval_i128(a, i)?;
                    let (bn, bd) = eval_i128(b, i)?;
                    (an.checked_mul(bd)?.checked_sub(bn.checked_mul(ad)?)?, ad.checked_mul(bd)?)
                }
                Expr::Mul(a, b) => {
                    let (an, ad) = eval_i128(a, i)?;
                    let (bn, bd) = eval_i128(b, i)?;
                    (an.checked_mul(bn)?, ad.checked_mul(bd)?)
                }
                Expr::Div(a, b) => {
                    let (an, ad) = eval_i128(a, i)?;
                    let (bn, bd) = eval_i128(b, i)?;
                    if bn == 0 {
                        return None;
                    }
                    (an.checked_mul(bd)?, ad.checked_mul(bn)?)
                }
                Expr::Pow(a, k) => {
                    let (an, ad) = eval_i128(a, i)?;
                    let mut n: i128 = 1;
                    let mut d: i128 = 1;
                    for _ in 0..*k {
                        n = n.checked_mul(an)?;
                        d = d.checked_mul(ad)?;
                    }
                    (n, d)
                }
            };
            norm(n, d)
        }

        proptest! {
            #[test]
            fn print_parse_is_identity(e in arb_expr()) {
                let printed = e.to_string();
                prop_assert_eq!(parse(&printed).unwrap(), e, "printed: {}", printed);
            }

            #[test]
            fn agrees_with_independent_evaluator(e in arb_expr(), i in 1u32..50) {
                if let Some((n, d)) = eval_i128(&e, i as i128) {
                    let got = e.eval(i).unwrap();
                    let want = BigRational::new(BigInt::from(n), BigInt::from(d));
                    prop_assert_eq!(got, want);
                }
            }
        }
    }
}
