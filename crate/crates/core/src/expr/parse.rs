//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := ['-'] term (('+' | '-') term)*
//! term     := NUMBER                       bare constant
//!           | NUMBER '*' factor ('*' factor)*   leading coefficient
//!           | factor ('*' factor)*
//! factor   := primary ['^' exponent]
//! primary  := 'X' INT | NUMBER | FUNC '(' expr ')' | '(' expr ')'
//! exponent := NUMBER ['/' INT] | '(' ['-'] NUMBER ['/' INT] ')'
//! ```
//!
//! Inside a function call a single scaled term `c*e` becomes the function
//! coefficient, so `tan(1*X1)` is `Func { Tan, 1, X1 }`.

use std::fmt;

use num_traits::{One, Zero};

use super::{Exponent, Expr, FuncKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: expected {}, found {}", self.position, self.expected, self.found)
    }
}

impl std::error::Error for ParseError {}

pub fn parse(input: &str) -> Result<Expr, ParseError> {
    let tokens = lex(input)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect(&Tok::End, "end of input")?;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) | Tok::Ident(s) => write!(f, "{s:?}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = input.as_bytes();
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
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'^' => Some(Tok::Caret),
            b'/' => Some(Tok::Slash),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((start, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if i < bytes.len() && bytes[i].is_ascii_digit() {
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            out.push((start, Tok::Num(input[start..i].to_owned())));
            continue;
        }
        if c.is_ascii_alphabetic() {
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(input[start..i].to_owned())));
            continue;
        }
        let ch = input[start..].chars().next().unwrap();
        return Err(ParseError { position: start, expected: "a token".into(), found: format!("{ch:?}") });
    }
    out.push((input.len(), Tok::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let (position, tok) = &self.tokens[self.pos];
        ParseError { position: *position, expected: expected.into(), found: tok.to_string() }
    }

    fn expect(&mut self, t: &Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let v = s.parse::<f64>().map_err(|_| self.error("a number"))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.error("a number")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut sign = 1.0;
        if self.peek() == &Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        let (c, e) = self.term()?;
        let mut terms = vec![(sign * c, e)];
        loop {
            let sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.bump();
            let (c, e) = self.term()?;
            terms.push((sign * c, e));
        }
        if terms.len() == 1 {
            let (c, e) = terms.pop().unwrap();
            if c == 1.0 {
                return Ok(e);
            }
            if e == Expr::Const(1.0) {
                return Ok(Expr::Const(c));
            }
            terms.push((c, e));
        }
        Ok(Expr::Sum(terms))
    }

    fn term(&mut self) -> Result<(f64, Expr), ParseError> {
        let mut coeff = 1.0;
        if matches!(self.peek(), Tok::Num(_)) && self.peek_at(1) != &Tok::Caret {
            coeff = self.number()?;
            if self.peek() != &Tok::Star {
                return Ok((coeff, Expr::Const(1.0)));
            }
            self.bump();
        }
        let mut factors = vec![self.factor()?];
        while self.peek() == &Tok::Star {
            self.bump();
            factors.push(self.factor()?);
        }
        Ok((coeff, Expr::product(factors)))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() == &Tok::Caret {
            self.bump();
            let a = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), a));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(_) => Ok(Expr::Const(self.number()?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(kind) = FuncKind::from_name(&name) {
                    self.bump();
                    self.expect(&Tok::LParen, "'(' after function name")?;
                    let inner = self.expr()?;
                    self.expect(&Tok::RParen, "')'")?;
                    return Ok(match inner {
                        Expr::Sum(mut ts) if ts.len() == 1 => {
                            let (c, e) = ts.pop().unwrap();
                            Expr::func(kind, c, e)
                        }
                        e => Expr::func(kind, 1.0, e),
                    });
                }
                let index = name
                    .strip_prefix('X')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| self.error("a feature X1, X2, ... or a function name"))?;
                self.bump();
                Ok(Expr::Feature(index - 1))
            }
            _ => Err(self.error("a feature, number, function or '('")),
        }
    }

    fn exponent(&mut self) -> Result<Exponent, ParseError> {
        let paren = self.peek() == &Tok::LParen;
        if paren {
            self.bump();
        }
        let mut negative = false;
        if paren && self.peek() == &Tok::Minus {
            self.bump();
            negative = true;
        }
        let mut a = self.rational_literal()?;
        if self.peek() == &Tok::Slash {
            self.bump();
            let d = self.rational_literal()?;
            if d.is_zero() || !d.denom().is_one() {
                return Err(self.error("a non-zero integer denominator"));
            }
            a /= d;
        }
        if paren {
            self.expect(&Tok::RParen, "')' closing the exponent")?;
        }
        Ok(if negative { -a } else { a })
    }

    fn rational_literal(&mut self) -> Result<Exponent, ParseError> {
        let Tok::Num(text) = self.peek().clone() else {
            return Err(self.error("an exponent"));
        };
        let a = decimal_to_rational(&text).ok_or_else(|| self.error("a decimal exponent"))?;
        self.bump();
        Ok(a)
    }
}

/// Exact rational value of a plain decimal literal such as `2.5`.
fn decimal_to_rational(text: &str) -> Option<Exponent> {
    if text.contains(['e', 'E']) {
        let v: f64 = text.parse().ok()?;
        return crate::data::rational_from_f64(v);
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 12 || int.len() > 12 || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    Some(Exponent::new(n, 10i64.pow(frac.len() as u32)))
}
