//! Text grammar for expressions in scenario files.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := atom ('^' exponent)?
//! exponent := INT | '-' INT | '(' ['-'] INT ')'
//! atom     := NUMBER | NUMBER 'i' | 'i' | 'z' | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Division is only accepted by nonzero constants, by `(z - c)` with `c` a
//! declared puncture, and by products and powers of those.

use num_complex::Complex64;

use super::{Expr, Node};
use crate::domain::PuncturedPlane;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
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

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match ch {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
                let imag =
                    i < bytes.len() && bytes[i] == b'i' && !bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphanumeric());
                if imag {
                    i += 1;
                    out.push((start, Tok::Imag(value)));
                } else {
                    out.push((start, Tok::Num(value)));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let c = src[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{c}`")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    punctures: &'a [Complex64],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    let at = self.offset();
                    let den = self.unary()?;
                    let inv = invert(&den, self.punctures).map_err(|e| match e {
                        Error::Syntax { message, .. } => syntax(at, message),
                        other => other,
                    })?;
                    acc = acc * inv;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let k = self.exponent()?;
        base.powi(k)
            .map_err(|_| syntax(at, format!("negative power of `{base}`, which may vanish on the plane")))
    }

    fn exponent(&mut self) -> Result<i32> {
        let parens = *self.peek() == Tok::LParen;
        if parens {
            self.bump();
        }
        let negative = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        let at = self.offset();
        let k = match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 1e6 => v as i32,
            _ => return Err(syntax(at, "expected an integer exponent")),
        };
        if parens {
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(if negative { -k } else { k })
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::real(v)),
            Tok::Imag(v) => Ok(Expr::constant(Complex64::new(0.0, v))),
            Tok::Ident(name) => match name.as_str() {
                "z" => Ok(Expr::z()),
                "i" => Ok(Expr::constant(Complex64::new(0.0, 1.0))),
                "exp" => {
                    self.expect(Tok::LParen, "`(` after exp")?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(inner.exp())
                }
                other => Err(syntax(at, format!("unknown identifier `{other}`"))),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::End => Err(syntax(at, "unexpected end of input")),
            _ => Err(syntax(at, "expected a number, `z`, `exp(...)` or `(`")),
        }
    }
}

/// If `e` is `z - c`, returns `c`.
fn linear_center(e: &Expr) -> Option<Complex64> {
    match e.node() {
        Node::Var => Some(Complex64::new(0.0, 0.0)),
        Node::Sum(xs) if xs.len() == 2 => match (xs[0].node(), xs[1].node()) {
            (Node::Var, Node::Const(a)) => Some(-a),
            _ => None,
        },
        _ => None,
    }
}

/// Reciprocal of an admissible divisor.
fn invert(e: &Expr, punctures: &[Complex64]) -> Result<Expr> {
    match e.node() {
        Node::Const(c) => {
            if *c == Complex64::new(0.0, 0.0) {
                Err(Error::InvalidDivisor(e.to_string()))
            } else {
                Ok(Expr::constant(c.inv()))
            }
        }
        Node::Pole { center, .. } => Ok(Expr::linear(*center)),
        Node::Exp(u) => Ok((-u.clone()).exp()),
        Node::Pow(b, k) => Ok(invert(b, punctures)?.pow_unchecked(*k)),
        Node::Product(xs) => Ok(Expr::product(
            xs.iter().map(|x| invert(x, punctures)).collect::<Result<Vec<_>>>()?,
        )),
        _ => {
            let c = linear_center(e).ok_or_else(|| Error::InvalidDivisor(e.to_string()))?;
            let index = punctures
                .iter()
                .position(|p| *p == c)
                .ok_or(Error::UndeclaredPoleCenter(c))?;
            Ok(Expr::from_node(Node::Pole { index, center: c }))
        }
    }
}

/// Parses `src` with pole centers resolved against the plane's punctures.
pub fn parse(src: &str, plane: &PuncturedPlane) -> Result<Expr> {
    parse_with_punctures(src, plane.punctures())
}

pub fn parse_with_punctures(src: &str, punctures: &[Complex64]) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        punctures,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}
