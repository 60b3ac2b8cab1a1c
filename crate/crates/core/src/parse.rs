//! Recursive-descent parser for matrix expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' int)?
//! primary := number ('/' number)? | atom | '(' expr ')'
//! atom    := 'S' '(' int ')' | 'T' '(' int ')' | 'Dgeo' '(' rational ')'
//!          | 'Dfact' '(' int ')' | 'E' '(' nat ',' nat ')' | 'I'
//!          | 'conj' '(' expr ',' expr ')'
//! int     := '-'? number
//! ```
//!
//! `^` binds tighter than unary minus, which binds tighter than `*`, which
//! binds tighter than `+` and `-`. Whitespace is ignored.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::expr::MatrixExpr;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset of the offending token.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" or "),
            self.found
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    LParen,
    RParen,
    Comma,
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
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Caret => write!(f, "'^'"),
            Tok::Slash => write!(f, "'/'"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        let start = k;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                k += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'^' => Tok::Caret,
            b'/' => Tok::Slash,
            b'0'..=b'9' => {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                out.push((start, Tok::Num(src[start..k].parse().unwrap())));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while k < bytes.len() && bytes[k].is_ascii_alphanumeric() {
                    k += 1;
                }
                out.push((start, Tok::Ident(src[start..k].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap();
                return Err(ParseError {
                    offset: start,
                    expected: vec!["expression".into()],
                    found: format!("character {ch:?}"),
                });
            }
        };
        out.push((start, tok));
        k += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

const ATOMS: &[&str] = &["S", "T", "Dgeo", "Dfact", "E", "I", "conj"];

impl Parser {
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

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(&[name])
        }
    }

    fn expr(&mut self) -> Result<MatrixExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = MatrixExpr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = MatrixExpr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<MatrixExpr, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = MatrixExpr::mul(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<MatrixExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(MatrixExpr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<MatrixExpr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let n = self.int()?;
            return Ok(MatrixExpr::pow(base, n));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<BigInt, ParseError> {
        match self.peek() {
            Tok::Num(_) => match self.bump() {
                Tok::Num(n) => Ok(n),
                _ => unreachable!(),
            },
            _ => self.error(&["integer"]),
        }
    }

    fn signed(&mut self) -> Result<BigInt, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.number()?);
        }
        match self.peek() {
            Tok::Num(_) => self.number(),
            _ => self.error(&["'-'", "integer"]),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let at = self.offset();
        let n = self.signed()?;
        n.to_i64().ok_or(ParseError {
            offset: at,
            expected: vec!["64-bit integer".into()],
            found: format!("number {n}"),
        })
    }

    fn nat(&mut self) -> Result<u64, ParseError> {
        let at = self.offset();
        let n = self.number()?;
        n.to_u64().filter(|&v| v >= 1).ok_or(ParseError {
            offset: at,
            expected: vec!["positive integer".into()],
            found: format!("number {n}"),
        })
    }

    fn rational(&mut self, signed: bool) -> Result<Rational, ParseError> {
        let num = if signed { self.signed()? } else { self.number()? };
        if *self.peek() != Tok::Slash {
            return Ok(Rational::from_integer(num));
        }
        self.bump();
        let at = self.offset();
        let den = self.number()?;
        if den.is_zero() {
            return Err(ParseError {
                offset: at,
                expected: vec!["nonzero denominator".into()],
                found: "number 0".into(),
            });
        }
        Ok(Rational::new(num, den))
    }

    fn primary(&mut self) -> Result<MatrixExpr, ParseError> {
        match self.peek().clone() {
            Tok::Num(_) => Ok(MatrixExpr::Lit(self.rational(false)?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let e = match name.as_str() {
                    "I" => {
                        self.bump();
                        return Ok(MatrixExpr::Identity);
                    }
                    "S" | "T" | "Dfact" => {
                        self.bump();
                        self.expect(Tok::LParen, "'('")?;
                        let n = self.int()?;
                        match name.as_str() {
                            "S" => MatrixExpr::Shift(n),
                            "T" => MatrixExpr::Weighted(n),
                            _ => MatrixExpr::Dfact(n),
                        }
                    }
                    "Dgeo" => {
                        self.bump();
                        self.expect(Tok::LParen, "'('")?;
                        MatrixExpr::Dgeo(self.rational(true)?)
                    }
                    "E" => {
                        self.bump();
                        self.expect(Tok::LParen, "'('")?;
                        let i = self.nat()?;
                        self.expect(Tok::Comma, "','")?;
                        MatrixExpr::Unit(i, self.nat()?)
                    }
                    "conj" => {
                        self.bump();
                        self.expect(Tok::LParen, "'('")?;
                        let u = self.expr()?;
                        self.expect(Tok::Comma, "','")?;
                        MatrixExpr::conj(u, self.expr()?)
                    }
                    _ => return self.error(ATOMS),
                };
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            _ => {
                let mut expected = vec!["number", "'('", "'-'"];
                expected.extend_from_slice(ATOMS);
                self.error(&expected)
            }
        }
    }
}

pub fn parse(src: &str) -> Result<MatrixExpr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error(&["operator", "end of input"]);
    }
    Ok(e)
}

impl FromStr for MatrixExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}
