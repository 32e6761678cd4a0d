//! Recursive-descent parser for the field expression DSL.
//!
//! Grammar (standard precedence, `^` binds tightest, no chained `^`):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! atom     := NUMBER | NUMBER 'i' | 'i' | 'x' | 'y' | 'z' | 's'
//!           | 'exp' '(' expr ')' | 'conj' '(' expr ')' | '(' expr ')'
//! exponent := ['-'] INTEGER | ['-'] '0.5' | '(' ['-'] '1' '/' '2' ')'
//! ```
//!
//! `s` is the quartic gauge `(x²+y²)² + z²`. Errors carry the 1-based
//! column and the expected-token set. Pretty-printing a parsed tree and
//! re-parsing yields an identical tree (parsed constants are pure real or
//! pure imaginary, which the printer preserves).

use num_complex::Complex64;

use crate::hgroup::ScalarField;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
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
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let col = i + 1;
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '+' => {
                out.push(Spanned { tok: Tok::Plus, col });
                i += 1;
            }
            '-' => {
                out.push(Spanned { tok: Tok::Minus, col });
                i += 1;
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, col });
                i += 1;
            }
            '/' => {
                out.push(Spanned { tok: Tok::Slash, col });
                i += 1;
            }
            '^' => {
                out.push(Spanned { tok: Tok::Caret, col });
                i += 1;
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, col });
                i += 1;
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, col });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    col,
                    message: format!("malformed number `{text}`"),
                    expected: "a numeric literal".into(),
                })?;
                if i < bytes.len() && bytes[i] == b'i' {
                    i += 1;
                    out.push(Spanned {
                        tok: Tok::Imag(value),
                        col,
                    });
                } else {
                    out.push(Spanned {
                        tok: Tok::Num(value),
                        col,
                    });
                }
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphabetic() {
                    i += 1;
                }
                let name = &src[start..i];
                if name == "i" {
                    out.push(Spanned {
                        tok: Tok::Imag(1.0),
                        col,
                    });
                } else {
                    out.push(Spanned {
                        tok: Tok::Ident(name.to_string()),
                        col,
                    });
                }
            }
            other => {
                return Err(Error::Syntax {
                    col,
                    message: format!("unexpected character `{other}`"),
                    expected: "an operator, literal or identifier".into(),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|s| s.col)
            .unwrap_or(self.end_col)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn error(&self, expected: &str) -> Error {
        let found = match self.peek() {
            Some(t) => format!("found {t:?}"),
            None => "found end of input".to_string(),
        };
        Error::Syntax {
            col: self.col(),
            message: found,
            expected: expected.to_string(),
        }
    }

    fn expr(&mut self) -> Result<ScalarField> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = lhs + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarField> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = lhs * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarField> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarField> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let exponent = self.exponent()?;
        Ok(match exponent {
            Exponent::Int(n) => base.powi(n),
            Exponent::Half => base.sqrt(),
            Exponent::NegHalf => base.inv_sqrt(),
        })
    }

    fn exponent(&mut self) -> Result<Exponent> {
        let negate = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                exponent_from_value(if negate { -v } else { v }, self.col())
            }
            Some(Tok::LParen) if !negate => {
                self.pos += 1;
                let inner_neg = if self.peek() == Some(&Tok::Minus) {
                    self.pos += 1;
                    true
                } else {
                    false
                };
                let num = match self.bump() {
                    Some(Tok::Num(v)) => v,
                    _ => return Err(self.error("an integer or 1/2")),
                };
                if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    let den = match self.bump() {
                        Some(Tok::Num(v)) => v,
                        _ => return Err(self.error("the denominator 2")),
                    };
                    self.expect(Tok::RParen, "a closing parenthesis")?;
                    if num == 1.0 && den == 2.0 {
                        Ok(if inner_neg {
                            Exponent::NegHalf
                        } else {
                            Exponent::Half
                        })
                    } else {
                        Err(Error::Syntax {
                            col: self.col(),
                            message: format!("unsupported rational exponent {num}/{den}"),
                            expected: "an integer or ±1/2".into(),
                        })
                    }
                } else {
                    self.expect(Tok::RParen, "a closing parenthesis")?;
                    exponent_from_value(if inner_neg { -num } else { num }, self.col())
                }
            }
            _ => Err(self.error("an integer or ±1/2 exponent")),
        }
    }

    fn atom(&mut self) -> Result<ScalarField> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(ScalarField::constant(v))
            }
            Some(Tok::Imag(v)) => {
                self.pos += 1;
                Ok(ScalarField::constant(Complex64::new(0.0, v)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(ScalarField::x()),
                    "y" => Ok(ScalarField::y()),
                    "z" => Ok(ScalarField::z()),
                    "s" => Ok(ScalarField::gauge()),
                    "exp" => {
                        self.expect(Tok::LParen, "an opening parenthesis")?;
                        let inner = self.expr()?;
                        self.expect(Tok::RParen, "a closing parenthesis")?;
                        Ok(inner.exp())
                    }
                    "conj" => {
                        self.expect(Tok::LParen, "an opening parenthesis")?;
                        let inner = self.expr()?;
                        self.expect(Tok::RParen, "a closing parenthesis")?;
                        Ok(inner.conj())
                    }
                    other => Err(Error::Syntax {
                        col: self.col().saturating_sub(other.len()),
                        message: format!("unknown identifier `{other}`"),
                        expected: "x, y, z, s, exp or conj".into(),
                    }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "a closing parenthesis")?;
                Ok(inner)
            }
            _ => Err(self.error("a literal, variable or parenthesized expression")),
        }
    }
}

enum Exponent {
    Int(i32),
    Half,
    NegHalf,
}

fn exponent_from_value(v: f64, col: usize) -> Result<Exponent> {
    if v == 0.5 {
        return Ok(Exponent::Half);
    }
    if v == -0.5 {
        return Ok(Exponent::NegHalf);
    }
    if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
        return Ok(Exponent::Int(v as i32));
    }
    Err(Error::Syntax {
        col,
        message: format!("unsupported exponent {v}"),
        expected: "an integer or ±1/2".into(),
    })
}

/// Parses a field expression.
pub fn parse_field(src: &str) -> Result<ScalarField> {
    let toks = lex(src)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end_col: src.len() + 1,
    };
    let field = parser.expr()?;
    if parser.peek().is_some() {
        return Err(parser.error("end of input"));
    }
    Ok(field)
}
