//! Recursive-descent parser for the trace-polynomial language.
//!
//! ```text
//! poly   := sign? term (('+' | '-') term)*
//! term   := (coef '*')* 'Tr' '(' word ')'
//! coef   := real | imag | real ('+'|'-') imag | '(' sign? coef ')'
//! word   := factor ('*' factor)*
//! factor := atom ('^' integer)?
//! atom   := symbol | '(' word ')'
//! ```
//!
//! `real` is a decimal literal with optional exponent, `imag` is a real literal
//! followed by `i` (or a bare `i`).

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use super::symbols::{SymbolId, SymbolTable};
use super::trace::{TracePolynomial, TraceWord};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { expected: &'static str, found: String },
    UnexpectedEnd { expected: &'static str },
    UnknownSymbol(String),
    EmptyTrace,
    MalformedLiteral(String),
    BadExponent(String),
}

/// Syntax error with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found `{found}`")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "expected {expected}, found end of input")
            }
            ParseErrorKind::UnknownSymbol(s) => write!(f, "unknown symbol `{s}`"),
            ParseErrorKind::EmptyTrace => write!(f, "empty trace"),
            ParseErrorKind::MalformedLiteral(s) => write!(f, "malformed literal `{s}`"),
            ParseErrorKind::BadExponent(s) => write!(f, "bad exponent `{s}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Real(f64),
    Imag(f64),
    Ident(String),
    Star,
    Plus,
    Minus,
    LParen,
    RParen,
    Caret,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Real(x) => alloc::format!("{x}"),
            Tok::Imag(x) => alloc::format!("{x}i"),
            Tok::Ident(s) => s.clone(),
            Tok::Star => "*".into(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Caret => "^".into(),
        }
    }
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn lex(text: &str) -> core::result::Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        let start = pos;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                pos += 1;
                continue;
            }
            b'*' => out.push((start, Tok::Star)),
            b'+' => out.push((start, Tok::Plus)),
            b'-' => out.push((start, Tok::Minus)),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'^' => out.push((start, Tok::Caret)),
            b'0'..=b'9' | b'.' => {
                while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                    pos += 1;
                }
                if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                    pos += 1;
                    if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
                        pos += 1;
                    }
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
                let lit = &text[start..pos];
                let value: f64 = lit.parse().map_err(|_| ParseError {
                    position: start,
                    kind: ParseErrorKind::MalformedLiteral(lit.into()),
                })?;
                if pos < bytes.len() && bytes[pos] == b'i' {
                    if pos + 1 < bytes.len() && is_ident_char(bytes[pos + 1]) {
                        let mut end = pos + 1;
                        while end < bytes.len() && is_ident_char(bytes[end]) {
                            end += 1;
                        }
                        return Err(ParseError {
                            position: start,
                            kind: ParseErrorKind::MalformedLiteral(text[start..end].into()),
                        });
                    }
                    pos += 1;
                    out.push((start, Tok::Imag(value)));
                } else if pos < bytes.len() && is_ident_char(bytes[pos]) {
                    let mut end = pos;
                    while end < bytes.len() && is_ident_char(bytes[end]) {
                        end += 1;
                    }
                    return Err(ParseError {
                        position: start,
                        kind: ParseErrorKind::MalformedLiteral(text[start..end].into()),
                    });
                } else {
                    out.push((start, Tok::Real(value)));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while pos < bytes.len() && is_ident_char(bytes[pos]) {
                    pos += 1;
                }
                let word = &text[start..pos];
                if word == "i" {
                    out.push((start, Tok::Imag(1.0)));
                } else {
                    out.push((start, Tok::Ident(word.into())));
                }
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
        pos += 1;
    }
    Ok(out)
}

struct Parser<'t> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    symbols: &'t SymbolTable,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.at + offset).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error(&self, expected: &'static str) -> ParseError {
        match self.toks.get(self.at) {
            Some((p, t)) => ParseError {
                position: *p,
                kind: ParseErrorKind::UnexpectedToken {
                    expected,
                    found: t.describe(),
                },
            },
            None => ParseError {
                position: self.end,
                kind: ParseErrorKind::UnexpectedEnd { expected },
            },
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> core::result::Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn polynomial(&mut self) -> core::result::Result<Vec<TraceWord>, ParseError> {
        let mut words = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Plus) => self.at += 1,
            Some(Tok::Minus) => {
                self.at += 1;
                sign = -1.0;
            }
            _ => {}
        }
        loop {
            let (coefficient, letters) = self.term(sign)?;
            words.push(TraceWord::new(coefficient, letters));
            match self.peek() {
                Some(Tok::Plus) => sign = 1.0,
                Some(Tok::Minus) => sign = -1.0,
                None => break,
                Some(_) => return Err(self.error("`+`, `-` or end of input")),
            }
            self.at += 1;
        }
        Ok(words)
    }

    fn term(&mut self, sign: f64) -> core::result::Result<(Complex64, Vec<SymbolId>), ParseError> {
        let mut coefficient = Complex64::new(sign, 0.0);
        let mut first = true;
        loop {
            match self.peek() {
                Some(Tok::Ident(name)) if name == "Tr" => break,
                None => return Err(self.error("a coefficient or `Tr`")),
                _ => {}
            }
            // a leading sign binds to the first literal: `-1+2i` is (-1+2i)
            let c = self.coefficient(if first { sign } else { 1.0 })?;
            coefficient = if first { c } else { coefficient * c };
            first = false;
            self.expect(Tok::Star, "`*` after a coefficient")?;
        }
        self.at += 1;
        self.expect(Tok::LParen, "`(` after Tr")?;
        let open = self.position();
        if self.peek() == Some(&Tok::RParen) {
            return Err(ParseError {
                position: open,
                kind: ParseErrorKind::EmptyTrace,
            });
        }
        let letters = self.word()?;
        self.expect(Tok::RParen, "`)` closing Tr")?;
        Ok((coefficient, letters))
    }

    fn real(&mut self) -> Option<f64> {
        match self.peek() {
            Some(Tok::Real(x)) => {
                let x = *x;
                self.at += 1;
                Some(x)
            }
            _ => None,
        }
    }

    fn coefficient(&mut self, lead: f64) -> core::result::Result<Complex64, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.at += 1;
                let inner_sign = match self.peek() {
                    Some(Tok::Minus) => {
                        self.at += 1;
                        -1.0
                    }
                    Some(Tok::Plus) => {
                        self.at += 1;
                        1.0
                    }
                    _ => 1.0,
                };
                let c = self.coefficient(inner_sign)?;
                self.expect(Tok::RParen, "`)` closing a coefficient")?;
                Ok(c * lead)
            }
            Some(Tok::Imag(y)) => {
                self.at += 1;
                Ok(Complex64::new(0.0, lead * y))
            }
            Some(Tok::Real(_)) => {
                let re = self.real().unwrap_or_default() * lead;
                // `a+bi` / `a-bi`
                if let (Some(op @ (Tok::Plus | Tok::Minus)), Some(Tok::Imag(y))) =
                    (self.peek().cloned(), self.peek_at(1).cloned())
                {
                    self.at += 2;
                    let im = if op == Tok::Plus { y } else { -y };
                    return Ok(Complex64::new(re, im));
                }
                Ok(Complex64::new(re, 0.0))
            }
            _ => Err(self.error("a numeric coefficient")),
        }
    }

    fn word(&mut self) -> core::result::Result<Vec<SymbolId>, ParseError> {
        let mut letters = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.at += 1;
            letters.extend(self.factor()?);
        }
        Ok(letters)
    }

    fn factor(&mut self) -> core::result::Result<Vec<SymbolId>, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.at += 1;
        let pos = self.position();
        match self.peek().cloned() {
            Some(Tok::Real(x)) if x >= 1.0 && num_traits::Float::fract(x) == 0.0 && x <= 64.0 => {
                self.at += 1;
                let mut out = Vec::with_capacity(base.len() * x as usize);
                for _ in 0..x as usize {
                    out.extend_from_slice(&base);
                }
                Ok(out)
            }
            Some(t) => Err(ParseError {
                position: pos,
                kind: ParseErrorKind::BadExponent(t.describe()),
            }),
            None => Err(self.error("an integer exponent")),
        }
    }

    fn atom(&mut self) -> core::result::Result<Vec<SymbolId>, ParseError> {
        let pos = self.position();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.at += 1;
                if self.peek() == Some(&Tok::RParen) {
                    return Err(ParseError {
                        position: pos,
                        kind: ParseErrorKind::EmptyTrace,
                    });
                }
                let inner = self.word()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                match self.symbols.lookup(&name) {
                    Some(id) => Ok(alloc::vec![id]),
                    None => Err(ParseError {
                        position: pos,
                        kind: ParseErrorKind::UnknownSymbol(name),
                    }),
                }
            }
            _ => Err(self.error("a symbol")),
        }
    }
}

/// Parses and canonicalizes a trace polynomial.
pub fn parse(text: &str, symbols: Arc<SymbolTable>) -> Result<TracePolynomial> {
    let words = parse_raw(text, &symbols)?;
    Ok(TracePolynomial::from_words(symbols, words))
}

/// Parses without canonicalizing: words keep the letter order written.
pub fn parse_raw(text: &str, symbols: &SymbolTable) -> Result<Vec<TraceWord>> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        at: 0,
        end: text.len(),
        symbols,
    };
    if parser.peek().is_none() {
        return Err(parser.error("a term").into());
    }
    Ok(parser.polynomial()?)
}
