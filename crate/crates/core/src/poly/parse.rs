//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' integer | '(' expr ')'
//! ```
//!
//! Implicit multiplication is rejected. Positions in errors are zero-based
//! character offsets into the input.

use std::fmt;

use thiserror::Error;

use super::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    VariableOutOfRange { index: usize, num_vars: usize },
    BadExponent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => {
                write!(f, "syntax error at position {}: {}", self.position, msg)
            }
            ParseErrorKind::VariableOutOfRange { index, num_vars } => write!(
                f,
                "variable x{} at position {} is out of range (problem has {} variables)",
                index, self.position, num_vars
            ),
            ParseErrorKind::BadExponent(found) => write!(
                f,
                "exponent at position {} must be a nonnegative integer, found `{}`",
                self.position, found
            ),
        }
    }
}

pub(super) fn parse(text: &str, num_vars: usize) -> Result<Polynomial, ParseError> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        num_vars,
    };
    parser.skip_ws();
    if parser.peek().is_none() {
        return Err(parser.syntax("empty expression"));
    }
    let poly = parser.expr()?;
    parser.skip_ws();
    match parser.peek() {
        None => Ok(poly),
        Some(c) => Err(parser.syntax(&format!("unexpected `{}`", c))),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    num_vars: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError {
            position: self.pos,
            kind: ParseErrorKind::Syntax(msg.to_string()),
        }
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = &acc + &rhs;
                }
                Some('-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = &acc - &rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = &acc * &rhs;
                }
                Some(c) if c == '(' || c == 'x' || c.is_ascii_digit() || c == '.' => {
                    return Err(self.syntax("implicit multiplication is not allowed; use `*`"));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        let mut token = String::new();
        if self.peek() == Some('-') {
            token.push('-');
            self.pos += 1;
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '.' {
                token.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        if token.is_empty() {
            return Err(self.syntax("expected an exponent after `^`"));
        }
        match token.parse::<u32>() {
            Ok(k) => Ok(base.pow(k)),
            Err(_) => Err(ParseError {
                position: start,
                kind: ParseErrorKind::BadExponent(token),
            }),
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('x') => {
                self.pos += 1;
                let digits = self.digits();
                if digits.is_empty() {
                    return Err(self.syntax("expected a variable index after `x`"));
                }
                let index: usize = digits
                    .parse()
                    .map_err(|_| self.syntax("variable index too large"))?;
                if index == 0 || index > self.num_vars {
                    return Err(ParseError {
                        position: start,
                        kind: ParseErrorKind::VariableOutOfRange {
                            index,
                            num_vars: self.num_vars,
                        },
                    });
                }
                Ok(Polynomial::variable(self.num_vars, index - 1))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let mut literal = self.digits();
                if self.peek() == Some('.') {
                    self.pos += 1;
                    literal.push('.');
                    literal.push_str(&self.digits());
                }
                if literal == "." {
                    return Err(ParseError {
                        position: start,
                        kind: ParseErrorKind::Syntax("malformed number".into()),
                    });
                }
                let value: f64 = literal.parse().map_err(|_| ParseError {
                    position: start,
                    kind: ParseErrorKind::Syntax(format!("malformed number `{}`", literal)),
                })?;
                Ok(Polynomial::constant(self.num_vars, value))
            }
            Some(c) => Err(self.syntax(&format!("unexpected `{}`", c))),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }
}
