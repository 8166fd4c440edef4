//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = factor { ("*" | "/") factor } ;
//! factor   = "-" factor | power ;
//! power    = atom [ "^" exponent ] ;
//! exponent = [ "-" ] number ;
//! atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
//! variable = "x" digits ;            -- x1 .. xd, positional
//! function = "exp" | "ln" | "sin" | "cos" | "sqrt" | "tanh" ;
//! ```
//!
//! `^` requires a constant numeric exponent. Integer exponents become
//! [`Node::Pow`]; any other exponent `p` desugars to `exp(p*ln(base))`
//! with the attendant domain restriction to positive bases.

use super::{Expression, Func};
use thiserror::Error;

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> ParseError {
        ParseError { offset, message: message.into() }
    }
}

pub fn parse(source: &str, dim: usize) -> Result<Expression, ParseError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0, dim };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::new(p.pos, "unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expression::add(acc, self.term()?);
            } else if self.eat(b'-') {
                acc = Expression::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = Expression::mul(acc, self.factor()?);
            } else if self.eat(b'/') {
                acc = Expression::div(acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            // A minus directly in front of a literal folds into the
            // constant, so "-1" is Const(-1.0) rather than Neg(Const(1.0)).
            // "-2^2" stays -(2^2) = -4 per the usual convention.
            if matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
                let v = self.number()?;
                if self.peek() == Some(b'^') {
                    let powed = self.maybe_power(Expression::constant(self.dim, v))?;
                    return Ok(Expression::neg(powed));
                }
                return Ok(Expression::constant(self.dim, -v));
            }
            self.skip_ws();
            let inner = self.factor()?;
            return Ok(Expression::neg(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        self.maybe_power(base)
    }

    fn maybe_power(&mut self, base: Expression) -> Result<Expression, ParseError> {
        if !self.eat(b'^') {
            return Ok(base);
        }
        let negative = self.eat(b'-');
        let raw = self.number()?;
        let value = if negative { -raw } else { raw };
        self.skip_ws();
        if self.peek() == Some(b'^') {
            return Err(ParseError::new(self.pos, "chained '^' is not supported; parenthesize"));
        }
        if value.fract() == 0.0 && value.abs() <= i32::MAX as f64 {
            Ok(Expression::pow(base, value as i32))
        } else {
            // Non-integer exponent: exp(p * ln(base)).
            let p = Expression::constant(self.dim, value);
            Ok(Expression::fun(Func::Exp, Expression::mul(p, Expression::fun(Func::Ln, base))))
        }
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(ParseError::new(self.pos, "expected ')'"));
                }
                Ok(e)
            }
            Some(b'0'..=b'9' | b'.') => {
                let v = self.number()?;
                Ok(Expression::constant(self.dim, v))
            }
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(ParseError::new(self.pos, "expected a number, variable, function, or '('")),
            None => Err(ParseError::new(self.pos, "unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            // Only treat as an exponent marker when followed by digits
            // (possibly signed); otherwise it may start an identifier.
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        if text.is_empty() || text == "." {
            return Err(ParseError::new(start, "expected a number"));
        }
        let v: f64 = text
            .parse()
            .map_err(|_| ParseError::new(start, format!("invalid numeric literal '{text}'")))?;
        if !v.is_finite() {
            return Err(ParseError::new(start, format!("numeric literal '{text}' overflows f64")));
        }
        self.skip_ws();
        Ok(v)
    }

    fn identifier(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        self.skip_ws();

        if let Some(func) = match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            "tanh" => Some(Func::Tanh),
            _ => None,
        } {
            if !self.eat(b'(') {
                return Err(ParseError::new(self.pos, format!("expected '(' after function '{name}'")));
            }
            let arg = self.expr()?;
            if self.peek() == Some(b',') {
                return Err(ParseError::new(
                    self.pos,
                    format!("function '{name}' takes exactly one argument"),
                ));
            }
            if !self.eat(b')') {
                return Err(ParseError::new(self.pos, "expected ')'"));
            }
            return Ok(Expression::fun(func, arg));
        }

        // Positional variable x1..xd.
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                let idx: usize = rest
                    .parse()
                    .map_err(|_| ParseError::new(start, format!("variable index '{rest}' too large")))?;
                if idx >= 1 && idx <= self.dim {
                    return Ok(Expression::var(self.dim, idx - 1));
                }
                return Err(ParseError::new(
                    start,
                    format!("unknown identifier '{name}' (variables are x1..x{})", self.dim),
                ));
            }
        }
        Err(ParseError::new(
            start,
            format!("unknown identifier '{name}' (variables are x1..x{})", self.dim),
        ))
    }
}
