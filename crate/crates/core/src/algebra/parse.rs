//! Textual operator syntax.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/')? unary)*      juxtaposition multiplies
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'i' | mode adjoint? | '(' expr ')'
//! mode   := one ASCII letter other than 'i'
//! adjoint:= 'd' | '†'
//! ```
//!
//! A mode letter immediately followed by `d` or `†` is the creation operator,
//! so `bd*b` is `b†b` and `dd` is `d†`. Division is only allowed by an
//! expression without operator content. Numbers may carry a decimal part and
//! are converted exactly.

use num_traits::Zero;

use super::coeff::{Coeff, Rational};
use super::expr::{Mode, OperatorExpr};
use super::AlgebraError;

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    declared: Option<&'a [Mode]>,
}

/// Parses an operator expression, optionally restricting the allowed modes.
pub fn parse_expr(src: &str, declared: Option<&[Mode]>) -> Result<OperatorExpr, AlgebraError> {
    let mut p = Parser { chars: src.chars().collect(), pos: 0, declared };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.chars.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> AlgebraError {
        AlgebraError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<OperatorExpr, AlgebraError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some('-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn starts_atom(c: char) -> bool {
        c.is_ascii_alphanumeric() || c == '(' || c == '.'
    }

    fn term(&mut self) -> Result<OperatorExpr, AlgebraError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some('/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(AlgebraError::Parse { pos: at, msg: "division by zero".into() });
                    }
                    if d.len() != 1 || !d.as_single().map(|(_, m)| m.is_identity()).unwrap_or(false)
                    {
                        return Err(AlgebraError::Parse {
                            pos: at,
                            msg: "division by an operator".into(),
                        });
                    }
                    let inv = d.constant().inv().expect("nonzero scalar");
                    acc = acc.scale(&inv);
                }
                Some(c) if Self::starts_atom(c) => {
                    acc = &acc * &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<OperatorExpr, AlgebraError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<OperatorExpr, AlgebraError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected integer exponent"));
            }
            let s: String = self.chars[start..self.pos].iter().collect();
            let k: u32 = s.parse().map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<OperatorExpr, AlgebraError> {
        let c = self.peek().ok_or_else(|| self.err("unexpected end of input"))?;
        if c == '(' {
            self.pos += 1;
            let e = self.expr()?;
            if self.peek() != Some(')') {
                return Err(self.err("expected ')'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c == 'i' {
            self.pos += 1;
            return Ok(OperatorExpr::scalar(Coeff::i()));
        }
        if c.is_ascii_alphabetic() {
            self.pos += 1;
            let mode = Mode::new(c.to_string());
            if let Some(d) = self.declared {
                if !d.contains(&mode) {
                    return Err(AlgebraError::UnknownMode(mode.0));
                }
            }
            let dagger = matches!(self.chars.get(self.pos), Some('d') | Some('†'));
            if dagger {
                self.pos += 1;
                return Ok(OperatorExpr::creator(&mode));
            }
            return Ok(OperatorExpr::annihilator(&mode));
        }
        Err(self.err("unexpected character"))
    }

    fn number(&mut self) -> Result<OperatorExpr, AlgebraError> {
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.')
        {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        let (int, frac) = match s.split_once('.') {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (s.clone(), String::new()),
        };
        if frac.contains('.') || (int.is_empty() && frac.is_empty()) {
            return Err(AlgebraError::Parse { pos: start, msg: "malformed number".into() });
        }
        let digits = format!("{int}{frac}");
        let numer: num_bigint::BigInt = digits
            .parse()
            .map_err(|_| AlgebraError::Parse { pos: start, msg: "malformed number".into() })?;
        let denom = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
        let r = Rational::new(numer, denom);
        if r.is_zero() {
            return Ok(OperatorExpr::zero());
        }
        Ok(OperatorExpr::scalar(Coeff::real(r)))
    }
}
