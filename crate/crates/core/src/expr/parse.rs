//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?            exponent must fold to a rational
//! atom    := number | ident | call | '(' expr ')'
//! call    := ident '(' expr ')'           exp ln log sqrt sin cos, or a special function
//!          | ident '\'' '(' expr ')'       first derivative of a special function
//!          | 'W' '(' ident ',' ident ')' '(' expr ')'   Wronskian f g' - f' g
//! number  := digits ('.' digits)? | digits '/' digits handled by '/' on constants
//! ```
//!
//! Decimal literals are converted to exact rationals.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigInt, BigRational, Num};

use super::{Elementary, Expr, SpecialFn, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown coordinate `{name}` at offset {pos}")]
    UnknownCoordinate { name: String, pos: usize },
    #[error("unknown function `{name}` at offset {pos}")]
    UnknownFunction { name: String, pos: usize },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownCoordinate { pos, .. }
            | ParseError::UnknownFunction { pos, .. } => *pos,
        }
    }
}

/// Names an expression may refer to.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    vars: Vec<Symbol>,
    specials: BTreeMap<String, Arc<SpecialFn>>,
}

impl Scope {
    pub fn new<S: AsRef<str>>(vars: &[S]) -> Scope {
        Scope {
            vars: vars.iter().map(|v| Symbol::from(v.as_ref())).collect(),
            specials: BTreeMap::new(),
        }
    }

    pub fn with_special(mut self, f: &Arc<SpecialFn>) -> Scope {
        self.specials.insert(f.name.to_string(), f.clone());
        self
    }

    pub fn with_specials<'a>(mut self, fs: impl IntoIterator<Item = &'a Arc<SpecialFn>>) -> Scope {
        for f in fs {
            self.specials.insert(f.name.to_string(), f.clone());
        }
        self
    }

    pub fn with_var(mut self, v: &str) -> Scope {
        if !self.vars.iter().any(|s| &**s == v) {
            self.vars.push(v.into());
        }
        self
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    pub fn special(&self, name: &str) -> Option<&Arc<SpecialFn>> {
        self.specials.get(name)
    }
}

/// Parse `text` using the names in `scope`.
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        scope,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    scope: &'a Scope,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::add_all(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                factors.push(self.unary()?.recip());
            } else {
                break;
            }
        }
        Ok(Expr::mul_all(factors))
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let at = self.pos;
            let e = self.unary()?;
            match e.as_const() {
                Some(k) => Ok(Expr::pow(&base, k.clone())),
                None => Err(ParseError::Syntax {
                    pos: at,
                    msg: "exponent must be a rational constant".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn ident(&mut self) -> Option<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        if start < s.len() && (s[start].is_ascii_alphabetic() || s[start] == b'_') {
            let mut end = start + 1;
            while end < s.len() && (s[end].is_ascii_alphanumeric() || s[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            Some((String::from_utf8_lossy(&s[start..end]).into_owned(), start))
        } else {
            None
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut end = start;
        while end < s.len() && s[end].is_ascii_digit() {
            end += 1;
        }
        let int_part = std::str::from_utf8(&s[start..end]).unwrap().to_string();
        let mut frac = String::new();
        if end < s.len() && s[end] == b'.' {
            end += 1;
            let fs = end;
            while end < s.len() && s[end].is_ascii_digit() {
                end += 1;
            }
            frac = std::str::from_utf8(&s[fs..end]).unwrap().to_string();
        }
        let mut exp10: i64 = 0;
        if end < s.len() && (s[end] == b'e' || s[end] == b'E') {
            let mut k = end + 1;
            let neg = k < s.len() && s[k] == b'-';
            if k < s.len() && (s[k] == b'-' || s[k] == b'+') {
                k += 1;
            }
            let ds = k;
            while k < s.len() && s[k].is_ascii_digit() {
                k += 1;
            }
            if k > ds {
                let v: i64 = std::str::from_utf8(&s[ds..k]).unwrap().parse().map_err(|_| self.err("bad exponent"))?;
                exp10 = if neg { -v } else { v };
                end = k;
            }
        }
        if int_part.is_empty() && frac.is_empty() {
            return Err(self.err("expected a number"));
        }
        self.pos = end;
        let digits = format!("{int_part}{frac}");
        let n = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
            .map_err(|_| self.err("bad number"))?;
        let scale = exp10 - frac.len() as i64;
        let ten = BigInt::from(10);
        let v = if scale >= 0 {
            BigRational::from_integer(n * num::pow::pow(ten, scale as usize))
        } else {
            BigRational::new(n, num::pow::pow(ten, (-scale) as usize))
        };
        Ok(Expr::constant(v))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let (name, at) = self.ident().unwrap();
                let primed = self.peek() == Some(b'\'');
                if primed {
                    self.pos += 1;
                }
                if self.peek() == Some(b'(') {
                    if name == "W" && !primed && self.scope.special("W").is_none() {
                        return self.wronskian();
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    if let Some(f) = self.scope.special(&name) {
                        return Ok(Expr::special(f, u8::from(primed), arg));
                    }
                    if primed {
                        return Err(ParseError::UnknownFunction { name, pos: at });
                    }
                    let f = match name.as_str() {
                        "exp" => Elementary::Exp,
                        "ln" | "log" => Elementary::Ln,
                        "sin" => Elementary::Sin,
                        "cos" => Elementary::Cos,
                        "sqrt" => return Ok(arg.sqrt()),
                        _ => return Err(ParseError::UnknownFunction { name, pos: at }),
                    };
                    return Ok(Expr::func(f, arg));
                }
                if primed {
                    return Err(self.err("expected `(` after derivative marker"));
                }
                match self.scope.vars.iter().find(|v| ***v == *name) {
                    Some(v) => Ok(Expr::var_sym(v)),
                    None => Err(ParseError::UnknownCoordinate { name, pos: at }),
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn wronskian(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        let mut fs = Vec::new();
        for i in 0..2 {
            if i == 1 {
                self.expect(b',')?;
            }
            let (n, at) = self.ident().ok_or_else(|| self.err("expected a function name"))?;
            let f = self
                .scope
                .special(&n)
                .cloned()
                .ok_or(ParseError::UnknownFunction { name: n, pos: at })?;
            fs.push(f);
        }
        self.expect(b')')?;
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(Expr::wronskian(&fs[0], &fs[1], &arg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rat;

    fn jet() -> Scope {
        let y = Expr::var("y");
        let psi = SpecialFn::new("Psi1", "y", Expr::zero(), Expr::ratio(1, 2) * y.clone());
        let psi2 = SpecialFn::new("Psi2", "y", Expr::zero(), Expr::ratio(1, 2) * y);
        Scope::new(&["x", "u", "u1", "u2"]).with_special(&psi).with_special(&psi2)
    }

    #[test]
    fn parses_example_rhs() {
        let e = parse_expr("3*u2^2/(2*u1) + u*u1^3", &jet()).unwrap();
        let u1 = Expr::var("u1");
        let expect = Expr::ratio(3, 2) * Expr::var("u2").powi(2) / u1.clone() + Expr::var("u") * u1.powi(3);
        assert_eq!(e, expect);
    }

    #[test]
    fn zero_and_specials() {
        assert!(parse_expr("0", &jet()).unwrap().is_zero());
        let e = parse_expr("Psi1'(u)", &jet()).unwrap();
        match e.kind() {
            crate::expr::Kind::Special(f, 1, a) => {
                assert_eq!(&*f.name, "Psi1");
                assert_eq!(a, &Expr::var("u"));
            }
            _ => panic!("not a special node"),
        }
    }

    #[test]
    fn decimals_are_exact() {
        let e = parse_expr("0.125 + 1e-2", &jet()).unwrap();
        assert_eq!(e.as_const().unwrap(), &(rat(1, 8) + rat(1, 100)));
    }

    #[test]
    fn errors_are_classified() {
        assert!(matches!(parse_expr("x +", &jet()), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_expr("z*x", &jet()), Err(ParseError::UnknownCoordinate { pos: 0, .. })));
        assert!(matches!(parse_expr("Ai(x)", &jet()), Err(ParseError::UnknownFunction { .. })));
        assert!(matches!(parse_expr("x^u", &jet()), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("(x", &jet()), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn wronskian_expands() {
        let e = parse_expr("W(Psi1,Psi2)(u)", &jet()).unwrap();
        let f = parse_expr("Psi1(u)*Psi2'(u) - Psi1'(u)*Psi2(u)", &jet()).unwrap();
        assert_eq!(e, f);
    }

    #[test]
    fn round_trip_simple() {
        for s in ["-u + x", "1/(2*x)", "sqrt(u1)/x^(3/2)", "-(u + x)*exp(x)", "x^2 - 2*u*u2"] {
            let e = parse_expr(s, &jet()).unwrap();
            let back = parse_expr(&e.to_string(), &jet()).unwrap();
            assert_eq!(e, back, "{s} -> {e}");
        }
    }
}
