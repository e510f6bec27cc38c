//! Recursive descent parser for polynomial expressions and input files.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('+' | '-') unary | power
//! power   := atom (('^' | '**') exponent)?
//! atom    := integer | symbol | '(' expr ')'
//! ```
//!
//! Division is only by integer constants. Results are carried as an integer
//! polynomial over a common positive denominator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::poly::{Polynomial, Symbols};

/// One `name = expression` statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceExpression {
    pub name: String,
    pub text: String,
}

impl SourceExpression {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        SourceExpression { name: name.into(), text: text.into() }
    }
}

/// A parsed output: `numerator / denominator`, the denominator positive and
/// coprime to the numerator's content.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedOutput {
    pub name: String,
    pub numerator: Polynomial,
    pub denominator: BigInt,
}

/// A parsed input file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputFile {
    pub symbols: Symbols,
    pub outputs: Vec<ParsedOutput>,
}

impl InputFile {
    pub fn polynomials(&self) -> Vec<Polynomial> {
        self.outputs.iter().map(|o| o.numerator.clone()).collect()
    }
}

/// Parses an expression with integer coefficients.
pub fn parse(source: &SourceExpression, symbols: &Symbols) -> Result<Polynomial> {
    parse_expression(&source.text, symbols)
}

/// Parses expression text; fractions that do not cancel are an error.
pub fn parse_expression(text: &str, symbols: &Symbols) -> Result<Polynomial> {
    let (p, d) = parse_with_denominator(text, symbols)?;
    if !d.is_one() {
        return Err(ParseError::new(ParseErrorKind::NonIntegerCoefficient, 0).into());
    }
    Ok(p)
}

/// Parses expression text into an integer polynomial and a common
/// denominator.
pub fn parse_with_denominator(text: &str, symbols: &Symbols) -> Result<(Polynomial, BigInt)> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, symbols };
    let value = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.unexpected());
    }
    Ok((value.num, value.den))
}

/// Reads a file: a `symbols:` header listing the variables (separated by
/// commas or spaces), then `name = expression;` statements. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_file(text: &str) -> Result<InputFile> {
    let mut symbols: Option<Symbols> = None;
    let mut outputs: Vec<ParsedOutput> = Vec::new();
    // pending statement text and the line it started on
    let mut pending = String::new();
    let mut start_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if symbols.is_none() {
            let Some(rest) = line.strip_prefix("symbols:") else {
                return Err(ParseError::new(ParseErrorKind::MissingSymbolsHeader, 0).at_line(line_no).into());
            };
            let names = rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
            let mut syms = Symbols::default();
            for name in names {
                if !is_identifier(name) {
                    let kind = ParseErrorKind::Malformed(format!("`{}` is not a valid symbol name", name));
                    return Err(ParseError::new(kind, 0).at_line(line_no).into());
                }
                syms.push(name)?;
            }
            symbols = Some(syms);
            continue;
        }
        if pending.is_empty() {
            start_line = line_no;
        } else {
            pending.push(' ');
        }
        pending.push_str(line);
        while let Some(end) = pending.find(';') {
            let stmt: String = pending[..end].to_string();
            pending = pending[end + 1..].trim_start().to_string();
            let syms = symbols.as_ref().expect("header read");
            let out = statement(&stmt, syms).map_err(|e| with_line(e, start_line))?;
            if outputs.iter().any(|o| o.name == out.name) {
                let kind = ParseErrorKind::Malformed(format!("output `{}` defined twice", out.name));
                return Err(ParseError::new(kind, 0).at_line(start_line).into());
            }
            outputs.push(out);
            start_line = line_no;
        }
    }
    if !pending.trim().is_empty() {
        return Err(ParseError::new(ParseErrorKind::Expected("`;`"), pending.len()).at_line(start_line).into());
    }
    let symbols = symbols.ok_or_else(|| ParseError::new(ParseErrorKind::MissingSymbolsHeader, 0))?;
    Ok(InputFile { symbols, outputs })
}

fn with_line(e: Error, line: usize) -> Error {
    match e {
        Error::Parse(p) => Error::Parse(p.at_line(line)),
        other => other,
    }
}

fn statement(stmt: &str, symbols: &Symbols) -> Result<ParsedOutput> {
    let Some(eq) = stmt.find('=') else {
        return Err(ParseError::new(ParseErrorKind::Expected("`name = expression`"), 0).into());
    };
    let name = stmt[..eq].trim();
    if !is_identifier(name) {
        let kind = ParseErrorKind::Malformed(format!("`{}` is not a valid output name", name));
        return Err(ParseError::new(kind, 0).into());
    }
    if symbols.id(name).is_some() {
        let kind = ParseErrorKind::Malformed(format!("output `{}` is also a symbol", name));
        return Err(ParseError::new(kind, 0).into());
    }
    let (numerator, denominator) = parse_with_denominator(&stmt[eq + 1..], symbols).map_err(|e| match e {
        Error::Parse(mut p) => {
            p.position += eq + 1;
            Error::Parse(p)
        }
        other => other,
    })?;
    Ok(ParsedOutput { name: name.to_string(), numerator, denominator })
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `num / den` with `den > 0` and no common factor.
#[derive(Clone, Debug)]
struct Frac {
    num: Polynomial,
    den: BigInt,
}

impl Frac {
    fn int(p: Polynomial) -> Frac {
        Frac { num: p, den: BigInt::one() }
    }

    fn reduced(num: Polynomial, den: BigInt) -> Frac {
        let mut g = den.clone();
        for (c, _) in num.terms() {
            if g.is_one() {
                break;
            }
            g = g.gcd(c);
        }
        if num.is_zero() {
            return Frac::int(num);
        }
        if g.is_one() {
            return Frac { num, den };
        }
        let terms = num.into_terms().into_iter().map(|(c, m)| (c / &g, m)).collect();
        Frac { num: crate::poly::normalize(terms), den: den / g }
    }

    fn add(&self, o: &Frac) -> Frac {
        if self.den == o.den {
            return Frac::reduced(self.num.add(&o.num), self.den.clone());
        }
        Frac::reduced(self.num.scale(&o.den).add(&o.num.scale(&self.den)), &self.den * &o.den)
    }

    fn neg(&self) -> Frac {
        Frac { num: self.num.neg(), den: self.den.clone() }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac::reduced(self.num.mul(&o.num), &self.den * &o.den)
    }

    fn pow(&self, e: u32) -> Frac {
        Frac { num: self.num.pow(e), den: num_traits::pow(self.den.clone(), e as usize) }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    symbols: &'a Symbols,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, kind: ParseErrorKind) -> Error {
        ParseError::new(kind, self.pos).into()
    }

    fn unexpected(&self) -> Error {
        let text = std::str::from_utf8(&self.src[self.pos..]).unwrap_or("");
        match text.chars().next() {
            Some(c) => self.err(ParseErrorKind::UnexpectedChar(c)),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Frac> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Frac> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') if self.src.get(self.pos + 1) != Some(&b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    let Some(c) = d.num.as_constant() else {
                        return Err(ParseError::new(ParseErrorKind::DivisionByNonConstant, at).into());
                    };
                    if c.is_zero() {
                        return Err(ParseError::new(ParseErrorKind::DivisionByZero, at).into());
                    }
                    // acc / (c / d.den) = acc * d.den / c
                    let sign = if c.is_negative() { -BigInt::one() } else { BigInt::one() };
                    let num = acc.num.scale(&(&d.den * sign));
                    acc = Frac::reduced(num, &acc.den * c.abs());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Frac> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Frac> {
        let base = self.atom()?;
        match self.peek() {
            Some(b'^') => self.pos += 1,
            Some(b'*') if self.src.get(self.pos + 1) == Some(&b'*') => self.pos += 2,
            _ => return Ok(base),
        }
        let e = self.exponent()?;
        Ok(base.pow(e))
    }

    fn exponent(&mut self) -> Result<u32> {
        let at = self.pos;
        let mut parens = 0;
        while self.peek() == Some(b'(') {
            self.pos += 1;
            parens += 1;
        }
        let negative = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let value = match self.peek() {
            Some(c) if c.is_ascii_digit() => self.integer(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                return Err(ParseError::new(ParseErrorKind::NonIntegerExponent, at).into())
            }
            _ => return Err(self.unexpected()),
        };
        if self.src.get(self.pos) == Some(&b'.') {
            return Err(ParseError::new(ParseErrorKind::NonIntegerExponent, at).into());
        }
        for _ in 0..parens {
            if self.peek() != Some(b')') {
                return Err(self.err(ParseErrorKind::Expected("`)`")));
            }
            self.pos += 1;
        }
        if negative && !value.is_zero() {
            return Err(ParseError::new(ParseErrorKind::NegativeExponent, at).into());
        }
        value.to_u32().ok_or_else(|| {
            ParseError::new(ParseErrorKind::Malformed("exponent too large".into()), at).into()
        })
    }

    fn integer(&mut self) -> BigInt {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        digits.parse().expect("digits form an integer")
    }

    fn atom(&mut self) -> Result<Frac> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err(ParseErrorKind::Expected("`)`")));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let value = self.integer();
                if self.src.get(self.pos) == Some(&b'.') {
                    return Err(self.err(ParseErrorKind::UnexpectedChar('.')));
                }
                Ok(Frac::int(Polynomial::constant(value)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii name");
                match self.symbols.id(name) {
                    Some(v) => Ok(Frac::int(Polynomial::var(v))),
                    None => Err(ParseError::new(ParseErrorKind::UndeclaredSymbol(name.to_string()), start).into()),
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}
