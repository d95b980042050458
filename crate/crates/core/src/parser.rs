//! Text mini-language for the star-closed function family.
//!
//! Grammar (whitespace insignificant, multiplication always explicit):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := factor ("*" factor)*
//! factor  := "-"? atom ("^" uint)?
//! atom    := number | "i" | "z" | "zbar" | "exp" "(" expr ")" | "(" expr ")"
//! number  := digits ("." digits)? (("e" | "E") ("+" | "-")? digits)? "i"?
//! ```
//!
//! Every `exp` argument must reduce to an affine constant combination
//! `c0 + c1*z + c2*zbar`; the constant folds into the coefficient as
//! `exp(c0)` and the stored frequencies are `alpha = c1/i`, `beta = c2/i`.
//! Unary minus binds tighter than `*` but looser than `^`.
//!
//! [`serialize`] prints the canonical form of an expression in the same
//! grammar; numbers use the shortest representation that parses back to
//! the identical value, so `parse(serialize(f)) = f`.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::term::{StarExpr, Term, I, MAX_POW_SUM, ONE, ZERO};

/// Input cap: 64 KiB.
pub const MAX_SOURCE_BYTES: usize = 64 * 1024;

/// A syntax or family-validation error with its exact byte position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the source (at most the source length).
    pub position: usize,
    /// What the parser was looking for.
    pub expected: String,
    /// What it found instead.
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at byte {}: expected {}, found {}",
            self.position, self.expected, self.found
        )
    }
}

fn err<T>(
    position: usize,
    expected: impl Into<String>,
    found: impl Into<String>,
) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        expected: expected.into(),
        found: found.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number { value: f64, imaginary: bool },
    IdentI,
    IdentZ,
    IdentZbar,
    IdentExp,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

impl Token {
    fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Number { value, imaginary } => {
                if *imaginary {
                    format!("number {value}i")
                } else {
                    format!("number {value}")
                }
            }
            TokenKind::IdentI => "'i'".into(),
            TokenKind::IdentZ => "'z'".into(),
            TokenKind::IdentZbar => "'zbar'".into(),
            TokenKind::IdentExp => "'exp'".into(),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Caret => "'^'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'s> {
    src: &'s [u8],
    pos: usize,
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_whitespace(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_whitespace();
        let pos = self.pos;
        if pos >= self.src.len() {
            return Ok(Token {
                kind: TokenKind::Eof,
                pos,
            });
        }
        let byte = self.src[pos];
        let mut simple = |kind: TokenKind| {
            self.pos += 1;
            Ok(Token { kind, pos })
        };
        match byte {
            b'+' => simple(TokenKind::Plus),
            b'-' => simple(TokenKind::Minus),
            b'*' => simple(TokenKind::Star),
            b'^' => simple(TokenKind::Caret),
            b'(' => simple(TokenKind::LParen),
            b')' => simple(TokenKind::RParen),
            b'0'..=b'9' => self.lex_number(pos),
            b'a'..=b'z' | b'A'..=b'Z' => self.lex_identifier(pos),
            other => err(
                pos,
                "a number, identifier, operator or parenthesis",
                format!("character {:?}", other as char),
            ),
        }
    }

    fn lex_number(&mut self, start: usize) -> Result<Token, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            let dot = self.pos;
            self.pos += 1;
            if self.pos >= self.src.len() || !self.src[self.pos].is_ascii_digit() {
                return err(dot + 1, "digits after the decimal point", self.here());
            }
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // consume an exponent only when it is actually followed by digits
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let value: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => return err(start, "a numeric literal", format!("{text:?}")),
        };
        let imaginary = if self.pos < self.src.len() && self.src[self.pos] == b'i' {
            self.pos += 1;
            true
        } else {
            false
        };
        Ok(Token {
            kind: TokenKind::Number { value, imaginary },
            pos: start,
        })
    }

    fn lex_identifier(&mut self, start: usize) -> Result<Token, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii letters");
        let kind = match name {
            "i" => TokenKind::IdentI,
            "z" => TokenKind::IdentZ,
            "zbar" => TokenKind::IdentZbar,
            "exp" => TokenKind::IdentExp,
            other => {
                return err(
                    start,
                    "one of 'i', 'z', 'zbar', 'exp'",
                    format!("identifier {other:?}"),
                )
            }
        };
        Ok(Token { kind, pos: start })
    }

    fn here(&self) -> String {
        if self.pos >= self.src.len() {
            "end of input".into()
        } else {
            format!("character {:?}", self.src[self.pos] as char)
        }
    }
}

struct Parser<'s> {
    lexer: Lexer<'s>,
    current: Token,
}

impl<'s> Parser<'s> {
    fn new(src: &'s str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let current = lexer.next_token()?;
        Ok(Parser { lexer, current })
    }

    fn advance(&mut self) -> Result<Token, ParseError> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.current, next))
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        if self.current.kind == kind {
            self.advance()
        } else {
            err(self.current.pos, what, self.current.describe())
        }
    }

    fn parse_expr(&mut self) -> Result<StarExpr, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.current.kind {
                TokenKind::Plus => {
                    self.advance()?;
                    acc = acc.add(&self.parse_term()?);
                }
                TokenKind::Minus => {
                    self.advance()?;
                    acc = acc.sub(&self.parse_term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<StarExpr, ParseError> {
        let mut acc = self.parse_factor()?;
        while self.current.kind == TokenKind::Star {
            let star_pos = self.current.pos;
            self.advance()?;
            acc = acc.mul(&self.parse_factor()?);
            if acc.max_pow_sum() > MAX_POW_SUM {
                return err(
                    star_pos,
                    format!("a product of combined degree at most {MAX_POW_SUM}"),
                    format!("degree {}", acc.max_pow_sum()),
                );
            }
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<StarExpr, ParseError> {
        let negate = if self.current.kind == TokenKind::Minus {
            self.advance()?;
            true
        } else {
            false
        };
        let mut value = self.parse_atom()?;
        if self.current.kind == TokenKind::Caret {
            let caret_pos = self.current.pos;
            self.advance()?;
            let exponent = self.parse_uint()?;
            value = pow(value, exponent, caret_pos)?;
        }
        Ok(if negate { value.scale(-ONE) } else { value })
    }

    fn parse_uint(&mut self) -> Result<u32, ParseError> {
        let tok = self.current.clone();
        match tok.kind {
            TokenKind::Number { value, imaginary }
                if !imaginary
                    && value.fract() == 0.0
                    && (0.0..=u32::MAX as f64).contains(&value) =>
            {
                self.advance()?;
                Ok(value as u32)
            }
            _ => err(tok.pos, "a nonnegative integer exponent", tok.describe()),
        }
    }

    fn parse_atom(&mut self) -> Result<StarExpr, ParseError> {
        let tok = self.current.clone();
        match tok.kind {
            TokenKind::Number { value, imaginary } => {
                self.advance()?;
                if !value.is_finite() {
                    return err(tok.pos, "a finite numeric literal", "overflowing literal");
                }
                let c = if imaginary {
                    Complex64::new(0.0, value)
                } else {
                    Complex64::new(value, 0.0)
                };
                Ok(StarExpr::constant(c))
            }
            TokenKind::IdentI => {
                self.advance()?;
                Ok(StarExpr::constant(I))
            }
            TokenKind::IdentZ => {
                self.advance()?;
                Ok(StarExpr::z())
            }
            TokenKind::IdentZbar => {
                self.advance()?;
                Ok(StarExpr::zbar())
            }
            TokenKind::IdentExp => {
                self.advance()?;
                self.expect(TokenKind::LParen, "'(' after exp")?;
                let arg_pos = self.current.pos;
                let arg = self.parse_expr()?;
                self.expect(TokenKind::RParen, "')' closing the exp argument")?;
                fold_exponential(&arg, arg_pos)
            }
            TokenKind::LParen => {
                self.advance()?;
                let inner = self.parse_expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            _ => err(
                tok.pos,
                "a number, 'i', 'z', 'zbar', 'exp(...)' or '('",
                tok.describe(),
            ),
        }
    }
}

/// Binary exponentiation with the degree gate; the degree of a product of
/// canonical expressions is the sum of the degrees, so the bound can be
/// checked up front.
fn pow(base: StarExpr, exponent: u32, caret_pos: usize) -> Result<StarExpr, ParseError> {
    let degree = base.max_pow_sum() as u64 * exponent as u64;
    if degree > MAX_POW_SUM as u64 {
        return err(
            caret_pos,
            format!("a power of combined degree at most {MAX_POW_SUM}"),
            format!("degree {degree}"),
        );
    }
    let mut result = StarExpr::one();
    let mut square = base;
    let mut k = exponent;
    while k > 0 {
        if k & 1 == 1 {
            result = result.mul(&square);
        }
        k >>= 1;
        if k > 0 {
            square = square.mul(&square);
        }
    }
    Ok(result)
}

/// Turn an affine exp argument `c0 + c1*z + c2*zbar` into the single term
/// `exp(c0) * exp(i*(c1/i)*z + i*(c2/i)*zbar)`.
fn fold_exponential(arg: &StarExpr, arg_pos: usize) -> Result<StarExpr, ParseError> {
    let mut c0 = ZERO;
    let mut c1 = ZERO;
    let mut c2 = ZERO;
    for t in arg.terms() {
        if t.freq_z != ZERO || t.freq_zbar != ZERO || t.pow_sum() > 1 {
            return err(
                arg_pos,
                "an affine exp argument (c0 + c1*z + c2*zbar with constant coefficients)",
                "a nonlinear or exponential argument",
            );
        }
        match (t.pow_z, t.pow_zbar) {
            (0, 0) => c0 = t.coeff,
            (1, 0) => c1 = t.coeff,
            (0, 1) => c2 = t.coeff,
            _ => unreachable!("pow_sum <= 1"),
        }
    }
    // division by i is exact (component swap and sign flip)
    let alpha = c1 / I;
    let beta = c2 / I;
    Ok(StarExpr::exponential(c0.exp(), alpha, beta))
}

/// Parse a source string into a canonical expression.
pub fn parse(src: &str) -> Result<StarExpr, ParseError> {
    if src.len() > MAX_SOURCE_BYTES {
        return err(
            MAX_SOURCE_BYTES,
            format!("input of at most {MAX_SOURCE_BYTES} bytes"),
            format!("{} bytes", src.len()),
        );
    }
    let mut parser = Parser::new(src)?;
    let expr = parser.parse_expr()?;
    if parser.current.kind != TokenKind::Eof {
        return err(
            parser.current.pos,
            "end of input or an operator",
            parser.current.describe(),
        );
    }
    Ok(expr)
}

/// Shortest decimal form that parses back to the identical `f64`;
/// negative zero is normalized away.
fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

/// A complex value as a single grammar factor; parenthesized whenever a
/// bare rendering would not parse as one factor.
fn fmt_complex_factor(c: Complex64) -> String {
    if c.im == 0.0 {
        if c.re < 0.0 {
            format!("({})", fmt_f64(c.re))
        } else {
            fmt_f64(c.re)
        }
    } else if c.re == 0.0 {
        if c.im < 0.0 {
            format!("({}i)", fmt_f64(c.im))
        } else {
            format!("{}i", fmt_f64(c.im))
        }
    } else if c.im < 0.0 {
        format!("({}-{}i)", fmt_f64(c.re), fmt_f64(-c.im))
    } else {
        format!("({}+{}i)", fmt_f64(c.re), fmt_f64(c.im))
    }
}

/// Leading coefficient of a term; may start with '-' (the term joiner
/// absorbs the sign).
fn fmt_lead_coeff(c: Complex64) -> String {
    if c.im == 0.0 {
        fmt_f64(c.re)
    } else if c.re == 0.0 {
        format!("{}i", fmt_f64(c.im))
    } else {
        fmt_complex_factor(c)
    }
}

fn fmt_term(t: &Term) -> String {
    let mut factors: Vec<String> = Vec::new();
    if t.pow_z == 1 {
        factors.push("z".into());
    } else if t.pow_z > 1 {
        factors.push(format!("z^{}", t.pow_z));
    }
    if t.pow_zbar == 1 {
        factors.push("zbar".into());
    } else if t.pow_zbar > 1 {
        factors.push(format!("zbar^{}", t.pow_zbar));
    }
    if t.freq_z != ZERO || t.freq_zbar != ZERO {
        let mut parts: Vec<String> = Vec::new();
        if t.freq_z != ZERO {
            parts.push(format!("i*{}*z", fmt_complex_factor(t.freq_z)));
        }
        if t.freq_zbar != ZERO {
            parts.push(format!("i*{}*zbar", fmt_complex_factor(t.freq_zbar)));
        }
        factors.push(format!("exp({})", parts.join("+")));
    }
    if factors.is_empty() {
        fmt_lead_coeff(t.coeff)
    } else if t.coeff == ONE {
        factors.join("*")
    } else if t.coeff == -ONE {
        format!("-{}", factors.join("*"))
    } else {
        format!("{}*{}", fmt_lead_coeff(t.coeff), factors.join("*"))
    }
}

/// Canonical textual form; `parse(serialize(f)) = f`.
pub fn serialize(f: &StarExpr) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (idx, t) in f.terms().iter().enumerate() {
        let piece = fmt_term(t);
        if idx > 0 && !piece.starts_with('-') {
            out.push('+');
        }
        out.push_str(&piece);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn affine_input_maps_to_term_set() {
        let f = parse("2*z + 1*zbar + 3").unwrap();
        assert_eq!(f, StarExpr::affine(c(2.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)));
    }

    #[test]
    fn exponential_product_is_a_single_term() {
        let f = parse("exp(i*1*z)*exp(i*0.3*zbar)").unwrap();
        assert_eq!(f.terms().len(), 1);
        let t = &f.terms()[0];
        assert_eq!(t.freq_z, c(1.0, 0.0));
        assert_eq!(t.freq_zbar, c(0.3, 0.0));
        assert_eq!(t.coeff, c(1.0, 0.0));
        assert_eq!((t.pow_z, t.pow_zbar), (0, 0));
    }

    #[test]
    fn monomial_exponential_combination() {
        let f = parse("z^2*zbar*exp(i*z)").unwrap();
        assert_eq!(f.terms().len(), 1);
        let t = &f.terms()[0];
        assert_eq!((t.pow_z, t.pow_zbar), (2, 1));
        assert_eq!(t.freq_z, c(1.0, 0.0));
        assert_eq!(t.freq_zbar, c(0.0, 0.0));
    }

    #[test]
    fn exp_constant_folds_into_the_coefficient() {
        let f = parse("exp(1 + i*z)").unwrap();
        let t = &f.terms()[0];
        assert!((t.coeff - c(1.0f64.exp(), 0.0)).norm() < 1e-15);
        assert_eq!(t.freq_z, c(1.0, 0.0));
    }

    #[test]
    fn nonlinear_exp_argument_is_a_family_violation() {
        let e = parse("exp(z*z)").unwrap_err();
        assert_eq!(e.position, 4);
        assert!(e.expected.contains("affine"));
        let e = parse("exp(exp(z))").unwrap_err();
        assert_eq!(e.position, 4);
    }

    #[test]
    fn power_overflow_is_reported() {
        let e = parse("z^65").unwrap_err();
        assert_eq!(e.position, 1);
        assert!(e.expected.contains("at most 64"));
        assert!(parse("z^64").is_ok());
        let e = parse("z^33*zbar^33").unwrap_err();
        assert_eq!(e.position, 4);
    }

    #[test]
    fn error_positions_are_exact() {
        assert_eq!(parse("2*@z").unwrap_err().position, 2);
        assert_eq!(parse("z + $").unwrap_err().position, 4);
        assert_eq!(parse("exp(z").unwrap_err().position, 5);
        assert_eq!(parse("").unwrap_err().position, 0);
        assert_eq!(parse("z z").unwrap_err().position, 2);
        assert_eq!(parse("--z").unwrap_err().position, 1);
        assert_eq!(parse("2*w").unwrap_err().position, 2);
        assert_eq!(parse("z^2.5").unwrap_err().position, 2);
    }

    #[test]
    fn unary_minus_binds_tighter_than_star() {
        let f = parse("2*-z").unwrap();
        assert_eq!(f, StarExpr::z().scale(c(-2.0, 0.0)));
        // and looser than the power
        let g = parse("-z^2").unwrap();
        assert_eq!(g, StarExpr::z().mul(&StarExpr::z()).scale(c(-1.0, 0.0)));
    }

    #[test]
    fn i_suffix_and_i_atom_agree() {
        assert_eq!(parse("0.5i").unwrap(), parse("0.5*i").unwrap());
        assert_eq!(parse("i").unwrap(), StarExpr::constant(c(0.0, 1.0)));
    }

    #[test]
    fn merging_happens_at_parse_time() {
        assert_eq!(serialize(&parse("z + z").unwrap()), "2*z");
        assert_eq!(serialize(&parse("z - z").unwrap()), "0");
    }

    #[test]
    fn zero_serializes_as_zero() {
        assert_eq!(serialize(&StarExpr::zero()), "0");
        assert_eq!(parse("0").unwrap(), StarExpr::zero());
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let cases = [
            "3+zbar+2*z",
            "6*z^2+z*zbar-zbar^2-5i",
            "exp(i*1.5*z+i*(-0.25)*zbar)",
            "(0.1+0.2i)*z*exp(i*0.5i*z)",
            "-z+0.30000000000000004",
            "2e-5*zbar^3",
        ];
        for src in cases {
            let parsed = parse(src).unwrap();
            let text = serialize(&parsed);
            let reparsed = parse(&text).unwrap();
            assert_eq!(parsed, reparsed, "case {src} serialized to {text}");
        }
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(parse(" 2 * z\n+ 1 ").unwrap(), parse("2*z+1").unwrap());
    }

    #[test]
    fn oversized_input_is_rejected_at_the_boundary() {
        let big = "1+".repeat(40000);
        let e = parse(&big).unwrap_err();
        assert_eq!(e.position, MAX_SOURCE_BYTES);
    }

    #[test]
    fn parenthesized_groups_distribute() {
        let f = parse("(z+1)*(zbar-1)").unwrap();
        let expected = StarExpr::z()
            .add(&StarExpr::one())
            .mul(&StarExpr::zbar().sub(&StarExpr::one()));
        assert_eq!(f, expected);
        let g = parse("(z+zbar)^2").unwrap();
        let zz = StarExpr::z().add(&StarExpr::zbar());
        assert_eq!(g, zz.mul(&zz));
    }
}
