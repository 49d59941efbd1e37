//! A small expression language evaluated through the multi-row pipeline.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | call | "(" expr ")"
//! call    := ident "(" [arg ("," arg)*] ")"
//! ```
//!
//! Numbers are integers or decimals. `/` is exact rational division, which
//! is how fractions such as `5/8` are written. Sums and differences go
//! through the four-row signed format, products through the partial-product
//! matrix. Values whose denominator is not a power of two cannot be placed on
//! a binary grid and fall back to exact rational arithmetic, which the trace
//! says.
//!
//! Calls: `mul(x, y)`, `div(x, z, k, m)`, `acc("file")` and
//! `map(a, b, c, d, e, g, h, l)` with trailing operands optional.

use std::path::Path;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::accumulator::AccumulatorState;
use crate::accumulator::OverflowPolicy;
use crate::codes::{digit_len, to_scaled, MultiRowCode, QuadSignedCode};
use crate::compressor::DelayModel;
use crate::divider::{common_scale, divide, Comparator};
use crate::error::{Error, Result};
use crate::map_unit::{map_eval_traced, MapConfig, MapMode, MapTuple};
use crate::multiplier::{mul_delay, multiply, Signedness};
use crate::reducer::{quad_add, quad_sub};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Str(String),
    Sym(char),
}

fn parse_number(text: &str, pos: usize) -> Result<BigRational> {
    let err = || Error::Parse {
        pos,
        msg: format!("bad number `{text}`"),
    };
    let (int_part, frac) = text.split_once('.').unwrap_or((text, ""));
    if int_part.is_empty() && frac.is_empty() {
        return Err(err());
    }
    let digits = format!("{int_part}{frac}");
    let n: BigInt = digits.parse().map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(n, den))
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].1.is_ascii_digit() || bytes[i].1 == '.') {
                i += 1;
            }
            let end = bytes.get(i).map_or(src.len(), |b| b.0);
            out.push((pos, Tok::Num(parse_number(&src[bytes[start].0..end], pos)?)));
        } else if c.is_alphabetic() || c == '_' {
            let start = pos;
            while i < bytes.len() && (bytes[i].1.is_alphanumeric() || bytes[i].1 == '_') {
                i += 1;
            }
            let end = bytes.get(i).map_or(src.len(), |b| b.0);
            out.push((pos, Tok::Ident(src[start..end].to_string())));
        } else if c == '"' {
            i += 1;
            let start = bytes.get(i).map_or(src.len(), |b| b.0);
            while i < bytes.len() && bytes[i].1 != '"' {
                i += 1;
            }
            if i == bytes.len() {
                return Err(Error::Parse {
                    pos,
                    msg: "unterminated string".into(),
                });
            }
            out.push((pos, Tok::Str(src[start..bytes[i].0].to_string())));
            i += 1;
        } else if "+-*/(),×−".contains(c) {
            let sym = match c {
                '×' => '*',
                '−' => '-',
                other => other,
            };
            out.push((pos, Tok::Sym(sym)));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

/// Result of an evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub value: BigRational,
    /// Intermediate matrices and steps, in evaluation order.
    pub trace: Vec<String>,
    /// Delay of the last multiplication, in t& units.
    pub delay: Option<u32>,
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    trace: Vec<String>,
    delay: Option<u32>,
    base: &'a Path,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.fail(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<BigRational> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                let r = self.term()?;
                v = self.add(&v, &r, false)?;
            } else if self.eat('-') {
                let r = self.term()?;
                v = self.add(&v, &r, true)?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<BigRational> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                let r = self.unary()?;
                v = self.mul(&v, &r)?;
            } else if self.peek() == Some(&Tok::Sym('/')) {
                let pos = self.pos();
                self.at += 1;
                let r = self.unary()?;
                if r.is_zero() {
                    return Err(Error::Parse {
                        pos,
                        msg: "division by zero".into(),
                    });
                }
                v /= r;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<BigRational> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<BigRational> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(v)
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(Tok::Ident(name)) => {
                let pos = self.pos();
                self.at += 1;
                self.call(&name, pos)
            }
            Some(_) => self.fail("expected a number, a call or `(`"),
            None => self.fail("unexpected end of input"),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<BigRational> {
        self.expect('(')?;
        let mut args = Vec::new();
        let mut path = None;
        if !self.eat(')') {
            loop {
                if let Some(Tok::Str(s)) = self.peek().cloned() {
                    self.at += 1;
                    path = Some(s);
                } else {
                    args.push(self.expr()?);
                }
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if (lo..=hi).contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Parse {
                    pos,
                    msg: format!("{name} takes {lo}..={hi} arguments, got {}", args.len()),
                })
            }
        };
        match name {
            "mul" => {
                arity(2, 2)?;
                self.mul(&args[0], &args[1])
            }
            "div" => {
                arity(4, 4)?;
                self.div(&args, pos)
            }
            "acc" => {
                arity(0, 0)?;
                let p = path.ok_or_else(|| Error::Parse {
                    pos,
                    msg: "acc takes a quoted file name".into(),
                })?;
                self.acc(&p)
            }
            "map" => {
                arity(1, 8)?;
                self.map(&args)
            }
            _ => Err(Error::Parse {
                pos,
                msg: format!("unknown function `{name}`"),
            }),
        }
    }

    fn add(&mut self, a: &BigRational, b: &BigRational, sub: bool) -> Result<BigRational> {
        let exact = if sub { a - b } else { a + b };
        let (Some((ma, ea)), Some((mb, eb))) = (to_scaled(a, 2), to_scaled(b, 2)) else {
            self.trace.push(format!(
                "{} {} {}: exact rational (no binary grid)",
                a,
                if sub { '-' } else { '+' },
                b
            ));
            return Ok(exact);
        };
        let e = ea.min(eb);
        let width = [(&ma, ea), (&mb, eb)]
            .iter()
            .map(|(m, x)| m.magnitude().bits() as usize + (x - e) as usize)
            .max()
            .unwrap_or(1)
            .max(1);
        let qa = QuadSignedCode::from_value(a, width, 2, e)?;
        let qb = QuadSignedCode::from_value(b, width, 2, e)?;
        let r = if sub {
            quad_sub(&qa, &qb)?
        } else {
            quad_add(&qa, &qb)?
        };
        self.trace.push(format!(
            "{} {} {} in the four-row signed format:\n{}{}",
            a,
            if sub { '-' } else { '+' },
            b,
            qa.as_four_row(),
            r.as_four_row()
        ));
        debug_assert_eq!(r.value(), exact);
        Ok(r.value())
    }

    fn mul(&mut self, a: &BigRational, b: &BigRational) -> Result<BigRational> {
        let exact = a * b;
        let (Some((ma, ea)), Some((mb, eb))) = (to_scaled(a, 2), to_scaled(b, 2)) else {
            self.trace
                .push(format!("{a} * {b}: exact rational (no binary grid)"));
            return Ok(exact);
        };
        let code = |m: &BigInt, e: i64| {
            let mag = m.magnitude();
            MultiRowCode::from_mantissa(mag, 1, digit_len(mag, 2).max(1), 2, e)
        };
        let (ca, cb) = (code(&ma, ea)?, code(&mb, eb)?);
        let p = multiply(&ca, &cb, Signedness::Unsigned)?;
        let n = ca.width().max(cb.width()) as u64;
        let delay = if n >= 2 {
            Some(mul_delay(n, &DelayModel::default())?)
        } else {
            None
        };
        self.delay = delay;
        let negative = (ma.sign() == Sign::Minus) != (mb.sign() == Sign::Minus);
        let magnitude = p.value();
        self.trace.push(format!(
            "|{a}| * |{b}|: {}-bit product, {} stages, delay {}\n{}",
            n,
            p.stages,
            delay.map_or("-".into(), |d| format!("{d} t&")),
            p.code
        ));
        let v = if negative { -magnitude } else { magnitude };
        debug_assert_eq!(v, exact);
        Ok(v)
    }

    fn div(&mut self, args: &[BigRational], pos: usize) -> Result<BigRational> {
        let small = |v: &BigRational, what: &str| -> Result<u64> {
            if v.is_integer() && !v.is_negative() {
                v.to_integer().to_u64().ok_or(())
            } else {
                Err(())
            }
            .map_err(|_| Error::Parse {
                pos,
                msg: format!("div: {what} must be a small non-negative integer"),
            })
        };
        let k = small(&args[2], "k")? as u32;
        let m = small(&args[3], "iteration count")? as usize;
        let (x, z) = common_scale(&args[0], &args[1])?;
        let res = divide(&x, &z, k, m, 2, Comparator::Parallel)?;
        for s in &res.trace {
            self.trace.push(format!(
                "div iteration {}: r = {}, digit {}, residual {}, unitary {}",
                s.iteration, s.residual_in, s.digit, s.residual_out, s.unitary
            ));
        }
        Ok(res.quotient())
    }

    fn acc(&mut self, name: &str) -> Result<BigRational> {
        let path = self.base.join(name);
        let text = std::fs::read_to_string(&path)?;
        let values = parse_value_lines(&text)?;
        let state = accumulate_values(&values)?;
        self.trace.push(format!(
            "acc {}: {} values, overflow count {}",
            path.display(),
            values.len(),
            state.overflow_count()
        ));
        Ok(state.total())
    }

    fn map(&mut self, args: &[BigRational]) -> Result<BigRational> {
        let mut mags = Vec::new();
        for v in args {
            if !v.is_integer() || v.is_negative() {
                return Err(Error::Shape(
                    "map operands must be non-negative integers".into(),
                ));
            }
            mags.push(v.to_integer().to_biguint().expect("non-negative"));
        }
        let width = mags
            .iter()
            .map(|m| m.bits() as usize)
            .max()
            .unwrap_or(0)
            .max(2);
        let cfg = MapConfig::new(width, MapMode::OneShot, Signedness::Unsigned)?;
        let code = |m: &BigUint| MultiRowCode::from_mantissa(m, 1, width, 2, 0).map(Some);
        let mut slots: Vec<Option<MultiRowCode>> = vec![None; 8];
        for (i, m) in mags.iter().enumerate() {
            slots[i] = code(m)?;
        }
        if slots[1].is_none() {
            slots[1] = code(&BigUint::zero())?;
        }
        let mut it = slots.into_iter();
        let mut next = || it.next().flatten();
        let t = MapTuple {
            a: next(),
            b: next(),
            c: next(),
            d: next(),
            e: next(),
            g: next(),
            h: next(),
            l: next(),
        };
        let st = map_eval_traced(&cfg, &t)?;
        for (i, m) in st.trace.iter().enumerate() {
            self.trace.push(format!("map stage {i}:\n{m}"));
        }
        Ok(st.total())
    }
}

/// Reads one value per line (integers or decimals); `#` starts a comment.
pub fn parse_value_lines(text: &str) -> Result<Vec<BigRational>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.lines() {
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            let lead = line.len() - line.trim_start().len();
            let v = eval_expression(body).map_err(|e| match e {
                Error::Parse { pos, msg } => Error::Parse {
                    pos: offset + lead + pos,
                    msg,
                },
                other => other,
            })?;
            out.push(v.value);
        }
        offset += line.len() + 1;
    }
    Ok(out)
}

/// Accumulates non-negative binary-representable values on one grid.
pub fn accumulate_values(values: &[BigRational]) -> Result<AccumulatorState> {
    let mut scaled = Vec::with_capacity(values.len());
    for v in values {
        if v.is_negative() {
            return Err(Error::NegativeValue);
        }
        scaled.push(to_scaled(v, 2).ok_or(Error::NotMultipleOfLsb)?);
    }
    let e = scaled.iter().map(|s| s.1).min().unwrap_or(0);
    let codes: Vec<MultiRowCode> = values
        .iter()
        .map(|v| {
            let m = (v / crate::codes::weight(2, e)).to_integer();
            let m = m.to_biguint().expect("non-negative");
            let w = digit_len(&m, 2).max(1);
            MultiRowCode::from_mantissa(&m, 1, w, 2, e)
        })
        .collect::<Result<_>>()?;
    let width = codes.iter().map(|c| c.width()).max().unwrap_or(1);
    let mut state = AccumulatorState::new(width, e, OverflowPolicy::Exact)?;
    for c in &codes {
        state = state.step(c)?;
    }
    Ok(state)
}

/// Evaluates `src`; `acc` file names resolve against the working directory.
pub fn eval_expression(src: &str) -> Result<Evaluation> {
    eval_expression_in(src, Path::new("."))
}

/// Evaluates `src` with `acc` file names resolved against `base`.
pub fn eval_expression_in(src: &str, base: &Path) -> Result<Evaluation> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: src.len(),
        trace: Vec::new(),
        delay: None,
        base,
    };
    let value = p.expr()?;
    if p.at != p.toks.len() {
        return p.fail("unexpected trailing input");
    }
    Ok(Evaluation {
        value,
        trace: p.trace,
        delay: p.delay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(s: &str) -> BigRational {
        eval_expression(s).unwrap().value
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn arithmetic() {
        assert_eq!(val("2+3"), rat(5, 1));
        assert_eq!(val("2 - 7 * 3"), rat(-19, 1));
        assert_eq!(val("(2 - 7) * -3"), rat(15, 1));
        assert_eq!(val("0.625 + 1/8"), rat(3, 4));
        assert_eq!(val("1/3 + 1/6"), rat(1, 2));
        assert_eq!(val("2 × 3 − 1"), rat(5, 1));
    }

    #[test]
    fn calls() {
        assert_eq!(val("mul(12345, 678)"), rat(12345 * 678, 1));
        assert_eq!(val("map(3, 4, 5, 6)"), rat(23, 1));
        let e = eval_expression("mul(2^1, 3)");
        assert!(e.is_err());
    }

    #[test]
    fn division_of_five_sevenths() {
        let e = eval_expression("div(5/8, 7/8, 4, 4)").unwrap();
        let q = e.value;
        // 5/7 = 0.B6DB... in base 16.
        assert_eq!(q, rat(0xB6DB, 0x10000));
        assert_eq!(e.trace.len(), 4);
        assert!(e.trace[0].contains("digit 11"));
    }

    #[test]
    fn wide_multiply_reports_delay() {
        let a = (1u128 << 62) + 12345;
        let b = (1u128 << 62) + 999;
        let e = eval_expression(&format!("mul({a}, {b})")).unwrap();
        assert_eq!(e.delay, Some(14));
        assert_eq!(
            e.value,
            BigRational::from_integer(BigInt::from(a) * BigInt::from(b))
        );
    }

    #[test]
    fn parse_errors_have_positions() {
        let pos = |s: &str| match eval_expression(s) {
            Err(Error::Parse { pos, .. }) => pos,
            other => panic!("{other:?}"),
        };
        assert_eq!(pos("2 + "), 4);
        assert_eq!(pos("2 $ 3"), 2);
        assert_eq!(pos("(1 + 2"), 6);
        assert_eq!(pos("foo(1)"), 0);
        assert_eq!(pos("1/0"), 1);
        assert_eq!(pos("1 2"), 2);
    }

    #[test]
    fn acc_from_file() {
        let dir = std::env::temp_dir().join(format!("redundarith-expr-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("vals.txt"), "# values\n255\n255\n0.5\n").unwrap();
        let e = eval_expression_in("acc(\"vals.txt\") + 1", &dir).unwrap();
        assert_eq!(e.value, rat(1023, 2));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn trace_shows_matrices() {
        let e = eval_expression("3 - 5").unwrap();
        assert!(e.trace[0].contains("mrc 4"));
        assert_eq!(e.value, rat(-2, 1));
    }
}
