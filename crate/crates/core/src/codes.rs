//! Multi-row codes and the four-row signed format.
//!
//! A [`MultiRowCode`] is an `m x n` digit matrix in radix `q`. Every digit in
//! column `j` carries the weight `q^(j + e)`, where `e` is the exponent of the
//! least-significant column (the "virtual point"). The value of a code is the
//! weighted sum of all its digits, so the placement of a digit inside its
//! column never matters.
//!
//! Digits are stored column-major with the least-significant column first.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_RADIX: u32 = 256;

/// `q^k` as a big integer.
pub fn radix_pow(q: u32, k: u64) -> BigUint {
    num_traits::pow::pow(BigUint::from(q), k as usize)
}

/// `q^e` as an exact rational, `e` may be negative.
pub fn weight(q: u32, e: i64) -> BigRational {
    let p = BigInt::from(radix_pow(q, e.unsigned_abs()));
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

fn check_radix(q: u32) -> Result<()> {
    if (2..=MAX_RADIX).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidRadix(q))
    }
}

/// An `m`-row code: a digit matrix whose columns share a weight.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiRowCode {
    rows: usize,
    width: usize,
    radix: u32,
    lsb_exp: i64,
    digits: Vec<u8>,
}

impl MultiRowCode {
    pub fn zeros(rows: usize, width: usize, radix: u32, lsb_exp: i64) -> Result<Self> {
        check_radix(radix)?;
        Ok(Self {
            rows,
            width,
            radix,
            lsb_exp,
            digits: vec![0; rows * width],
        })
    }

    /// Builds a code from rows given least-significant digit first.
    /// Shorter rows are zero-extended to the longest one.
    pub fn from_rows_lsb(radix: u32, lsb_exp: i64, rows: &[Vec<u8>]) -> Result<Self> {
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut code = Self::zeros(rows.len(), width, radix, lsb_exp)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                code.set_digit(i, j, d)?;
            }
        }
        Ok(code)
    }

    /// One-row code holding `mantissa` in canonical radix-`q` digits, with the
    /// remaining rows zero. The represented value is `mantissa * q^lsb_exp`.
    pub fn from_mantissa(
        mantissa: &BigUint,
        rows: usize,
        width: usize,
        radix: u32,
        lsb_exp: i64,
    ) -> Result<Self> {
        let rows = rows.max(1);
        let mut code = Self::zeros(rows, width, radix, lsb_exp)?;
        let digits = mantissa.to_radix_le(radix);
        let needed = if mantissa.is_zero() { 0 } else { digits.len() };
        if needed > width {
            return Err(Error::WidthOverflow { needed, width });
        }
        for (j, &d) in digits.iter().enumerate().take(needed) {
            code.digits[j * rows] = d;
        }
        Ok(code)
    }

    /// Embeds an exact non-negative value into row 0.
    pub fn from_value(
        v: &BigRational,
        rows: usize,
        width: usize,
        radix: u32,
        lsb_exp: i64,
    ) -> Result<Self> {
        check_radix(radix)?;
        if v.is_negative() {
            return Err(Error::NegativeValue);
        }
        let scaled = v / weight(radix, lsb_exp);
        if !scaled.is_integer() {
            return Err(Error::NotMultipleOfLsb);
        }
        let m = scaled.to_integer().to_biguint().expect("non-negative");
        Self::from_mantissa(&m, rows, width, radix, lsb_exp)
    }

    /// Integer-valued convenience constructor with `lsb_exp = 0`.
    pub fn from_u128(v: u128, rows: usize, width: usize, radix: u32) -> Result<Self> {
        Self::from_mantissa(&BigUint::from(v), rows, width, radix, 0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radix(&self) -> u32 {
        self.radix
    }

    pub fn lsb_exp(&self) -> i64 {
        self.lsb_exp
    }

    pub fn digit(&self, row: usize, col: usize) -> u8 {
        self.digits[col * self.rows + row]
    }

    pub fn set_digit(&mut self, row: usize, col: usize, d: u8) -> Result<()> {
        if u32::from(d) >= self.radix {
            return Err(Error::DigitOutOfRange {
                row,
                col,
                digit: d.into(),
                max: self.radix - 1,
            });
        }
        if row >= self.rows || col >= self.width {
            return Err(Error::Shape(format!(
                "cell ({row}, {col}) outside {}x{}",
                self.rows, self.width
            )));
        }
        self.digits[col * self.rows + row] = d;
        Ok(())
    }

    /// Digits of column `col`, top row first.
    pub fn column(&self, col: usize) -> &[u8] {
        &self.digits[col * self.rows..(col + 1) * self.rows]
    }

    pub(crate) fn column_mut(&mut self, col: usize) -> &mut [u8] {
        let r = self.rows;
        &mut self.digits[col * r..(col + 1) * r]
    }

    /// Row `row`, least-significant digit first.
    pub fn row_lsb(&self, row: usize) -> Vec<u8> {
        (0..self.width).map(|j| self.digit(row, j)).collect()
    }

    pub fn column_sum(&self, col: usize) -> u64 {
        self.column(col).iter().map(|&d| u64::from(d)).sum()
    }

    /// Number of non-zero digits in each column.
    pub fn column_heights(&self) -> Vec<usize> {
        (0..self.width)
            .map(|j| self.column(j).iter().filter(|&&d| d != 0).count())
            .collect()
    }

    /// `sum a[i][j] * q^j`, i.e. the value in units of the least-significant
    /// column weight.
    pub fn mantissa(&self) -> BigUint {
        // Horner over column sums, most-significant column first.
        let q = BigUint::from(self.radix);
        let mut acc = BigUint::zero();
        for j in (0..self.width).rev() {
            acc = acc * &q + BigUint::from(self.column_sum(j));
        }
        acc
    }

    /// Exact value `sum a[i][j] * q^(j+e)`.
    pub fn value(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.mantissa())) * weight(self.radix, self.lsb_exp)
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Moves non-zero digits to the top of each column, larger digits first.
    pub fn canonicalize(&mut self) {
        for j in 0..self.width {
            self.column_mut(j).sort_unstable_by(|a, b| b.cmp(a));
        }
    }

    pub fn canonical(&self) -> Self {
        let mut c = self.clone();
        c.canonicalize();
        c
    }

    /// Canonicalizes and drops trailing rows that became entirely zero.
    pub fn compact_rows(&self) -> Self {
        let c = self.canonical();
        let used = (0..c.rows)
            .rev()
            .find(|&i| (0..c.width).any(|j| c.digit(i, j) != 0))
            .map_or(0, |i| i + 1);
        c.with_rows(used.max(1))
    }

    fn with_rows(&self, rows: usize) -> Self {
        let mut out = Self::zeros(rows, self.width, self.radix, self.lsb_exp).expect("radix");
        for j in 0..self.width {
            for i in 0..rows.min(self.rows) {
                out.digits[j * rows + i] = self.digit(i, j);
            }
        }
        out
    }

    /// Appends zero rows until the code has at least `rows` rows.
    pub fn pad_rows(&self, rows: usize) -> Self {
        if rows <= self.rows {
            self.clone()
        } else {
            self.with_rows(rows)
        }
    }

    /// Changes the width. Growing adds zero columns; shrinking fails if a
    /// dropped column holds a non-zero digit.
    pub fn resize_width(&self, width: usize) -> Result<Self> {
        if width < self.width {
            let needed = self.significant_width();
            if needed > width {
                return Err(Error::WidthOverflow { needed, width });
            }
        }
        let mut out = Self::zeros(self.rows, width, self.radix, self.lsb_exp)?;
        let keep = width.min(self.width) * self.rows;
        out.digits[..keep].copy_from_slice(&self.digits[..keep]);
        Ok(out)
    }

    /// Index one past the most-significant non-zero column.
    pub fn significant_width(&self) -> usize {
        (0..self.width)
            .rev()
            .find(|&j| self.column(j).iter().any(|&d| d != 0))
            .map_or(0, |j| j + 1)
    }

    /// Drops high all-zero columns, keeping at least `min_width` columns.
    pub fn trimmed(&self, min_width: usize) -> Self {
        let w = self.significant_width().max(min_width).min(self.width);
        self.resize_width(w).expect("only zero columns dropped")
    }

    /// Re-expresses the code at a lower least-significant exponent by shifting
    /// digits toward higher columns. Raising the exponent is not supported.
    pub fn align_to(&self, lsb_exp: i64) -> Result<Self> {
        if lsb_exp > self.lsb_exp {
            return Err(Error::ExponentMismatch {
                left: self.lsb_exp,
                right: lsb_exp,
            });
        }
        let shift = (self.lsb_exp - lsb_exp) as usize;
        let mut out = Self::zeros(self.rows, self.width + shift, self.radix, lsb_exp)?;
        out.digits[shift * self.rows..].copy_from_slice(&self.digits);
        Ok(out)
    }

    /// Vertical concatenation. All parts must share radix and exponent; the
    /// result is as wide as the widest part.
    pub fn stack(parts: &[&MultiRowCode]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("nothing to stack".into()))?;
        for p in parts {
            if p.radix != first.radix {
                return Err(Error::RadixMismatch {
                    left: first.radix,
                    right: p.radix,
                });
            }
            if p.lsb_exp != first.lsb_exp {
                return Err(Error::ExponentMismatch {
                    left: first.lsb_exp,
                    right: p.lsb_exp,
                });
            }
        }
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let width = parts.iter().map(|p| p.width).max().unwrap_or(0);
        let mut out = Self::zeros(rows, width, first.radix, first.lsb_exp)?;
        let mut base = 0;
        for p in parts {
            for j in 0..p.width {
                let src = p.column(j);
                out.digits[j * rows + base..j * rows + base + p.rows].copy_from_slice(src);
            }
            base += p.rows;
        }
        Ok(out)
    }

    /// Checks the interchange convention that the exponent is a whole number
    /// of bytes.
    pub fn validate_byte_aligned_exp(&self) -> Result<()> {
        if self.lsb_exp.rem_euclid(8) == 0 {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "lsb_exp mod 8",
                value: self.lsb_exp.rem_euclid(8).into(),
                range: "0",
            })
        }
    }

    pub(crate) fn from_raw(
        rows: usize,
        width: usize,
        radix: u32,
        lsb_exp: i64,
        digits: Vec<u8>,
    ) -> Self {
        debug_assert_eq!(digits.len(), rows * width);
        debug_assert!(digits.iter().all(|&d| u32::from(d) < radix));
        Self {
            rows,
            width,
            radix,
            lsb_exp,
            digits,
        }
    }

    pub fn to_json(&self) -> CodeJson {
        CodeJson {
            rows: self.rows,
            width: self.width,
            radix: self.radix,
            lsb_exp: self.lsb_exp,
            digits: (0..self.rows)
                .map(|i| (0..self.width).rev().map(|j| self.digit(i, j)).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &CodeJson) -> Result<Self> {
        if j.digits.len() != j.rows {
            return Err(Error::Shape(format!(
                "expected {} rows, found {}",
                j.rows,
                j.digits.len()
            )));
        }
        let mut code = Self::zeros(j.rows, j.width, j.radix, j.lsb_exp)?;
        for (i, row) in j.digits.iter().enumerate() {
            if row.len() != j.width {
                return Err(Error::Shape(format!(
                    "row {i} has {} digits, expected {}",
                    row.len(),
                    j.width
                )));
            }
            for (k, &d) in row.iter().enumerate() {
                code.set_digit(i, j.width - 1 - k, d)?;
            }
        }
        Ok(code)
    }
}

/// Exact value of a code; free-function form of [`MultiRowCode::value`].
pub fn value_of(code: &MultiRowCode) -> BigRational {
    code.value()
}

/// JSON form of a code. `digits` holds one array per row, most-significant
/// digit first, mirroring the text format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeJson {
    pub rows: usize,
    pub width: usize,
    pub radix: u32,
    pub lsb_exp: i64,
    pub digits: Vec<Vec<u8>>,
}

/// Text format: a header line `mrc m n q e`, then `m` lines of `n` digits,
/// most-significant first. Radices above 10 write space-separated decimal
/// digits.
impl fmt::Display for MultiRowCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "mrc {} {} {} {}",
            self.rows, self.width, self.radix, self.lsb_exp
        )?;
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.width)
                .rev()
                .map(|j| self.digit(i, j).to_string())
                .collect();
            if self.radix <= 10 {
                writeln!(f, "{}", line.concat())?;
            } else {
                writeln!(f, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }
}

impl FromStr for MultiRowCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            pos: 0,
            msg: "empty input".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "mrc" {
            return Err(Error::Parse {
                pos: hline + 1,
                msg: "expected header `mrc m n q e`".into(),
            });
        }
        let num = |k: usize| -> Result<i64> {
            fields[k].parse::<i64>().map_err(|e| Error::Parse {
                pos: hline + 1,
                msg: format!("header field {k}: {e}"),
            })
        };
        let (rows, width, radix, lsb_exp) = (num(1)?, num(2)?, num(3)?, num(4)?);
        if rows < 0 || width < 0 || !(2..=i64::from(MAX_RADIX)).contains(&radix) {
            return Err(Error::Parse {
                pos: hline + 1,
                msg: "bad header values".into(),
            });
        }
        let (rows, width, radix) = (rows as usize, width as usize, radix as u32);
        let mut code = Self::zeros(rows, width, radix, lsb_exp)?;
        // Rows of an empty code are blank lines, which the filter drops.
        let row_lines = if width == 0 { 0 } else { rows };
        for i in 0..row_lines {
            let (lno, line) = lines.next().ok_or(Error::Parse {
                pos: hline + 2 + i,
                msg: format!("missing row {i}"),
            })?;
            let line = line.trim();
            let ds: Vec<u32> = if radix > 10 || line.contains(char::is_whitespace) {
                line.split_whitespace()
                    .map(|t| t.parse::<u32>().ok())
                    .collect::<Option<_>>()
            } else {
                line.chars().map(|c| c.to_digit(36)).collect::<Option<_>>()
            }
            .ok_or(Error::Parse {
                pos: lno + 1,
                msg: "invalid digit".into(),
            })?;
            if ds.len() != width {
                return Err(Error::Parse {
                    pos: lno + 1,
                    msg: format!("row has {} digits, expected {width}", ds.len()),
                });
            }
            for (k, &d) in ds.iter().enumerate() {
                if d >= radix {
                    return Err(Error::DigitOutOfRange {
                        row: i,
                        col: width - 1 - k,
                        digit: d,
                        max: radix - 1,
                    });
                }
                code.digits[(width - 1 - k) * rows + i] = d as u8;
            }
        }
        if let Some((lno, _)) = lines.next() {
            return Err(Error::Parse {
                pos: lno + 1,
                msg: format!("more than {rows} rows"),
            });
        }
        Ok(code)
    }
}

/// The four-row signed format: a positive two-row part and a negative
/// two-row part. Subtraction swaps the parts; no complement codes are formed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadSignedCode {
    pos: MultiRowCode,
    neg: MultiRowCode,
}

impl QuadSignedCode {
    /// Pairs two codes of at most two rows. Both are padded to two rows and to
    /// a common width.
    pub fn new(pos: MultiRowCode, neg: MultiRowCode) -> Result<Self> {
        if pos.radix() != neg.radix() {
            return Err(Error::RadixMismatch {
                left: pos.radix(),
                right: neg.radix(),
            });
        }
        if pos.lsb_exp() != neg.lsb_exp() {
            return Err(Error::ExponentMismatch {
                left: pos.lsb_exp(),
                right: neg.lsb_exp(),
            });
        }
        if pos.rows() > 2 || neg.rows() > 2 {
            return Err(Error::Shape("signed parts must have at most 2 rows".into()));
        }
        let w = pos.width().max(neg.width());
        Ok(Self {
            pos: pos.pad_rows(2).resize_width(w)?,
            neg: neg.pad_rows(2).resize_width(w)?,
        })
    }

    pub fn zero(width: usize, radix: u32, lsb_exp: i64) -> Result<Self> {
        let z = MultiRowCode::zeros(2, width, radix, lsb_exp)?;
        Ok(Self {
            pos: z.clone(),
            neg: z,
        })
    }

    /// Places `v` in the positive or negative part according to its sign.
    pub fn from_value(v: &BigRational, width: usize, radix: u32, lsb_exp: i64) -> Result<Self> {
        let mag = MultiRowCode::from_value(&v.abs(), 2, width, radix, lsb_exp)?;
        let zero = MultiRowCode::zeros(2, width, radix, lsb_exp)?;
        if v.is_negative() {
            Self::new(zero, mag)
        } else {
            Self::new(mag, zero)
        }
    }

    pub fn pos(&self) -> &MultiRowCode {
        &self.pos
    }

    pub fn neg(&self) -> &MultiRowCode {
        &self.neg
    }

    pub fn width(&self) -> usize {
        self.pos.width()
    }

    pub fn radix(&self) -> u32 {
        self.pos.radix()
    }

    pub fn lsb_exp(&self) -> i64 {
        self.pos.lsb_exp()
    }

    pub fn value(&self) -> BigRational {
        self.pos.value() - self.neg.value()
    }

    pub fn negate(&self) -> Self {
        Self {
            pos: self.neg.clone(),
            neg: self.pos.clone(),
        }
    }

    /// The four rows as one code: positive part on top.
    pub fn as_four_row(&self) -> MultiRowCode {
        MultiRowCode::stack(&[&self.pos, &self.neg]).expect("parts share format")
    }
}

pub fn quad_value(quad: &QuadSignedCode) -> BigRational {
    quad.value()
}

pub fn quad_negate(quad: &QuadSignedCode) -> QuadSignedCode {
    quad.negate()
}

/// Converts a rational with a power-of-`q` denominator to `(mantissa, e)`
/// with `value = mantissa * q^e` and `e <= 0`. Returns `None` when the
/// denominator is not a power of `q`.
pub fn to_scaled(v: &BigRational, q: u32) -> Option<(BigInt, i64)> {
    let mut den = v.denom().clone();
    let qb = BigInt::from(q);
    let mut e = 0i64;
    while !den.is_one() {
        let (d, r) = den.div_rem(&qb);
        if !r.is_zero() {
            return None;
        }
        den = d;
        e -= 1;
    }
    let scale = BigInt::from(radix_pow(q, e.unsigned_abs()));
    let mant = v.numer() * scale / v.denom();
    Some((mant, e))
}

/// Number of radix-`q` digits needed for `v` (0 for zero).
pub fn digit_len(v: &BigUint, q: u32) -> usize {
    if v.is_zero() {
        0
    } else if q == 2 {
        v.bits() as usize
    } else {
        v.to_radix_le(q).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn zero_embedding() {
        let c = MultiRowCode::from_value(&rat(0), 2, 4, 2, 0).unwrap();
        assert!(c.is_zero());
        assert_eq!((c.rows(), c.width()), (2, 4));
    }

    #[test]
    fn five_in_two_rows() {
        let c = MultiRowCode::from_value(&rat(5), 2, 3, 2, 0).unwrap();
        assert_eq!(c.row_lsb(0), vec![1, 0, 1]);
        assert_eq!(c.row_lsb(1), vec![0, 0, 0]);
    }

    #[test]
    fn embedding_176_round_trips() {
        let c = MultiRowCode::from_value(&rat(176), 3, 8, 2, 0).unwrap();
        // Oracle: BigUint's own radix conversion, MSB first.
        let oracle = BigUint::from(176u32).to_str_radix(2);
        let row0: String = c.row_lsb(0).iter().rev().map(|d| d.to_string()).collect();
        assert_eq!(row0, oracle);
        assert_eq!(oracle, "10110000");
        assert!(c
            .row_lsb(1)
            .iter()
            .chain(c.row_lsb(2).iter())
            .all(|&d| d == 0));
        assert_eq!(c.value(), rat(176));
    }

    #[test]
    fn embedding_errors() {
        assert_eq!(
            MultiRowCode::from_value(&rat(8), 1, 3, 2, 0),
            Err(Error::WidthOverflow {
                needed: 4,
                width: 3
            })
        );
        assert_eq!(
            MultiRowCode::from_value(&rat(5), 1, 8, 2, 1),
            Err(Error::NotMultipleOfLsb)
        );
        assert_eq!(
            MultiRowCode::from_value(&rat(-1), 1, 8, 2, 0),
            Err(Error::NegativeValue)
        );
        assert_eq!(MultiRowCode::zeros(1, 1, 1, 0), Err(Error::InvalidRadix(1)));
    }

    #[test]
    fn value_of_examples() {
        let z = MultiRowCode::zeros(4, 8, 2, 0).unwrap();
        assert_eq!(value_of(&z), rat(0));

        let c = MultiRowCode::from_rows_lsb(2, 0, &[vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(value_of(&c), rat(5));

        let tiny = MultiRowCode::from_rows_lsb(2, -128, &[vec![1]]).unwrap();
        let expected = BigRational::new(BigInt::one(), BigInt::from(radix_pow(2, 128)));
        assert_eq!(value_of(&tiny), expected);
    }

    #[test]
    fn quad_examples() {
        let q = |p: i64, n: i64| {
            QuadSignedCode::new(
                MultiRowCode::from_value(&rat(p), 2, 8, 2, 0).unwrap(),
                MultiRowCode::from_value(&rat(n), 2, 8, 2, 0).unwrap(),
            )
            .unwrap()
        };
        assert_eq!(quad_value(&q(0, 0)), rat(0));
        assert_eq!(quad_value(&q(7, 7)), rat(0));
        assert_eq!(quad_value(&q(13, 5)), rat(8));

        let neg = quad_negate(&q(5, 0));
        assert_eq!(neg.pos().value(), rat(0));
        assert_eq!(neg.neg().value(), rat(5));
        assert_eq!(quad_value(&neg), rat(-5));
        assert_eq!(quad_negate(&q(0, 0)).value(), rat(0));
        assert_eq!(quad_negate(&neg), q(5, 0));
    }

    #[test]
    fn text_format_round_trip() {
        let c = MultiRowCode::from_rows_lsb(2, -3, &[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        let text = c.to_string();
        assert_eq!(text, "mrc 2 3 2 -3\n101\n110\n");
        assert_eq!(text.parse::<MultiRowCode>().unwrap(), c);

        let dec = MultiRowCode::from_rows_lsb(16, 0, &[vec![15, 3]]).unwrap();
        assert_eq!(dec.to_string(), "mrc 1 2 16 0\n3 15\n");
        assert_eq!(dec.to_string().parse::<MultiRowCode>().unwrap(), dec);
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(
            "mrc 1 2 2".parse::<MultiRowCode>(),
            Err(Error::Parse { pos: 1, .. })
        ));
        assert!(matches!(
            "mrc 1 2 2 0\n12\n".parse::<MultiRowCode>(),
            Err(Error::DigitOutOfRange { digit: 2, .. })
        ));
        assert!(matches!(
            "mrc 2 2 2 0\n10\n".parse::<MultiRowCode>(),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let c = MultiRowCode::from_rows_lsb(3, 2, &[vec![2, 0, 1], vec![1, 1, 0]]).unwrap();
        let s = serde_json::to_string(&c.to_json()).unwrap();
        assert_eq!(
            s,
            r#"{"rows":2,"width":3,"radix":3,"lsb_exp":2,"digits":[[1,0,2],[0,1,1]]}"#
        );
        let back: CodeJson = serde_json::from_str(&s).unwrap();
        assert_eq!(MultiRowCode::from_json(&back).unwrap(), c);
    }

    #[test]
    fn align_and_stack() {
        let a = MultiRowCode::from_u128(3, 1, 2, 2).unwrap();
        let b = a.align_to(-2).unwrap();
        assert_eq!(b.value(), a.value());
        assert_eq!(b.width(), 4);
        assert!(a.align_to(1).is_err());

        let s = MultiRowCode::stack(&[&a, &a.pad_rows(2)]).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.value(), rat(6));
        assert!(MultiRowCode::stack(&[&a, &b]).is_err());
    }

    #[test]
    fn byte_alignment_flag() {
        let c = MultiRowCode::zeros(1, 1, 2, -128).unwrap();
        assert!(c.validate_byte_aligned_exp().is_ok());
        let c = MultiRowCode::zeros(1, 1, 2, -3).unwrap();
        assert!(c.validate_byte_aligned_exp().is_err());
    }

    #[test]
    fn compacting_keeps_value() {
        let c = MultiRowCode::from_rows_lsb(2, 0, &[vec![0, 1], vec![1, 0], vec![0, 0]]).unwrap();
        let k = c.compact_rows();
        assert_eq!(k.rows(), 1);
        assert_eq!(k.value(), c.value());
        assert_eq!(c.trimmed(0).width(), 2);
    }

    #[test]
    fn scaled_conversion() {
        let v = BigRational::new(BigInt::from(5), BigInt::from(8));
        assert_eq!(to_scaled(&v, 2), Some((BigInt::from(5), -3)));
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(to_scaled(&third, 2), None);
    }
}
