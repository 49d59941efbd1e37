//! Partial-product matrices, multiplication by reduction, and fused
//! multiply-accumulate.
//!
//! The product of two one-row binary codes is the reduction of their
//! partial-product matrix, which has the same trapezoid shape as a reduced
//! multi-row code. For two's-complement operands the sign rows are folded in
//! as inverted AND terms plus constants, so the matrix stays non-negative and
//! the product is `matrix value + bias` with a fixed, data-independent bias.
//!
//! Two's-complement operands are read as one sign digit of weight `-2^n`
//! followed by `n` magnitude digits. Scaling by `2^-n` gives the fractional
//! reading (sign digit at weight `-1`); the matrix algebra is identical.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::codes::{weight, MultiRowCode};
use crate::compressor::DelayModel;
use crate::error::{Error, Result};
use crate::reducer::{reduce_delay, reduce_once, reduce_to_two, stage_plan, StagePlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum Signedness {
    #[default]
    Unsigned,
    TwosComplement,
}

/// What a matrix cell holds, in terms of operand column indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PpCell {
    /// `a[i] & b[j]`.
    And { a: usize, b: usize },
    /// `!(a[i] & b[j])`.
    NotAnd { a: usize, b: usize },
    /// Constant one.
    One,
}

/// A partial-product matrix: a non-negative code plus a constant offset
/// `bias`, in units of the least-significant column weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialProductMatrix {
    pub code: MultiRowCode,
    pub bias: BigInt,
    /// `(row, column, cell)` for every occupied position.
    pub cells: Vec<(usize, usize, PpCell)>,
}

impl PartialProductMatrix {
    pub fn mantissa(&self) -> BigInt {
        BigInt::from(self.code.mantissa()) + &self.bias
    }

    pub fn value(&self) -> BigRational {
        BigRational::from_integer(self.mantissa()) * weight(2, self.code.lsb_exp())
    }
}

fn one_row_binary(code: &MultiRowCode, name: &str) -> Result<()> {
    if code.radix() != 2 {
        return Err(Error::RadixMismatch {
            left: 2,
            right: code.radix(),
        });
    }
    if code.rows() != 1 {
        return Err(Error::Shape(format!(
            "{name} must be a one-row code, found {} rows",
            code.rows()
        )));
    }
    Ok(())
}

/// Reads a one-row binary code as a two's-complement integer, in units of its
/// least-significant column.
pub fn twos_complement_value(code: &MultiRowCode) -> BigInt {
    let m = BigInt::from(code.mantissa());
    let w = code.width();
    if w > 0 && code.digit(0, w - 1) == 1 {
        m - (BigInt::one() << w)
    } else {
        m
    }
}

/// Encodes `v` as a `width`-bit two's-complement one-row code.
pub fn twos_complement_code(v: &BigInt, width: usize, lsb_exp: i64) -> Result<MultiRowCode> {
    let modulus = BigInt::one() << width;
    let half = BigInt::one() << width.saturating_sub(1);
    if width == 0 || v >= &half || v < &-half.clone() {
        return Err(Error::WidthOverflow {
            needed: v.bits() as usize + 1,
            width,
        });
    }
    let raw = ((v % &modulus) + &modulus) % &modulus;
    MultiRowCode::from_mantissa(&raw.to_biguint().unwrap(), 1, width, 2, lsb_exp)
}

/// Row `j` holds `a` shifted `j` columns when `b[j]` is set.
pub fn pp_matrix_unsigned(a: &MultiRowCode, b: &MultiRowCode) -> Result<PartialProductMatrix> {
    one_row_binary(a, "multiplicand")?;
    one_row_binary(b, "multiplier")?;
    let (na, nb) = (a.width(), b.width());
    let rows = nb.max(1);
    let width = if na == 0 || nb == 0 { 0 } else { na + nb - 1 };
    let mut code = MultiRowCode::zeros(rows, width, 2, a.lsb_exp() + b.lsb_exp())?;
    let mut cells = Vec::with_capacity(na * nb);
    for j in 0..nb {
        for i in 0..na {
            code.set_digit(j, i + j, a.digit(0, i) & b.digit(0, j))?;
            cells.push((j, i + j, PpCell::And { a: i, b: j }));
        }
    }
    Ok(PartialProductMatrix {
        code,
        bias: BigInt::zero(),
        cells,
    })
}

/// Two's-complement partial products. With `w = n + 1` bit operands and sign
/// digits `a[n]`, `b[n]`:
///
/// * `a[i] & b[j]` at column `i + j` for `i, j < n`,
/// * `!(a[n] & b[j])` at column `n + j` and `!(b[n] & a[i])` at column `n + i`,
/// * `a[n] & b[n]` at column `2n`,
/// * a constant one at column `n + 1`,
///
/// and a bias of `-2^(2n+1)`. Cells are packed to the top of their columns, so
/// the matrix has `w` rows.
pub fn pp_matrix_signed(a: &MultiRowCode, b: &MultiRowCode) -> Result<PartialProductMatrix> {
    one_row_binary(a, "multiplicand")?;
    one_row_binary(b, "multiplier")?;
    if a.width() != b.width() || a.width() == 0 {
        return Err(Error::Shape(format!(
            "signed operands need equal non-zero widths, got {} and {}",
            a.width(),
            b.width()
        )));
    }
    let n = a.width() - 1;
    let width = 2 * n + 1;
    let mut columns: Vec<Vec<(PpCell, u8)>> = vec![Vec::new(); width];
    let bit_a = |i: usize| a.digit(0, i);
    let bit_b = |j: usize| b.digit(0, j);
    for j in 0..n {
        for i in 0..n {
            columns[i + j].push((PpCell::And { a: i, b: j }, bit_a(i) & bit_b(j)));
        }
    }
    for j in 0..n {
        columns[n + j].push((PpCell::NotAnd { a: n, b: j }, 1 - (bit_a(n) & bit_b(j))));
    }
    for i in 0..n {
        columns[n + i].push((PpCell::NotAnd { a: i, b: n }, 1 - (bit_a(i) & bit_b(n))));
    }
    columns[2 * n].push((PpCell::And { a: n, b: n }, bit_a(n) & bit_b(n)));
    // With no magnitude digits the constant and the bias cancel.
    if n > 0 {
        columns[n + 1].push((PpCell::One, 1));
    }

    let rows = columns.iter().map(Vec::len).max().unwrap_or(1);
    let mut code = MultiRowCode::zeros(rows, width, 2, a.lsb_exp() + b.lsb_exp())?;
    let mut cells = Vec::new();
    for (c, col) in columns.iter().enumerate() {
        for (r, &(cell, bit)) in col.iter().enumerate() {
            code.set_digit(r, c, bit)?;
            cells.push((r, c, cell));
        }
    }
    Ok(PartialProductMatrix {
        code,
        bias: if n > 0 {
            -(BigInt::one() << (2 * n + 1))
        } else {
            BigInt::zero()
        },
        cells,
    })
}

pub fn pp_matrix(
    a: &MultiRowCode,
    b: &MultiRowCode,
    signedness: Signedness,
) -> Result<PartialProductMatrix> {
    match signedness {
        Signedness::Unsigned => pp_matrix_unsigned(a, b),
        Signedness::TwosComplement => pp_matrix_signed(a, b),
    }
}

/// A reduced product or accumulated sum: a two-row code plus a constant bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Product {
    pub code: MultiRowCode,
    pub bias: BigInt,
    pub stages: u32,
}

impl Product {
    pub fn zero(lsb_exp: i64) -> Self {
        Self {
            code: MultiRowCode::zeros(2, 1, 2, lsb_exp).expect("binary"),
            bias: BigInt::zero(),
            stages: 0,
        }
    }

    pub fn mantissa(&self) -> BigInt {
        BigInt::from(self.code.mantissa()) + &self.bias
    }

    pub fn value(&self) -> BigRational {
        BigRational::from_integer(self.mantissa()) * weight(2, self.code.lsb_exp())
    }

    /// The product as an unsigned magnitude; fails when the value is negative.
    pub fn unsigned_mantissa(&self) -> Option<BigUint> {
        self.mantissa().to_biguint()
    }
}

/// Builds the partial-product matrix and reduces it to two rows.
pub fn multiply(a: &MultiRowCode, b: &MultiRowCode, signedness: Signedness) -> Result<Product> {
    let pp = pp_matrix(a, b, signedness)?;
    let stages = stage_plan(pp.code.rows() as u64, 2).stages;
    Ok(Product {
        code: reduce_to_two(&pp.code),
        bias: pp.bias,
        stages,
    })
}

/// Result of one fused multiply-accumulate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacOutcome {
    pub product: Product,
    /// Stage (1-based) before which the accumulator rows were appended;
    /// `stages + 1` means after the last stage.
    pub injection_stage: u32,
    pub plan: StagePlan,
}

/// Chooses where `extra` feedback rows join a reduction of `rows` rows: the
/// earliest stage giving the fewest total stages. Returns `(stage, total)`.
pub fn injection_stage(rows: u64, extra: u64) -> (u32, u32) {
    let plan = stage_plan(rows, 2);
    let l = plan.stages;
    if l == 0 {
        return (1, stage_plan(rows + extra, 2).stages);
    }
    (1..=l + 1)
        .map(|k| {
            let at = plan.row_counts.get(k as usize - 1).copied().unwrap_or(2);
            (k, (k - 1) + stage_plan(at + extra, 2).stages)
        })
        .min_by_key(|&(k, total)| (total, k))
        .expect("non-empty")
}

/// `f_prev + a*b` with the accumulator rows merged into the partial-product
/// reduction instead of a separate addition.
pub fn fused_mac(
    f_prev: &Product,
    a: &MultiRowCode,
    b: &MultiRowCode,
    signedness: Signedness,
) -> Result<MacOutcome> {
    let pp = pp_matrix(a, b, signedness)?;
    if f_prev.code.lsb_exp() != pp.code.lsb_exp() {
        return Err(Error::ExponentMismatch {
            left: f_prev.code.lsb_exp(),
            right: pp.code.lsb_exp(),
        });
    }
    if f_prev.code.rows() > 3 {
        return Err(Error::Shape(
            "accumulator feedback must have 2 or 3 rows".into(),
        ));
    }
    let rows = pp.code.rows() as u64;
    let extra = f_prev.code.rows() as u64;
    let (k, total) = injection_stage(rows, extra);
    let mut cur = pp.code.clone();
    for _ in 1..k {
        cur = reduce_once(&cur);
    }
    let merged = MultiRowCode::stack(&[&cur, &f_prev.code])?;
    let reduced = reduce_to_two(&merged);
    debug_assert_eq!((k - 1) + stage_plan(merged.rows() as u64, 2).stages, total);
    Ok(MacOutcome {
        product: Product {
            code: reduced.trimmed(1),
            bias: &pp.bias + &f_prev.bias,
            stages: total,
        },
        injection_stage: k,
        plan: stage_plan(rows, 2),
    })
}

/// Multiply delay: one AND level to form the matrix plus the reduction of
/// `n` rows.
pub fn mul_delay(n: u64, model: &DelayModel) -> Result<u32> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "multiplier width",
            value: n.into(),
            range: ">= 2",
        });
    }
    Ok(model.t_and + reduce_delay(&stage_plan(n, 2), model))
}
