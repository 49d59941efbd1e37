//! Carry-save accumulating adder with an overflow counter.
//!
//! The running sum lives in two `n`-bit registers: a sum row and a carry row.
//! Each step feeds one operand through a line of full adders, so a carry moves
//! at most one column per layer and the step time does not depend on `n`.
//! The carry leaving the top column increments a counter, which extends the
//! range of the accumulator without widening the adder line.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::codes::{weight, MultiRowCode};
use crate::compressor::full_adder;
use crate::error::{Error, Result};

/// How the two top-column carries of a two-row step reach the counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum OverflowPolicy {
    /// Both carries are counted.
    #[default]
    Exact,
    /// The carries are combined modulo two before counting. This drops a
    /// count of two whenever both carries are set.
    LiteralXor,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccumulatorState {
    width: usize,
    lsb_exp: i64,
    /// Sum register, LSB first.
    sum_row: Vec<u8>,
    /// Carry register, LSB first; bit `j` has weight `2^(j+e)`.
    carry_row: Vec<u8>,
    overflow_count: BigUint,
    policy: OverflowPolicy,
    steps: u64,
}

pub fn acc_new(width: usize, lsb_exp: i64) -> Result<AccumulatorState> {
    AccumulatorState::new(width, lsb_exp, OverflowPolicy::Exact)
}

impl AccumulatorState {
    pub fn new(width: usize, lsb_exp: i64, policy: OverflowPolicy) -> Result<Self> {
        if width == 0 {
            return Err(Error::OutOfRange {
                what: "accumulator width",
                value: 0,
                range: ">= 1",
            });
        }
        Ok(Self {
            width,
            lsb_exp,
            sum_row: vec![0; width],
            carry_row: vec![0; width],
            overflow_count: BigUint::zero(),
            policy,
            steps: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn lsb_exp(&self) -> i64 {
        self.lsb_exp
    }

    pub fn sum_row(&self) -> &[u8] {
        &self.sum_row
    }

    pub fn carry_row(&self) -> &[u8] {
        &self.carry_row
    }

    pub fn overflow_count(&self) -> &BigUint {
        &self.overflow_count
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn check(&self, operand: &MultiRowCode, rows: usize) -> Result<()> {
        if operand.radix() != 2 {
            return Err(Error::RadixMismatch {
                left: 2,
                right: operand.radix(),
            });
        }
        if operand.lsb_exp() != self.lsb_exp {
            return Err(Error::ExponentMismatch {
                left: self.lsb_exp,
                right: operand.lsb_exp(),
            });
        }
        if operand.significant_width() > self.width {
            return Err(Error::WidthOverflow {
                needed: operand.significant_width(),
                width: self.width,
            });
        }
        if operand.rows() > rows {
            return Err(Error::Shape(format!(
                "operand has {} rows, step takes at most {rows}",
                operand.rows()
            )));
        }
        Ok(())
    }

    fn operand_row(operand: &MultiRowCode, row: usize, width: usize) -> Vec<u8> {
        (0..width)
            .map(|j| {
                if row < operand.rows() && j < operand.width() {
                    operand.digit(row, j)
                } else {
                    0
                }
            })
            .collect()
    }

    // One full-adder layer over three rows. Returns the new sum row, the
    // shifted carry row, and the carry out of the top column.
    fn layer(a: &[u8], b: &[u8], c: &[u8]) -> (Vec<u8>, Vec<u8>, u8) {
        let n = a.len();
        let mut sum = vec![0; n];
        let mut carry = vec![0; n];
        let mut out = 0;
        for j in 0..n {
            let (s, k) = full_adder(a[j], b[j], c[j]);
            sum[j] = s;
            if j + 1 < n {
                carry[j + 1] = k;
            } else {
                out = k;
            }
        }
        (sum, carry, out)
    }

    /// Absorbs a one-row operand with one full-adder layer.
    pub fn step(&self, operand: &MultiRowCode) -> Result<Self> {
        self.check(operand, 1)?;
        let x = Self::operand_row(operand, 0, self.width);
        let (sum, carry, out) = Self::layer(&x, &self.sum_row, &self.carry_row);
        let mut next = self.clone();
        next.sum_row = sum;
        next.carry_row = carry;
        next.overflow_count += u32::from(out);
        next.steps += 1;
        Ok(next)
    }

    /// Absorbs a two-row operand with two full-adder layers (4 -> 2).
    pub fn step2(&self, operand: &MultiRowCode) -> Result<Self> {
        self.check(operand, 2)?;
        let x = Self::operand_row(operand, 0, self.width);
        let y = Self::operand_row(operand, 1, self.width);
        let (s1, c1, top1) = Self::layer(&x, &y, &self.sum_row);
        let (s2, c2, top2) = Self::layer(&s1, &c1, &self.carry_row);
        let mut next = self.clone();
        next.sum_row = s2;
        next.carry_row = c2;
        // top1 is the extra sum-register bit, top2 the top carry; both carry
        // weight 2^(n+e).
        next.overflow_count += match self.policy {
            OverflowPolicy::Exact => u32::from(top1 + top2),
            OverflowPolicy::LiteralXor => u32::from(top1 ^ top2),
        };
        next.steps += 1;
        Ok(next)
    }

    /// Value held in the two registers, in units of `2^e`.
    pub fn register_mantissa(&self) -> BigUint {
        let row = |r: &[u8]| {
            r.iter()
                .rev()
                .fold(BigUint::zero(), |acc, &b| (acc << 1u32) + u32::from(b))
        };
        row(&self.sum_row) + row(&self.carry_row)
    }

    /// `overflow_count * 2^(n+e) + sum_row + carry_row`, exactly.
    pub fn total(&self) -> BigRational {
        let m = (&self.overflow_count << self.width) + self.register_mantissa();
        BigRational::from_integer(BigInt::from(m)) * weight(2, self.lsb_exp)
    }

    /// The two registers as a two-row code (sum row on top).
    pub fn registers(&self) -> MultiRowCode {
        MultiRowCode::from_rows_lsb(
            2,
            self.lsb_exp,
            &[self.sum_row.clone(), self.carry_row.clone()],
        )
        .expect("binary digits")
    }

    pub fn to_json(&self) -> AccumulatorJson {
        let msb = |r: &[u8]| r.iter().rev().map(|b| char::from(b'0' + b)).collect();
        AccumulatorJson {
            width: self.width,
            lsb_exp: self.lsb_exp,
            sum_row: msb(&self.sum_row),
            carry_row: msb(&self.carry_row),
            overflow_count: self.overflow_count.to_string(),
            steps: self.steps,
            total: self.total().to_string(),
        }
    }
}

/// Serialized accumulator state; rows are written most-significant bit first.
#[derive(Clone, Debug, Serialize)]
pub struct AccumulatorJson {
    pub width: usize,
    pub lsb_exp: i64,
    pub sum_row: String,
    pub carry_row: String,
    pub overflow_count: String,
    pub steps: u64,
    pub total: String,
}

pub fn acc_step(acc: &AccumulatorState, operand: &MultiRowCode) -> Result<AccumulatorState> {
    acc.step(operand)
}

pub fn acc_step2(acc: &AccumulatorState, operand: &MultiRowCode) -> Result<AccumulatorState> {
    acc.step2(operand)
}

pub fn acc_total(acc: &AccumulatorState) -> BigRational {
    acc.total()
}
