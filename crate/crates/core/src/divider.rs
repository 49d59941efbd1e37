//! Division by comparison against a digital scale of divisor multiples.
//!
//! Each iteration produces `k` radix-`q` quotient digits at once: the residual
//! is compared with all `q^k` multiples `d*z` of the divisor, the comparison
//! results form a unitary (thermometer) code, and the position of its last
//! one is the digit. The remaining residual is shifted `k` digits left for the
//! next iteration.
//!
//! Operands are scaled integers sharing one scale, so the quotient is exact.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::codes::{radix_pow, MultiRowCode};
use crate::error::{Error, Result};

const MAX_ENTRIES: u64 = 1 << 20;

/// `entries[d] = d * z` for `d` in `0..q^k` (or `0..q^(k+1)` when extended).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleTable {
    pub k: u32,
    pub radix: u32,
    pub divisor: BigUint,
    pub entries: Vec<BigUint>,
}

impl ScaleTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry `d` as a multi-row code: one copy of `z` shifted `i` digits for
    /// each unit of digit `i` of `d`. For `q = 2` these are the shifted
    /// copies selected by the bits of `d`.
    pub fn entry_code(&self, d: usize) -> Result<MultiRowCode> {
        let q = self.radix;
        let zl = crate::codes::digit_len(&self.divisor, q).max(1);
        let digits_d = {
            let mut v = Vec::new();
            let mut x = d as u64;
            while x > 0 {
                v.push((x % u64::from(q)) as usize);
                x /= u64::from(q);
            }
            v
        };
        let width = zl + digits_d.len().max(1);
        let mut parts = Vec::new();
        for (i, &c) in digits_d.iter().enumerate() {
            let shifted = &self.divisor * radix_pow(q, i as u64);
            for _ in 0..c {
                parts.push(MultiRowCode::from_mantissa(&shifted, 1, width, q, 0)?);
            }
        }
        if parts.is_empty() {
            return MultiRowCode::zeros(1, width, q, 0);
        }
        let refs: Vec<&MultiRowCode> = parts.iter().collect();
        MultiRowCode::stack(&refs)
    }
}

fn scale_with(z: &BigUint, k: u32, q: u32, count: u64) -> Result<ScaleTable> {
    if z.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if !(2..=256).contains(&q) {
        return Err(Error::InvalidRadix(q));
    }
    let mut entries = Vec::with_capacity(count as usize);
    let mut acc = BigUint::zero();
    for _ in 0..count {
        entries.push(acc.clone());
        acc += z;
    }
    Ok(ScaleTable {
        k,
        radix: q,
        divisor: z.clone(),
        entries,
    })
}

fn scale_count(k: u32, q: u32) -> Result<u64> {
    let count = radix_pow(q, k.into());
    match count.to_u64() {
        Some(c) if k >= 1 && c <= MAX_ENTRIES => Ok(c),
        _ => Err(Error::OutOfRange {
            what: "digits per iteration",
            value: k.into(),
            range: "k >= 1 and q^k <= 2^20",
        }),
    }
}

pub fn build_scale(z: &BigUint, k: u32, q: u32) -> Result<ScaleTable> {
    let count = scale_count(k, q)?;
    scale_with(z, k, q, count)
}

/// The first-iteration scale, `q^(k+1)` entries.
pub fn build_extended_scale(z: &BigUint, k: u32, q: u32) -> Result<ScaleTable> {
    let count = scale_count(k, q)? * u64::from(q);
    scale_with(z, k, q, count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum Comparator {
    /// Every entry compared at once through the sign of a complement-code sum.
    #[default]
    Parallel,
    /// Binary search over the sorted entries.
    BinarySearch,
}

/// One digit selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    pub digit: u64,
    pub residual: BigUint,
    /// `unitary[d]` is set when `entries[d] <= r`; empty for binary search.
    pub unitary: Vec<u8>,
}

/// `entry <= r`, decided by the sign bit of `entry + !r + 1` on a binary grid
/// one bit wider than both operands.
pub fn complement_not_above(entry: &BigUint, r: &BigUint) -> bool {
    let bits = entry.bits().max(r.bits()) + 1;
    let mask = (BigUint::from(1u32) << bits) - 1u32;
    let not_r = &mask ^ r;
    let diff = (entry + not_r + 1u32) & &mask;
    let negative = diff.bit(bits - 1);
    negative || diff.is_zero()
}

pub fn select_digit(r: &BigUint, scale: &ScaleTable, comparator: Comparator) -> Result<Selection> {
    let limit = &scale.divisor * scale.len();
    if r >= &limit {
        return Err(Error::ResidualOutOfRange(format!(
            "residual {r} not below {} * {}",
            scale.len(),
            scale.divisor
        )));
    }
    let (digit, unitary) = match comparator {
        Comparator::Parallel => {
            let unitary: Vec<u8> = scale
                .entries
                .iter()
                .map(|e| {
                    let bit = complement_not_above(e, r);
                    debug_assert_eq!(bit, e <= r);
                    u8::from(bit)
                })
                .collect();
            let ones = unitary.iter().filter(|&&b| b == 1).count();
            debug_assert!(unitary[..ones].iter().all(|&b| b == 1));
            ((ones - 1) as u64, unitary)
        }
        Comparator::BinarySearch => {
            let p = scale.entries.partition_point(|e| e <= r);
            ((p - 1) as u64, Vec::new())
        }
    };
    let residual = r - &scale.entries[digit as usize];
    debug_assert!(residual < scale.divisor);
    Ok(Selection {
        digit,
        residual,
        unitary,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisionStep {
    pub iteration: usize,
    pub residual_in: String,
    pub digit: u64,
    pub residual_out: String,
    /// Unitary selection code, entry 0 first.
    pub unitary: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionResult {
    pub k: u32,
    pub radix: u32,
    pub digits: Vec<u64>,
    /// Final residual `Δ`, `0 <= Δ < z`, in the operands' scale.
    pub residual: BigUint,
    pub trace: Vec<DivisionStep>,
}

impl DivisionResult {
    /// `Q = Σ digit_j * q^(-k*j)`.
    pub fn quotient(&self) -> BigRational {
        let base = BigRational::from_integer(radix_pow(self.radix, self.k.into()).into());
        let mut scale = BigRational::from_integer(1.into());
        let mut q = BigRational::zero();
        for &d in &self.digits {
            scale /= &base;
            q += &scale * BigRational::from_integer(d.into());
        }
        q
    }

    /// `Δ * q^(-k*m)`, the part of `x` not covered by `z * Q`.
    pub fn residual_weight(&self) -> BigRational {
        let shift = radix_pow(self.radix, u64::from(self.k) * self.digits.len() as u64);
        BigRational::new(self.residual.clone().into(), shift.into())
    }
}

/// Divides `x` by `z` (scaled integers with a common scale) producing `iters`
/// groups of `k` radix-`q` digits. Requires `x < q*z`; the first group may
/// therefore hold one extra digit.
pub fn divide(
    x: &BigUint,
    z: &BigUint,
    k: u32,
    iters: usize,
    q: u32,
    comparator: Comparator,
) -> Result<DivisionResult> {
    if z.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if x >= &(z * q) {
        return Err(Error::Unnormalized);
    }
    let shift = radix_pow(q, k.into());
    let first = build_extended_scale(z, k, q)?;
    let later = build_scale(z, k, q)?;
    let mut r = x * &shift;
    let mut digits = Vec::with_capacity(iters);
    let mut trace = Vec::with_capacity(iters);
    let mut residual = x.clone();
    for j in 0..iters {
        let scale = if j == 0 { &first } else { &later };
        let sel = select_digit(&r, scale, comparator)?;
        if sel.residual >= *z {
            return Err(Error::ResidualOutOfRange(sel.residual.to_string()));
        }
        trace.push(DivisionStep {
            iteration: j + 1,
            residual_in: r.to_string(),
            digit: sel.digit,
            residual_out: sel.residual.to_string(),
            unitary: sel.unitary.iter().map(|&b| char::from(b'0' + b)).collect(),
        });
        digits.push(sel.digit);
        r = &sel.residual * &shift;
        residual = sel.residual;
    }
    Ok(DivisionResult {
        k,
        radix: q,
        digits,
        residual,
        trace,
    })
}

/// Brings two non-negative rationals to integers over a common denominator,
/// so that `x / z` is unchanged.
pub fn common_scale(x: &BigRational, z: &BigRational) -> Result<(BigUint, BigUint)> {
    let l = x.denom().lcm(z.denom());
    let lift = |v: &BigRational| {
        (v.numer() * (&l / v.denom()))
            .to_biguint()
            .ok_or(Error::NegativeValue)
    };
    Ok((lift(x)?, lift(z)?))
}

/// Restoring division reference: `iters*k` digits of `x/z` in radix `q`.
pub fn long_division_digits(x: &BigUint, z: &BigUint, k: u32, iters: usize, q: u32) -> Vec<u64> {
    let shift = radix_pow(q, k.into());
    let mut r = x.clone();
    (0..iters)
        .map(|_| {
            r *= &shift;
            let (d, rem) = r.div_rem(z);
            r = rem;
            d.to_u64().expect("digit fits")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn scale_examples() {
        let s = build_scale(&b(1), 2, 2).unwrap();
        assert_eq!(s.entries, vec![b(0), b(1), b(2), b(3)]);
        assert!(matches!(
            build_scale(&b(0), 2, 2),
            Err(Error::DivisionByZero)
        ));
        assert!(build_scale(&b(1), 21, 2).is_err());
        assert!(build_scale(&b(1), 0, 2).is_err());
    }

    #[test]
    fn scale_entry_15_is_four_copies() {
        let z = b(0b1011);
        let s = build_scale(&z, 4, 2).unwrap();
        let code = s.entry_code(15).unwrap();
        assert_eq!(code.rows(), 4);
        assert_eq!(code.mantissa(), &z * 15u32);
        for i in 0..4 {
            assert_eq!(code.row_lsb(i)[i..i + 4], [1, 1, 0, 1]);
        }
        for d in 0..16 {
            assert_eq!(s.entry_code(d).unwrap().mantissa(), s.entries[d]);
        }
    }

    #[test]
    fn scale_steps_by_divisor() {
        for z in [1u64, 7, 200, 12345] {
            let s = build_scale(&b(z), 3, 3).unwrap();
            assert!(s.entries.windows(2).all(|w| &w[1] - &w[0] == b(z)));
        }
    }

    #[test]
    fn select_examples() {
        let s = build_scale(&b(3), 2, 2).unwrap();
        for c in [Comparator::Parallel, Comparator::BinarySearch] {
            let sel = select_digit(&b(0), &s, c).unwrap();
            assert_eq!((sel.digit, sel.residual.clone()), (0, b(0)));
            let sel = select_digit(&b(8), &s, c).unwrap();
            assert_eq!((sel.digit, sel.residual.clone()), (2, b(2)));
        }
        assert_eq!(
            select_digit(&b(8), &s, Comparator::Parallel)
                .unwrap()
                .unitary,
            vec![1, 1, 1, 0]
        );
        assert!(matches!(
            select_digit(&b(12), &s, Comparator::Parallel),
            Err(Error::ResidualOutOfRange(_))
        ));
    }

    #[test]
    fn select_boundaries() {
        let s = build_scale(&b(5), 3, 2).unwrap();
        for d in 1..8u64 {
            let r = b(5 * d);
            assert_eq!(select_digit(&r, &s, Comparator::Parallel).unwrap().digit, d);
            let below = b(5 * d - 1);
            assert_eq!(
                select_digit(&below, &s, Comparator::Parallel)
                    .unwrap()
                    .digit,
                d - 1
            );
        }
    }

    #[test]
    fn complement_comparison_agrees() {
        for e in 0u64..64 {
            for r in 0u64..64 {
                assert_eq!(complement_not_above(&b(e), &b(r)), e <= r);
            }
        }
    }

    #[test]
    fn five_sevenths_base_16() {
        let (x, z) = (b(5 << 5), b(7 << 5));
        let res = divide(&x, &z, 4, 4, 2, Comparator::Parallel).unwrap();
        // 5/7 = 0.B6DB6DB... in base 16.
        assert_eq!(res.digits, vec![0xB, 0x6, 0xD, 0xB]);
        let xr = BigRational::from_integer(x.into());
        let zr = BigRational::from_integer(z.clone().into());
        assert_eq!(xr, zr * res.quotient() + res.residual_weight());
    }

    #[test]
    fn trivial_quotients() {
        let res = divide(&b(0), &b(9), 2, 3, 2, Comparator::Parallel).unwrap();
        assert_eq!(res.digits, vec![0, 0, 0]);
        let res = divide(&b(9), &b(9), 2, 3, 2, Comparator::Parallel).unwrap();
        assert_eq!(res.digits, vec![4, 0, 0]);
        assert_eq!(res.quotient(), BigRational::from_integer(1.into()));
        assert!(res.residual.is_zero());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            divide(&b(1), &b(0), 1, 1, 2, Comparator::Parallel),
            Err(Error::DivisionByZero)
        ));
        assert!(matches!(
            divide(&b(18), &b(9), 1, 1, 2, Comparator::Parallel),
            Err(Error::Unnormalized)
        ));
    }

    #[test]
    fn exhaustive_six_bit_identity() {
        for k in [1u32, 2, 4] {
            for z in 32u64..64 {
                for x in 0u64..64 {
                    let p = divide(&b(x), &b(z), k, 3, 2, Comparator::Parallel).unwrap();
                    let s = divide(&b(x), &b(z), k, 3, 2, Comparator::BinarySearch).unwrap();
                    assert_eq!(p.digits, s.digits);
                    let lhs = BigRational::from_integer(x.into());
                    let rhs =
                        BigRational::from_integer(z.into()) * p.quotient() + p.residual_weight();
                    assert_eq!(lhs, rhs, "x={x} z={z} k={k}");
                    assert!(p.residual < b(z));
                }
            }
        }
    }

    #[test]
    fn k1_is_restoring_division() {
        for z in 16u64..32 {
            for x in 0..32 {
                let res = divide(&b(x), &b(z), 1, 8, 2, Comparator::Parallel).unwrap();
                assert_eq!(res.digits, long_division_digits(&b(x), &b(z), 1, 8, 2));
            }
        }
    }

    #[test]
    fn common_scale_keeps_ratio() {
        let x = BigRational::new(5.into(), 8.into());
        let z = BigRational::new(3.into(), 4.into());
        assert_eq!(common_scale(&x, &z).unwrap(), (b(5), b(6)));
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(common_scale(&third, &z).unwrap(), (b(4), b(9)));
        assert!(common_scale(&-third, &z).is_err());
    }
}
