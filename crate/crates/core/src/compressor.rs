//! One-column adders built from trees of square lookup tables.
//!
//! A table of type `t` takes two partial counts, each at most `2^(t-1)`, and
//! emits their sum (at most `2^t`). It is a `(2^(t-1)+1) x (2^(t-1)+1)` grid of
//! two-input AND cells, one cell per pair of input values, so every table
//! costs one AND delay regardless of its size. An `m`-input adder therefore
//! takes `ceil(log2 m)` table levels plus the delay of the final encoder that
//! turns the one-hot table output into binary.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::golden;

/// Side length of a table of type `t` (1-based): 2, 3, 5, 9, 17, 33, ...
pub fn table_side(t: u32) -> u32 {
    (1u32 << (t - 1)) + 1
}

/// Number of table levels needed to count `m` inputs.
pub fn tree_levels(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// A planned table tree for an `m`-input one-column adder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OcaSpec {
    pub inputs: u32,
    pub levels: u32,
    /// `table_counts[t - 1]` is the number of tables of type `t`.
    pub table_counts: Vec<u32>,
    /// `table_dims[t - 1]` is the side length of a type-`t` table.
    pub table_dims: Vec<u32>,
}

impl OcaSpec {
    pub fn count(&self, t: u32) -> u32 {
        self.table_counts.get(t as usize - 1).copied().unwrap_or(0)
    }

    /// AND cells over all tables.
    pub fn table_cells(&self) -> u64 {
        self.table_counts
            .iter()
            .zip(&self.table_dims)
            .map(|(&n, &s)| u64::from(n) * u64::from(s) * u64::from(s))
            .sum()
    }
}

// Splits m into its largest power-of-two part and the remainder; the two
// partial counts meet in one table a level above the taller subtree.
fn plan_counts(m: u64, counts: &mut Vec<u32>) -> u32 {
    if m <= 1 {
        return 0;
    }
    if m.is_power_of_two() {
        let n = m.trailing_zeros();
        for t in 1..=n {
            bump(counts, t, (m >> t) as u32);
        }
        return n;
    }
    let p = 1u64 << (63 - m.leading_zeros());
    let left = plan_counts(p, counts);
    let right = plan_counts(m - p, counts);
    let t = left.max(right) + 1;
    bump(counts, t, 1);
    t
}

fn bump(counts: &mut Vec<u32>, t: u32, n: u32) {
    let idx = t as usize - 1;
    if counts.len() <= idx {
        counts.resize(idx + 1, 0);
    }
    counts[idx] += n;
}

/// Plans the table tree for `m` inputs, `2 <= m <= 128`.
pub fn plan_tree(m: u32) -> Result<OcaSpec> {
    if !(2..=128).contains(&m) {
        return Err(Error::OutOfRange {
            what: "one-column adder inputs",
            value: m.into(),
            range: "2..=128",
        });
    }
    let mut counts = Vec::new();
    let levels = plan_counts(m.into(), &mut counts);
    debug_assert_eq!(levels, tree_levels(m.into()));
    Ok(OcaSpec {
        inputs: m,
        levels,
        table_dims: (1..=levels).map(table_side).collect(),
        table_counts: counts,
    })
}

// Table of type `t`: both inputs must fit the table side.
fn table_lookup(t: u32, a: u64, b: u64) -> u64 {
    let half = 1u64 << (t - 1);
    assert!(
        a <= half && b <= half,
        "partial count exceeds table bound at level {t}: {a}, {b}"
    );
    a + b
}

fn tree_count(bits: &[u8]) -> (u64, u32) {
    match bits.len() {
        0 => (0, 0),
        1 => (u64::from(bits[0]), 0),
        n => {
            let p = if n.is_power_of_two() {
                n / 2
            } else {
                1 << (usize::BITS - 1 - n.leading_zeros())
            };
            let (a, la) = tree_count(&bits[..p]);
            let (b, lb) = tree_count(&bits[p..]);
            let t = la.max(lb) + 1;
            let s = table_lookup(t, a, b);
            debug_assert!(s <= 1u64 << t);
            (s, t)
        }
    }
}

/// Counts the ones in `bits` by simulating the table tree.
pub fn popcount_tree(bits: &[u8]) -> Result<u64> {
    if bits.len() > 1 << 30 {
        return Err(Error::OutOfRange {
            what: "popcount inputs",
            value: bits.len() as i128,
            range: "0..=2^30",
        });
    }
    if let Some((i, &d)) = bits.iter().enumerate().find(|(_, &d)| d > 1) {
        return Err(Error::DigitOutOfRange {
            row: i,
            col: 0,
            digit: d.into(),
            max: 1,
        });
    }
    Ok(tree_count(bits).0)
}

/// Full adder as a three-input one-column adder: `(sum, carry)`.
pub fn full_adder(a: u8, b: u8, c: u8) -> (u8, u8) {
    let (n, _) = tree_count(&[a, b, c]);
    ((n & 1) as u8, (n >> 1) as u8)
}

/// Delay parameters, in units of one two-input AND delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DelayModel {
    pub t_and: u32,
    /// Encoder delay charged per adder stage.
    pub t_cc_per_stage: u32,
    /// Levels charged for a terminal three-row stage.
    pub final_3to2_levels: u32,
    /// Aggregate encoder delay for a whole multi-stage reduction.
    pub t_cc_total: u32,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            t_and: 1,
            t_cc_per_stage: 1,
            final_3to2_levels: 1,
            t_cc_total: 3,
        }
    }
}

/// AND levels of an `m`-input adder from the banded delay table. Inputs above
/// the last band extend it with `ceil(log2 m)`.
pub fn band_levels(m: u32) -> u32 {
    const BANDS: [(u32, u32, u32); 6] = [
        (3, 4, 2),
        (5, 7, 3),
        (8, 16, 4),
        (17, 32, 5),
        (33, 64, 6),
        (65, 128, 7),
    ];
    BANDS
        .iter()
        .find(|(lo, hi, _)| (*lo..=*hi).contains(&m))
        .map(|b| b.2)
        .unwrap_or_else(|| tree_levels(m.into()))
}

/// Delay of an `m`-input adder: `levels * t_and + t_cc`, `3 <= m <= 128`.
pub fn oca_delay(m: u32, model: &DelayModel) -> Result<u32> {
    if !(3..=128).contains(&m) {
        return Err(Error::OutOfRange {
            what: "one-column adder inputs",
            value: m.into(),
            range: "3..=128",
        });
    }
    Ok(band_levels(m) * model.t_and + model.t_cc_per_stage)
}

/// AND-gate count from the reference table, verbatim.
pub fn oca_cost_lookup(m: u32) -> Result<u32> {
    golden::cost_columns()
        .iter()
        .find(|c| c.m == m)
        .map(|c| c.sigma_and)
        .ok_or(Error::Untabulated(m))
}

/// Gates in the encoder that turns the one-hot count `0..=m` into binary:
/// each output bit ORs together the lines that set it, costing one gate fewer
/// than the number of lines.
pub fn encoder_cost(m: u32) -> u64 {
    let bits = 32 - m.leading_zeros();
    (0..bits)
        .map(|b| {
            let lines = (1..=m).filter(|v| v >> b & 1 == 1).count() as u64;
            lines.saturating_sub(1)
        })
        .sum()
}

/// Structural estimate: table cells over the planned tree plus the encoder.
/// This is a model, not the reference number.
pub fn oca_cost_structural(m: u32) -> Result<u64> {
    let tree = plan_tree(m)?;
    Ok(tree.table_cells() + encoder_cost(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(bits: &[u8]) -> u64 {
        bits.iter().map(|&b| u64::from(b)).sum()
    }

    #[test]
    fn popcount_examples() {
        assert_eq!(popcount_tree(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(popcount_tree(&[1; 64]).unwrap(), 64);
        assert_eq!(popcount_tree(&[]).unwrap(), 0);
        assert!(matches!(
            popcount_tree(&[0, 2]),
            Err(Error::DigitOutOfRange { row: 1, .. })
        ));
    }

    #[test]
    fn popcount_exhaustive_up_to_16() {
        for m in 1..=16usize {
            for pattern in 0u32..(1 << m) {
                let bits: Vec<u8> = (0..m).map(|i| (pattern >> i & 1) as u8).collect();
                assert_eq!(popcount_tree(&bits).unwrap(), naive(&bits), "m={m}");
            }
        }
    }

    #[test]
    fn full_adder_truth_table() {
        for v in 0..8u8 {
            let (a, b, c) = (v & 1, v >> 1 & 1, v >> 2 & 1);
            let (s, k) = full_adder(a, b, c);
            assert_eq!(s + 2 * k, a + b + c);
        }
    }

    #[test]
    fn plan_64() {
        let s = plan_tree(64).unwrap();
        assert_eq!(s.levels, 6);
        assert_eq!(s.table_dims, vec![2, 3, 5, 9, 17, 33]);
        assert_eq!(s.table_counts, vec![32, 16, 8, 4, 2, 1]);
    }

    #[test]
    fn plan_small_and_24() {
        let s = plan_tree(2).unwrap();
        assert_eq!((s.levels, s.table_counts.clone()), (1, vec![1]));
        let s = plan_tree(24).unwrap();
        assert_eq!(s.table_counts, vec![12, 6, 3, 1, 1]);
        assert!(plan_tree(1).is_err());
        assert!(plan_tree(129).is_err());
    }

    #[test]
    fn plan_power_of_two_counts() {
        for n in 1..=7u32 {
            let s = plan_tree(1 << n).unwrap();
            for t in 1..=n {
                assert_eq!(s.count(t), 1 << (n - t));
            }
        }
    }

    #[test]
    fn delay_examples() {
        let m = DelayModel::default();
        assert_eq!(oca_delay(3, &m).unwrap(), 3);
        assert_eq!(oca_delay(64, &m).unwrap(), 7);
        assert_eq!(oca_delay(128, &m).unwrap(), 8);
        assert!(oca_delay(2, &m).is_err());
        assert!(oca_delay(129, &m).is_err());
    }

    #[test]
    fn delay_is_monotone_step() {
        let m = DelayModel::default();
        let ds: Vec<u32> = (3..=128).map(|k| oca_delay(k, &m).unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cost_lookup_examples() {
        assert_eq!(oca_cost_lookup(3).unwrap(), 10);
        assert_eq!(oca_cost_lookup(32).unwrap(), 687);
        assert_eq!(oca_cost_lookup(64).unwrap(), 2463);
        assert_eq!(oca_cost_lookup(5), Err(Error::Untabulated(5)));
    }

    #[test]
    fn structural_cost_small() {
        // m = 2: one 2x2 table, encoder over 0..=2 needs no gates.
        assert_eq!(encoder_cost(2), 0);
        assert_eq!(oca_cost_structural(2).unwrap(), 4);
        // m = 4: two 2x2 tables and one 3x3 table, by enumeration.
        assert_eq!(oca_cost_structural(4).unwrap(), 2 * 4 + 9 + encoder_cost(4));
        assert_eq!(encoder_cost(4), 2);
    }
}
