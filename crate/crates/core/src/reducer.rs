//! Reduction of multi-row codes to two rows.
//!
//! One reduction stage replaces every column by the radix-`q` digits of its
//! digit sum. With `m` rows a column sum is at most `m(q-1)`, which needs
//! `ceil(log_q(1 + m(q-1)))` digits; that count is the row count of the next
//! stage. Digit `h` of the sum of column `j` lands in row `h`, column `j + h`,
//! so the stage output is a trapezoid `n + m' - 1` columns wide.

use serde::Serialize;

use crate::codes::{MultiRowCode, QuadSignedCode};
use crate::compressor::{band_levels, tree_levels, DelayModel};
use crate::error::{Error, Result};

/// Digits needed for a column of `m` radix-`q` digits: the smallest `k` with
/// `q^k >= 1 + m(q-1)`. Integer arithmetic only.
pub fn next_row_count(m: u64, q: u32) -> u64 {
    let q = u128::from(q);
    let target = 1 + u128::from(m) * (q - 1);
    let mut k = 0;
    let mut p: u128 = 1;
    while p < target {
        p *= q;
        k += 1;
    }
    k
}

/// The sequence of row counts a reduction walks through, ending at 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StagePlan {
    pub row_counts: Vec<u64>,
    pub stages: u32,
    pub radix: u32,
}

impl StagePlan {
    pub fn initial_rows(&self) -> u64 {
        self.row_counts[0]
    }
}

/// Iterates [`next_row_count`] from `m` down to two rows. Codes of one or two
/// rows need no stages.
pub fn stage_plan(m: u64, q: u32) -> StagePlan {
    let mut row_counts = vec![m];
    let mut cur = m;
    while cur > 2 {
        cur = next_row_count(cur, q);
        row_counts.push(cur);
    }
    StagePlan {
        stages: row_counts.len() as u32 - 1,
        row_counts,
        radix: q,
    }
}

// Writes the radix-q digits of `sum` diagonally starting at (row 0, col).
fn place_diagonal(out: &mut [u8], rows: usize, col: usize, mut sum: u64, q: u64) {
    let mut h = 0;
    while sum > 0 {
        debug_assert!(h < rows, "column sum needs more than {rows} digits");
        out[(col + h) * rows + h] = (sum % q) as u8;
        sum /= q;
        h += 1;
    }
}

/// One reduction stage. The result has `next_row_count(m, q)` rows and is
/// `m' - 1` columns wider than the input; the value is unchanged.
pub fn reduce_once(code: &MultiRowCode) -> MultiRowCode {
    let q = code.radix();
    let rows = next_row_count(code.rows() as u64, q) as usize;
    let width = if code.width() == 0 {
        0
    } else {
        code.width() + rows.saturating_sub(1)
    };
    let mut digits = vec![0u8; rows * width];
    for j in 0..code.width() {
        place_diagonal(&mut digits, rows, j, code.column_sum(j), q.into());
    }
    MultiRowCode::from_raw(rows, width, q, code.lsb_exp(), digits)
}

/// Reduces to exactly two rows. A one-row code gains a zero row.
pub fn reduce_to_two(code: &MultiRowCode) -> MultiRowCode {
    reduce_to_two_traced(code).0
}

/// Like [`reduce_to_two`], also returning every intermediate stage output.
pub fn reduce_to_two_traced(code: &MultiRowCode) -> (MultiRowCode, Vec<MultiRowCode>) {
    let mut cur = code.pad_rows(2);
    let mut trace = Vec::new();
    while cur.rows() > 2 {
        cur = reduce_once(&cur);
        trace.push(cur.clone());
    }
    (cur, trace)
}

fn check_pair(a: &MultiRowCode, b: &MultiRowCode) -> Result<()> {
    if a.radix() != b.radix() {
        return Err(Error::RadixMismatch {
            left: a.radix(),
            right: b.radix(),
        });
    }
    if a.lsb_exp() != b.lsb_exp() {
        return Err(Error::ExponentMismatch {
            left: a.lsb_exp(),
            right: b.lsb_exp(),
        });
    }
    if a.rows() > 2 || b.rows() > 2 {
        return Err(Error::Shape("operands must be two-row codes".into()));
    }
    Ok(())
}

/// Sum of two two-row codes by a 4 -> 2 reduction. The result is at most two
/// columns wider than the wider operand.
pub fn add_two_row(a: &MultiRowCode, b: &MultiRowCode) -> Result<MultiRowCode> {
    check_pair(a, b)?;
    let n = a.width().max(b.width());
    let stacked = MultiRowCode::stack(&[&a.pad_rows(2), &b.pad_rows(2)])?;
    let s = reduce_to_two(&stacked);
    // Columns above n + 2 only receive high digits of the short flank
    // columns, whose sums are too small to produce them.
    Ok(s.resize_width(n + 2)
        .expect("4 -> 2 reduction fits in n + 2 columns"))
}

fn check_quads(a: &QuadSignedCode, b: &QuadSignedCode) -> Result<()> {
    if a.lsb_exp() != b.lsb_exp() {
        return Err(Error::ExponentMismatch {
            left: a.lsb_exp(),
            right: b.lsb_exp(),
        });
    }
    Ok(())
}

/// Adds positive parts to positive parts and negative to negative.
pub fn quad_add(a: &QuadSignedCode, b: &QuadSignedCode) -> Result<QuadSignedCode> {
    check_quads(a, b)?;
    QuadSignedCode::new(
        add_two_row(a.pos(), b.pos())?,
        add_two_row(a.neg(), b.neg())?,
    )
}

/// `a - b` as `a + (-b)`: the subtrahend's parts are swapped first.
pub fn quad_sub(a: &QuadSignedCode, b: &QuadSignedCode) -> Result<QuadSignedCode> {
    quad_add(a, &b.negate())
}

/// Shape of the trapezoid produced by one reduction stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrapezoidGeometry {
    pub n_max: usize,
    /// Length of the bottom row once digits are packed to the top of their
    /// columns.
    pub n_min: usize,
    /// Starting column of each row as placed by the diagonal construction.
    pub row_offsets: Vec<usize>,
    /// Occupied cells per row as placed by the diagonal construction.
    pub row_lengths: Vec<usize>,
    /// Occupied cells per row after packing digits to the top.
    pub packed_row_lengths: Vec<usize>,
    pub column_heights: Vec<usize>,
    /// `n1 < m2`: the flanks overlap and no column reaches full height.
    pub degenerate: bool,
}

/// Measures the trapezoid that `reduce_once` builds from an `n1`-column code
/// whose column sums need `m2` digits. The geometry is read off a constructed
/// matrix in which every placed digit is non-zero.
pub fn trapezoid_geometry(n1: usize, m2: usize, q: u32) -> Result<TrapezoidGeometry> {
    if m2 < 2 {
        return Err(Error::OutOfRange {
            what: "m2",
            value: m2 as i128,
            range: ">= 2",
        });
    }
    let n_max = n1 + m2 - 1;
    let mut code = MultiRowCode::zeros(m2, n_max, q, 0)?;
    let top = (q - 1) as u8;
    for j in 0..n1 {
        for h in 0..m2 {
            code.set_digit(h, j + h, top)?;
        }
    }
    let row_offsets = (0..m2)
        .map(|i| (0..n_max).find(|&j| code.digit(i, j) != 0).unwrap_or(0))
        .collect();
    let row_lengths = (0..m2)
        .map(|i| (0..n_max).filter(|&j| code.digit(i, j) != 0).count())
        .collect();
    let column_heights = code.column_heights();
    let packed = code.canonical();
    let packed_row_lengths: Vec<usize> = (0..m2)
        .map(|i| (0..n_max).filter(|&j| packed.digit(i, j) != 0).count())
        .collect();
    Ok(TrapezoidGeometry {
        n_max,
        n_min: *packed_row_lengths.last().unwrap(),
        row_offsets,
        row_lengths,
        packed_row_lengths,
        column_heights,
        degenerate: n1 < m2,
    })
}

/// How per-stage delays are charged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum DelayAccounting {
    /// `ceil(log2 m)` AND levels for every stage with more than three rows,
    /// `final_3to2_levels` for a terminal three-row stage, and one aggregate
    /// encoder term `t_cc_total` for the whole reduction.
    #[default]
    Aggregate,
    /// Every stage costs its banded adder delay `levels * t_and + t_cc`.
    PerBand,
}

/// Delay of one stage starting from `m` rows.
pub fn stage_delay(m: u64, model: &DelayModel, accounting: DelayAccounting) -> u32 {
    match accounting {
        DelayAccounting::Aggregate if m <= 3 => model.final_3to2_levels * model.t_and,
        DelayAccounting::Aggregate => tree_levels(m) * model.t_and,
        DelayAccounting::PerBand => {
            band_levels(m.min(u32::MAX.into()) as u32) * model.t_and + model.t_cc_per_stage
        }
    }
}

/// Total reduction delay for a plan under the aggregate accounting.
pub fn reduce_delay(plan: &StagePlan, model: &DelayModel) -> u32 {
    reduce_delay_with(plan, model, DelayAccounting::Aggregate)
}

pub fn reduce_delay_with(plan: &StagePlan, model: &DelayModel, accounting: DelayAccounting) -> u32 {
    if plan.stages == 0 {
        return 0;
    }
    let stages: u32 = plan.row_counts[..plan.stages as usize]
        .iter()
        .map(|&m| stage_delay(m, model, accounting))
        .sum();
    match accounting {
        DelayAccounting::Aggregate => stages + model.t_cc_total,
        DelayAccounting::PerBand => stages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn code(v: u128, rows: usize, width: usize) -> MultiRowCode {
        MultiRowCode::from_u128(v, rows, width, 2).unwrap()
    }

    #[test]
    fn next_row_count_examples() {
        assert_eq!(next_row_count(63, 2), 6);
        assert_eq!(next_row_count(2, 2), 2);
        assert_eq!(next_row_count(127, 2), 7);
        assert_eq!(next_row_count(128, 2), 8);
        assert_eq!(next_row_count(3, 10), 2);
        assert_eq!(next_row_count(12, 10), 3);
    }

    #[test]
    fn stage_plan_examples() {
        assert_eq!(stage_plan(3, 2).row_counts, vec![3, 2]);
        assert_eq!(stage_plan(3, 2).stages, 1);
        let p = stage_plan(64, 2);
        assert_eq!((p.row_counts.clone(), p.stages), (vec![64, 7, 3, 2], 3));
        assert_eq!(stage_plan(7, 2).row_counts, vec![7, 3, 2]);
        assert_eq!(stage_plan(2, 2).stages, 0);
    }

    #[test]
    fn reduce_once_zero() {
        let z = MultiRowCode::zeros(3, 5, 2, 0).unwrap();
        let r = reduce_once(&z);
        assert_eq!(r.rows(), 2);
        assert!(r.is_zero());
    }

    #[test]
    fn four_row_sum_matches_three_row_layout() {
        // Two stacked two-row operands give a three-row matrix with digit h
        // of column i's sum at column i + h.
        let a = MultiRowCode::from_rows_lsb(2, 0, &[vec![1, 1, 1], vec![1, 0, 1]]).unwrap();
        let b = MultiRowCode::from_rows_lsb(2, 0, &[vec![1, 1, 0], vec![1, 1, 1]]).unwrap();
        let s = MultiRowCode::stack(&[&a, &b]).unwrap();
        let c = reduce_once(&s);
        assert_eq!((c.rows(), c.width()), (3, 5));
        // Column sums 4, 3, 3 -> digits 100, 011, 011.
        assert_eq!(c.row_lsb(0), vec![0, 1, 1, 0, 0]);
        assert_eq!(c.row_lsb(1), vec![0, 0, 1, 1, 0]);
        assert_eq!(c.row_lsb(2), vec![0, 0, 1, 0, 0]);
        assert_eq!(c.value(), s.value());
    }

    #[test]
    fn reduce_to_two_small() {
        let one = code(9, 1, 4);
        let r = reduce_to_two(&one);
        assert_eq!((r.rows(), r.value()), (2, one.value()));

        let a = code(13, 2, 4);
        let b = code(6, 2, 4);
        let s = MultiRowCode::stack(&[&a, &b]).unwrap();
        let (r, trace) = reduce_to_two_traced(&s);
        assert_eq!(r.rows(), 2);
        assert_eq!(r.mantissa(), BigUint::from(19u32));
        assert_eq!(trace.len() as u32, stage_plan(4, 2).stages);
    }

    #[test]
    fn add_examples() {
        let z = add_two_row(&code(0, 2, 4), &code(0, 2, 4)).unwrap();
        assert!(z.is_zero());
        let s = add_two_row(&code(5, 2, 3), &code(3, 2, 3)).unwrap();
        assert_eq!(s.mantissa(), BigUint::from(8u32));
        assert!(s.width() <= 5);
        let e = add_two_row(&code(1, 2, 3), &code(1, 2, 3).align_to(-1).unwrap());
        assert!(matches!(e, Err(Error::ExponentMismatch { .. })));
    }

    #[test]
    fn quad_examples() {
        let q = |v: i64| {
            QuadSignedCode::from_value(&num_rational::BigRational::from_integer(v.into()), 8, 2, 0)
                .unwrap()
        };
        let r = quad_add(&q(5), &q(-3)).unwrap();
        assert_eq!(r.value(), q(2).value());
        let a = q(-77);
        let d = quad_sub(&a, &a).unwrap();
        assert_eq!(d.value(), q(0).value());
        assert_eq!(d.pos().value(), d.neg().value());
    }

    #[test]
    fn trapezoid_examples() {
        let g = trapezoid_geometry(8, 3, 2).unwrap();
        assert_eq!(g.n_max, 10);
        assert_eq!(g.n_min, 6);
        let g = trapezoid_geometry(2, 2, 2).unwrap();
        assert_eq!(g.n_max, 3);
        assert_eq!(g.column_heights, vec![1, 2, 1]);
        let g = trapezoid_geometry(2, 4, 2).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.column_heights, vec![1, 2, 2, 2, 1]);
    }

    #[test]
    fn trapezoid_matches_reduction_of_full_matrix() {
        // 63 rows of ones reduce to six rows with every digit set.
        let full = MultiRowCode::from_rows_lsb(2, 0, &vec![vec![1u8; 40]; 63]).unwrap();
        let r = reduce_once(&full);
        let g = trapezoid_geometry(40, 6, 2).unwrap();
        assert_eq!(r.column_heights(), g.column_heights);
        assert_eq!(r.width(), g.n_max);
        let mut expected = vec![6; 45];
        for k in 0..5 {
            expected[k] = k + 1;
            expected[44 - k] = k + 1;
        }
        assert_eq!(g.column_heights, expected);
    }

    #[test]
    fn delay_examples() {
        let m = DelayModel::default();
        let p = StagePlan {
            row_counts: vec![63, 6, 3, 2],
            stages: 3,
            radix: 2,
        };
        assert_eq!(p, stage_plan(63, 2));
        assert_eq!(reduce_delay(&p, &m), 13);
        assert_eq!(reduce_delay(&stage_plan(3, 2), &m), 4);
        assert_eq!(reduce_delay(&stage_plan(2, 2), &m), 0);
        // Banded accounting charges 7 + 4 + 3.
        assert_eq!(reduce_delay_with(&p, &m, DelayAccounting::PerBand), 14);
    }
}
