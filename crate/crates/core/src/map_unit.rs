//! Matrix arithmetic processor: one product term plus up to six additive
//! operands, reduced together in a single multi-row pass.
//!
//! The result lives on a `2n - 1` column grid as a two-row code. Anything the
//! reduction produces above the grid is moved into an overflow counter, so
//! `total = overflow_count * 2^(grid + e) + value(f) + bias * 2^e`. In
//! accumulate mode the two rows of `f` are fed back in place of `H` and `L`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::codes::{weight, CodeJson, MultiRowCode};
use crate::compressor::{band_levels, oca_cost_structural, DelayModel};
use crate::error::{Error, Result};
use crate::golden;
use crate::multiplier::{pp_matrix, Signedness};
use crate::reducer::{reduce_to_two_traced, stage_plan};

pub const MAX_WIDTH: usize = 121;
const ADDEND_SLOTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum MapMode {
    #[default]
    OneShot,
    Accumulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MapConfig {
    pub width: usize,
    pub mode: MapMode,
    pub signedness: Signedness,
    /// Exponent of the grid's least-significant column.
    pub lsb_exp: i64,
}

impl MapConfig {
    pub fn new(width: usize, mode: MapMode, signedness: Signedness) -> Result<Self> {
        if !(2..=MAX_WIDTH).contains(&width) {
            return Err(Error::OutOfRange {
                what: "processor width",
                value: width as i128,
                range: "2..=121",
            });
        }
        Ok(Self {
            width,
            mode,
            signedness,
            lsb_exp: 0,
        })
    }

    pub fn grid_width(&self) -> usize {
        2 * self.width - 1
    }

    /// Rows entering the first stage: `n` product rows plus six addend rows
    /// (in accumulate mode two of them are the fed-back `f`).
    pub fn matrix_rows(&self) -> u64 {
        (self.width + ADDEND_SLOTS) as u64
    }
}

/// One operand tuple. Absent operands are zero; `a` and `b` must be present
/// together or not at all.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MapTuple {
    pub a: Option<MultiRowCode>,
    pub b: Option<MultiRowCode>,
    pub c: Option<MultiRowCode>,
    pub d: Option<MultiRowCode>,
    pub e: Option<MultiRowCode>,
    pub g: Option<MultiRowCode>,
    pub h: Option<MultiRowCode>,
    pub l: Option<MultiRowCode>,
}

impl MapTuple {
    fn addends(&self) -> impl Iterator<Item = (&'static str, &MultiRowCode)> {
        [
            ("C", &self.c),
            ("D", &self.d),
            ("E", &self.e),
            ("G", &self.g),
            ("H", &self.h),
            ("L", &self.l),
        ]
        .into_iter()
        .filter_map(|(n, c)| c.as_ref().map(|c| (n, c)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapState {
    /// Two-row result register, `grid_width` columns.
    pub f: MultiRowCode,
    pub overflow_count: BigUint,
    /// Accumulated constant offset, in units of the grid's lsb weight.
    pub bias: BigInt,
    pub steps: u64,
    /// Intermediate matrices of the last evaluation, when traced.
    pub trace: Vec<MultiRowCode>,
}

impl MapState {
    pub fn new(cfg: &MapConfig) -> Self {
        Self {
            f: MultiRowCode::zeros(2, cfg.grid_width(), 2, cfg.lsb_exp).expect("binary"),
            overflow_count: BigUint::zero(),
            bias: BigInt::zero(),
            steps: 0,
            trace: Vec::new(),
        }
    }

    pub fn total(&self) -> BigRational {
        let grid = self.f.width();
        let m = BigInt::from((&self.overflow_count << grid) + self.f.mantissa()) + &self.bias;
        BigRational::from_integer(m) * weight(2, self.f.lsb_exp())
    }

    pub fn to_json(&self) -> MapStateJson {
        MapStateJson {
            f: self.f.to_json(),
            overflow_count: self.overflow_count.to_string(),
            bias: self.bias.to_string(),
            steps: self.steps,
            total: self.total().to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MapStateJson {
    pub f: CodeJson,
    pub overflow_count: String,
    pub bias: String,
    pub steps: u64,
    pub total: String,
}

fn check_operand(cfg: &MapConfig, name: &str, code: &MultiRowCode, exp: i64) -> Result<()> {
    if code.radix() != 2 {
        return Err(Error::RadixMismatch {
            left: 2,
            right: code.radix(),
        });
    }
    if code.lsb_exp() != exp {
        return Err(Error::ExponentMismatch {
            left: exp,
            right: code.lsb_exp(),
        });
    }
    if code.significant_width() > cfg.width {
        return Err(Error::WidthOverflow {
            needed: code.significant_width(),
            width: cfg.width,
        });
    }
    let max_rows = match cfg.signedness {
        Signedness::Unsigned => 2,
        Signedness::TwosComplement => 1,
    };
    if code.rows() > max_rows {
        return Err(Error::Shape(format!(
            "operand {name} has {} rows, at most {max_rows} allowed",
            code.rows()
        )));
    }
    Ok(())
}

// Product term on the grid: (matrix, bias). Two's-complement operands are
// read as `n`-bit patterns.
fn product_rows(cfg: &MapConfig, t: &MapTuple) -> Result<Option<(MultiRowCode, BigInt)>> {
    let (a, b) = match (&t.a, &t.b) {
        (Some(a), Some(b)) => (a, b),
        (None, None) => return Ok(None),
        _ => return Err(Error::Shape("operands A and B come as a pair".into())),
    };
    if a.lsb_exp() + b.lsb_exp() != cfg.lsb_exp {
        return Err(Error::ExponentMismatch {
            left: cfg.lsb_exp,
            right: a.lsb_exp() + b.lsb_exp(),
        });
    }
    check_operand(cfg, "A", a, a.lsb_exp())?;
    check_operand(cfg, "B", b, b.lsb_exp())?;
    if a.rows() != 1 || b.rows() != 1 {
        return Err(Error::Shape(
            "operands A and B must be one-row codes".into(),
        ));
    }
    let a = a.resize_width(cfg.width)?;
    let b = b.resize_width(cfg.width)?;
    let pp = pp_matrix(&a, &b, cfg.signedness)?;
    Ok(Some((pp.code.resize_width(cfg.grid_width())?, pp.bias)))
}

fn assemble(cfg: &MapConfig, state: &MapState, t: &MapTuple) -> Result<(MultiRowCode, BigInt)> {
    if cfg.mode == MapMode::Accumulate && (t.h.is_some() || t.l.is_some()) {
        return Err(Error::Shape(
            "operands H and L are replaced by feedback in accumulate mode".into(),
        ));
    }
    let grid = cfg.grid_width();
    let mut parts = Vec::new();
    let mut bias = BigInt::zero();
    if let Some((code, b)) = product_rows(cfg, t)? {
        parts.push(code);
        bias += b;
    }
    for (name, code) in t.addends() {
        check_operand(cfg, name, code, cfg.lsb_exp)?;
        let mut code = code.resize_width(cfg.width)?;
        if cfg.signedness == Signedness::TwosComplement {
            // Flipping the sign digit turns x into x + 2^(n-1).
            let top = cfg.width - 1;
            code.set_digit(0, top, 1 - code.digit(0, top))?;
            bias -= BigInt::one() << top;
        }
        parts.push(code.resize_width(grid)?);
    }
    if cfg.mode == MapMode::Accumulate {
        parts.push(state.f.clone());
    }
    if parts.is_empty() {
        parts.push(MultiRowCode::zeros(1, grid, 2, cfg.lsb_exp)?);
    }
    let refs: Vec<&MultiRowCode> = parts.iter().collect();
    Ok((MultiRowCode::stack(&refs)?, bias))
}

// Splits a reduced code at the grid boundary: (grid part, value above it in
// units of 2^grid).
fn split_grid(code: &MultiRowCode, grid: usize) -> Result<(MultiRowCode, BigUint)> {
    let mut low = MultiRowCode::zeros(code.rows(), grid, code.radix(), code.lsb_exp())?;
    let mut high = BigUint::zero();
    for j in (0..code.width()).rev() {
        if j >= grid {
            high = (high << 1u32) + code.column_sum(j);
        } else {
            for r in 0..code.rows() {
                low.set_digit(r, j, code.digit(r, j))?;
            }
        }
    }
    if code.width() < grid {
        high = BigUint::zero();
    }
    Ok((low.pad_rows(2), high))
}

fn evaluate(cfg: &MapConfig, state: &MapState, t: &MapTuple, traced: bool) -> Result<MapState> {
    let (matrix, bias) = assemble(cfg, state, t)?;
    let (reduced, stages) = reduce_to_two_traced(&matrix);
    let (f, high) = split_grid(&reduced, cfg.grid_width())?;
    let mut next = state.clone();
    next.f = f;
    next.overflow_count += high;
    next.bias += bias;
    next.steps += 1;
    next.trace = if traced {
        std::iter::once(matrix).chain(stages).collect()
    } else {
        Vec::new()
    };
    Ok(next)
}

/// `A*B + C + D + E + G + H + L` in one reduction.
pub fn map_eval(cfg: &MapConfig, t: &MapTuple) -> Result<MapState> {
    let one_shot = MapConfig {
        mode: MapMode::OneShot,
        ..*cfg
    };
    evaluate(&one_shot, &MapState::new(cfg), t, false)
}

/// Like [`map_eval`], keeping every intermediate matrix in `trace`.
pub fn map_eval_traced(cfg: &MapConfig, t: &MapTuple) -> Result<MapState> {
    let one_shot = MapConfig {
        mode: MapMode::OneShot,
        ..*cfg
    };
    evaluate(&one_shot, &MapState::new(cfg), t, true)
}

/// One accumulate-mode step: the previous `f` joins the matrix.
pub fn map_step(cfg: &MapConfig, state: &MapState, t: &MapTuple) -> Result<MapState> {
    let acc = MapConfig {
        mode: MapMode::Accumulate,
        ..*cfg
    };
    evaluate(&acc, state, t, false)
}

pub fn map_accumulate<'a, I>(cfg: &MapConfig, tuples: I) -> Result<MapState>
where
    I: IntoIterator<Item = &'a MapTuple>,
{
    let mut state = MapState::new(cfg);
    for t in tuples {
        state = map_step(cfg, &state, t)?;
    }
    Ok(state)
}

/// Delay breakdown of one evaluation. `t_q`, `t_s` and `t_p` are the first,
/// second and all remaining reduction stages, each charged its banded adder
/// delay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapTiming {
    pub t_and: u32,
    pub t_q: u32,
    pub t_s: u32,
    pub t_p: u32,
    pub total: u32,
    pub row_counts: Vec<u64>,
    pub stage_delays: Vec<u32>,
}

pub fn map_timing(cfg: &MapConfig, model: &DelayModel) -> MapTiming {
    let plan = stage_plan(cfg.matrix_rows(), 2);
    let stage_delays: Vec<u32> = plan.row_counts[..plan.stages as usize]
        .iter()
        .map(|&m| band_levels(m as u32) * model.t_and + model.t_cc_per_stage)
        .collect();
    let t_q = stage_delays.first().copied().unwrap_or(0);
    let t_s = stage_delays.get(1).copied().unwrap_or(0);
    let t_p = stage_delays.iter().skip(2).sum();
    MapTiming {
        t_and: model.t_and,
        t_q,
        t_s,
        t_p,
        total: model.t_and + t_q + t_s + t_p,
        row_counts: plan.row_counts,
        stage_delays,
    }
}

/// The quoted 24-bit breakdown `(t_and, t_q, t_s, t_p)`.
pub fn quoted_timing_24() -> (u32, u32, u32, u32) {
    golden::MAP24_STAGE_DELAYS
}

/// Structural AND-gate estimate: `n^2` partial-product gates plus a table
/// tree for every column of every reduction stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateEstimate {
    pub width: usize,
    pub product_ands: u64,
    pub stage_ands: Vec<u64>,
    pub total: u64,
    pub quoted_approx: Option<u64>,
}

// Column heights of the matrix entering the first stage.
fn first_stage_heights(cfg: &MapConfig) -> Result<Vec<u64>> {
    let zero = MultiRowCode::zeros(1, cfg.width, 2, 0)?;
    let pp = pp_matrix(&zero, &zero, cfg.signedness)?;
    let mut heights = vec![0u64; cfg.grid_width()];
    for &(_, c, _) in &pp.cells {
        heights[c] += 1;
    }
    for (j, h) in heights.iter_mut().enumerate() {
        if j < cfg.width {
            *h += ADDEND_SLOTS as u64;
        }
    }
    Ok(heights)
}

// A column of height h produces bits(h) digits, placed diagonally.
fn next_heights(heights: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; heights.len() + 8];
    for (j, &h) in heights.iter().enumerate() {
        let len = (64 - h.leading_zeros()) as usize;
        for k in 0..len {
            out[j + k] += 1;
        }
    }
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

pub fn gate_estimate(cfg: &MapConfig) -> Result<GateEstimate> {
    let product_ands = (cfg.width * cfg.width) as u64;
    let mut heights = first_stage_heights(cfg)?;
    let mut stage_ands = Vec::new();
    while heights.iter().copied().max().unwrap_or(0) > 2 {
        let mut cost = 0;
        for &h in &heights {
            if h >= 2 {
                cost += oca_cost_structural(h as u32)?;
            }
        }
        stage_ands.push(cost);
        heights = next_heights(&heights);
    }
    let total = product_ands + stage_ands.iter().sum::<u64>();
    Ok(GateEstimate {
        width: cfg.width,
        product_ands,
        stage_ands,
        total,
        quoted_approx: (cfg.width == 24).then_some(golden::MAP24_AND_ELEMENTS_APPROX),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::twos_complement_code;

    fn u(v: u128, w: usize) -> Option<MultiRowCode> {
        Some(MultiRowCode::from_u128(v, 1, w, 2).unwrap())
    }

    fn s(v: i64, w: usize) -> Option<MultiRowCode> {
        Some(twos_complement_code(&BigInt::from(v), w, 0).unwrap())
    }

    fn int(v: i128) -> BigRational {
        BigRational::from_integer(v.into())
    }

    fn cfg(n: usize) -> MapConfig {
        MapConfig::new(n, MapMode::OneShot, Signedness::Unsigned).unwrap()
    }

    #[test]
    fn config_bounds() {
        assert!(MapConfig::new(1, MapMode::OneShot, Signedness::Unsigned).is_err());
        assert!(MapConfig::new(122, MapMode::OneShot, Signedness::Unsigned).is_err());
        assert_eq!(cfg(24).grid_width(), 47);
    }

    #[test]
    fn zero_and_identity() {
        let c = cfg(8);
        assert_eq!(map_eval(&c, &MapTuple::default()).unwrap().total(), int(0));
        let t = MapTuple {
            a: u(1, 8),
            b: u(200, 8),
            c: u(3, 8),
            l: u(255, 8),
            ..Default::default()
        };
        assert_eq!(map_eval(&c, &t).unwrap().total(), int(200 + 3 + 255));
    }

    #[test]
    fn full_tuple_and_overflow() {
        let c = cfg(4);
        let t = MapTuple {
            a: u(15, 4),
            b: u(15, 4),
            c: u(15, 4),
            d: u(15, 4),
            e: u(15, 4),
            g: u(15, 4),
            h: u(15, 4),
            l: u(15, 4),
        };
        let st = map_eval(&c, &t).unwrap();
        assert_eq!(st.total(), int(225 + 6 * 15));
        // 315 does not fit 7 columns.
        assert_eq!(st.overflow_count, BigUint::from(2u32));
        assert_eq!(st.f.width(), 7);
    }

    #[test]
    fn two_row_addends() {
        let c = cfg(4);
        let two = MultiRowCode::from_rows_lsb(2, 0, &[vec![1, 1, 1, 1], vec![1, 1, 1, 1]]).unwrap();
        let t = MapTuple {
            c: Some(two),
            ..Default::default()
        };
        assert_eq!(map_eval(&c, &t).unwrap().total(), int(30));
    }

    #[test]
    fn errors() {
        let c = cfg(4);
        let wide = MapTuple {
            c: u(16, 5),
            ..Default::default()
        };
        assert!(matches!(
            map_eval(&c, &wide),
            Err(Error::WidthOverflow { .. })
        ));
        let lonely = MapTuple {
            a: u(1, 4),
            ..Default::default()
        };
        assert!(map_eval(&c, &lonely).is_err());
        let shifted = MapTuple {
            c: Some(MultiRowCode::zeros(1, 4, 2, -1).unwrap()),
            ..Default::default()
        };
        assert!(matches!(
            map_eval(&c, &shifted),
            Err(Error::ExponentMismatch { .. })
        ));
        let with_h = MapTuple {
            h: u(1, 4),
            ..Default::default()
        };
        let acc = MapConfig {
            mode: MapMode::Accumulate,
            ..c
        };
        assert!(map_step(&acc, &MapState::new(&acc), &with_h).is_err());
    }

    #[test]
    fn signed_tuple() {
        let c = MapConfig::new(8, MapMode::OneShot, Signedness::TwosComplement).unwrap();
        let t = MapTuple {
            a: s(-7, 8),
            b: s(100, 8),
            c: s(-128, 8),
            d: s(127, 8),
            e: s(-1, 8),
            ..Default::default()
        };
        assert_eq!(map_eval(&c, &t).unwrap().total(), int(-700 - 128 + 127 - 1));
    }

    #[test]
    fn accumulate_matches_sum() {
        let c = cfg(6);
        let tuples: Vec<MapTuple> = (0..40u128)
            .map(|i| MapTuple {
                a: u(63 - i % 7, 6),
                b: u(i + 20, 6),
                c: u(i, 6),
                g: u(63, 6),
                ..Default::default()
            })
            .collect();
        let expected: i128 = tuples
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let i = i as i128;
                (63 - i % 7) * (i + 20) + i + 63
            })
            .sum();
        let st = map_accumulate(&c, &tuples).unwrap();
        assert_eq!(st.total(), int(expected));
        assert!(st.overflow_count > BigUint::zero());
        assert_eq!(map_accumulate(&c, &[]).unwrap().total(), int(0));
    }

    #[test]
    fn timing_24() {
        let t = map_timing(&cfg(24), &DelayModel::default());
        assert_eq!(t.row_counts, vec![30, 5, 3, 2]);
        assert_eq!((t.t_and, t.t_q, t.t_s, t.t_p, t.total), (1, 6, 4, 3, 14));
        assert_eq!((t.t_and, t.t_q, t.t_s, t.t_p), quoted_timing_24());
    }

    #[test]
    fn timing_small() {
        let t = map_timing(&cfg(2), &DelayModel::default());
        assert_eq!(t.row_counts, vec![8, 4, 3, 2]);
        assert_eq!(t.total, 1 + 5 + 3 + 3);
    }

    #[test]
    fn next_heights_bound_reduction() {
        let c = cfg(5);
        let h = first_stage_heights(&c).unwrap();
        let ones: Vec<Vec<u8>> = (0..*h.iter().max().unwrap())
            .map(|r| h.iter().map(|&x| u8::from(r < x)).collect())
            .collect();
        let m = MultiRowCode::from_rows_lsb(2, 0, &ones).unwrap();
        let r = crate::reducer::reduce_once(&m);
        let got: Vec<u64> = r.column_heights().iter().map(|&x| x as u64).collect();
        let mut want = next_heights(&h);
        want.resize(got.len(), 0);
        assert!(got.iter().zip(&want).all(|(g, w)| g <= w));
        assert_eq!(*want.iter().max().unwrap(), r.rows() as u64);
    }

    #[test]
    fn gate_estimate_24_is_reported() {
        let g = gate_estimate(&cfg(24)).unwrap();
        assert_eq!(g.product_ands, 576);
        assert_eq!(g.stage_ands.len(), 3);
        assert_eq!(g.quoted_approx, Some(12_500));
    }
}
