//! Randomized equivalence checks against big-integer arithmetic.
//!
//! Every trial is seeded from `(seed, trial)` alone, so runs are reproducible
//! and trials can run in any order. Each operand draws from its own stream
//! and is generated at the trial's full width; a narrower case keeps only the
//! low digits. A failing trial is therefore shrunk by re-running it at the
//! smallest width that still fails.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codes::MultiRowCode;
use crate::divider::{divide, Comparator};
use crate::error::{Error, Result};
use crate::map_unit::{map_accumulate, map_eval, MapConfig, MapMode, MapTuple};
use crate::multiplier::{fused_mac, multiply, twos_complement_value, Product, Signedness};
use crate::reducer::{add_two_row, reduce_to_two};
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FuzzOp {
    Reduce,
    Add,
    Mul,
    Mac,
    Div,
    Map,
}

impl FuzzOp {
    pub const ALL: [FuzzOp; 6] = [
        FuzzOp::Reduce,
        FuzzOp::Add,
        FuzzOp::Mul,
        FuzzOp::Mac,
        FuzzOp::Div,
        FuzzOp::Map,
    ];

    fn max_width(self) -> usize {
        match self {
            FuzzOp::Reduce => 256,
            FuzzOp::Add => 128,
            FuzzOp::Mul | FuzzOp::Mac => 64,
            FuzzOp::Div => 24,
            FuzzOp::Map => 24,
        }
    }

    fn min_width(self) -> usize {
        match self {
            FuzzOp::Map => 2,
            _ => 1,
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for FuzzOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FuzzOp::Reduce => "reduce",
            FuzzOp::Add => "add",
            FuzzOp::Mul => "mul",
            FuzzOp::Mac => "mac",
            FuzzOp::Div => "div",
            FuzzOp::Map => "map",
        };
        f.write_str(s)
    }
}

impl FromStr for FuzzOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FuzzOp::ALL
            .into_iter()
            .find(|op| op.to_string() == s)
            .ok_or_else(|| Error::Parse {
                pos: 0,
                msg: format!("unknown fuzz scope `{s}`"),
            })
    }
}

/// A deliberate corruption of the computed value, for testing the harness.
pub type Fault = dyn Fn(FuzzOp, usize, &mut BigRational) + Sync;

struct Streams {
    key: [u8; 32],
}

impl Streams {
    fn new(seed: u64, op: FuzzOp, trial: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&trial.to_le_bytes());
        key[16..24].copy_from_slice(&op.index().to_le_bytes());
        Self { key }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::from_seed(self.key);
        r.set_stream(stream);
        r
    }
}

fn digits(rng: &mut ChaCha8Rng, n: usize, q: u32) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..q) as u8).collect()
}

fn bits(rng: &mut ChaCha8Rng, full: usize, width: usize) -> BigUint {
    let d = digits(rng, full, 2);
    d[..width]
        .iter()
        .rev()
        .fold(BigUint::zero(), |acc, &b| (acc << 1u32) + u32::from(b))
}

fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

// Computes (got, want) for one trial at `width` digits, with `full` the
// trial's drawn width.
fn run_case(
    op: FuzzOp,
    s: &Streams,
    full: usize,
    width: usize,
) -> Result<(BigRational, BigRational)> {
    let mut params = s.rng(1);
    match op {
        FuzzOp::Reduce => {
            let q = [2u32, 3, 10][params.gen_range(0..3)];
            let rows = params.gen_range(1..=127usize);
            let mut r = s.rng(2);
            let cols: Vec<Vec<u8>> = (0..full).map(|_| digits(&mut r, rows, q)).collect();
            let mut code = MultiRowCode::zeros(rows, width, q, 0)?;
            for (j, col) in cols.iter().take(width).enumerate() {
                for (i, &d) in col.iter().enumerate() {
                    code.set_digit(i, j, d)?;
                }
            }
            let want = code.value();
            Ok((reduce_to_two(&code).value(), want))
        }
        FuzzOp::Add => {
            let q = [2u32, 3, 10][params.gen_range(0..3)];
            let mk = |stream| -> Result<MultiRowCode> {
                let mut r = s.rng(stream);
                let rows: Vec<Vec<u8>> = (0..2)
                    .map(|_| digits(&mut r, full, q)[..width].to_vec())
                    .collect();
                MultiRowCode::from_rows_lsb(q, 0, &rows)
            };
            let (a, b) = (mk(2)?, mk(3)?);
            let want = a.value() + b.value();
            let sum = add_two_row(&a, &b)?;
            if sum.width() > width + 2 {
                return Err(Error::Shape(format!(
                    "sum width {} > {}",
                    sum.width(),
                    width + 2
                )));
            }
            Ok((sum.value(), want))
        }
        FuzzOp::Mul => {
            let signed = params.gen_bool(0.5);
            let a = bits(&mut s.rng(2), full, width);
            let b = bits(&mut s.rng(3), full, width);
            let ca = MultiRowCode::from_mantissa(&a, 1, width, 2, 0)?;
            let cb = MultiRowCode::from_mantissa(&b, 1, width, 2, 0)?;
            if signed {
                let p = multiply(&ca, &cb, Signedness::TwosComplement)?;
                let want = twos_complement_value(&ca) * twos_complement_value(&cb);
                Ok((p.value(), int(want)))
            } else {
                let p = multiply(&ca, &cb, Signedness::Unsigned)?;
                Ok((p.value(), int(BigInt::from(a * b))))
            }
        }
        FuzzOp::Mac => {
            let mut f = Product::zero(0);
            let mut want = BigInt::zero();
            let mut r = s.rng(2);
            let steps = params.gen_range(1..=4);
            for _ in 0..steps {
                let a = bits(&mut r, full, width);
                let b = bits(&mut r, full, width);
                let ca = MultiRowCode::from_mantissa(&a, 1, width, 2, 0)?;
                let cb = MultiRowCode::from_mantissa(&b, 1, width, 2, 0)?;
                want += BigInt::from(a * b);
                f = fused_mac(&f, &ca, &cb, Signedness::Unsigned)?.product;
            }
            Ok((f.value(), int(want)))
        }
        FuzzOp::Div => {
            let k = params.gen_range(1..=4u32);
            let iters = params.gen_range(1..=4usize);
            let z = bits(&mut s.rng(2), full, width) | (BigUint::one() << (width - 1));
            let x = bits(&mut s.rng(3), full + 1, width + 1) % (&z * 2u32);
            let res = divide(&x, &z, k, iters, 2, Comparator::Parallel)?;
            if res.residual >= z {
                return Err(Error::ResidualOutOfRange(res.residual.to_string()));
            }
            let got = int(z) * res.quotient() + res.residual_weight();
            Ok((got, int(x)))
        }
        FuzzOp::Map => {
            let accumulate = params.gen_bool(0.5);
            let cfg = MapConfig::new(
                width,
                if accumulate {
                    MapMode::Accumulate
                } else {
                    MapMode::OneShot
                },
                Signedness::Unsigned,
            )?;
            let mut r = s.rng(2);
            let count = if accumulate { 8 } else { 1 };
            let mut tuples = Vec::new();
            let mut want = BigUint::zero();
            for _ in 0..count {
                let mut next = || -> Result<(MultiRowCode, BigUint)> {
                    let v = bits(&mut r, full, width);
                    Ok((MultiRowCode::from_mantissa(&v, 1, width, 2, 0)?, v))
                };
                let (a, av) = next()?;
                let (b, bv) = next()?;
                let mut t = MapTuple {
                    a: Some(a),
                    b: Some(b),
                    ..Default::default()
                };
                want += av * bv;
                let slots: Vec<&mut Option<MultiRowCode>> = if accumulate {
                    vec![&mut t.c, &mut t.d, &mut t.e, &mut t.g]
                } else {
                    vec![&mut t.c, &mut t.d, &mut t.e, &mut t.g, &mut t.h, &mut t.l]
                };
                for slot in slots {
                    let (c, cv) = next()?;
                    *slot = Some(c);
                    want += cv;
                }
                tuples.push(t);
            }
            let st = if accumulate {
                map_accumulate(&cfg, &tuples)?
            } else {
                map_eval(&cfg, &tuples[0])?
            };
            Ok((st.total(), int(BigInt::from(want))))
        }
    }
}

fn fails(
    op: FuzzOp,
    s: &Streams,
    full: usize,
    width: usize,
    fault: Option<&Fault>,
) -> Option<String> {
    match run_case(op, s, full, width) {
        Ok((mut got, want)) => {
            if let Some(f) = fault {
                f(op, width, &mut got);
            }
            (got != want).then(|| format!("got {got}, want {want}"))
        }
        Err(e) => Some(format!("error: {e}")),
    }
}

/// One failing trial after shrinking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub op: FuzzOp,
    pub trial: u64,
    pub width: usize,
    pub shrunk_width: usize,
    pub detail: String,
}

fn trial(seed: u64, op: FuzzOp, t: u64, fault: Option<&Fault>) -> Option<Counterexample> {
    let s = Streams::new(seed, op, t);
    let full = s.rng(0).gen_range(op.min_width()..=op.max_width());
    fails(op, &s, full, full, fault)?;
    let (shrunk_width, detail) = (op.min_width()..=full)
        .find_map(|w| fails(op, &s, full, w, fault).map(|d| (w, d)))
        .expect("full width fails");
    Some(Counterexample {
        op,
        trial: t,
        width: full,
        shrunk_width,
        detail,
    })
}

/// Runs `trials` trials of every op in `scope`.
pub fn fuzz_verify(seed: u64, trials: u64, scope: &[FuzzOp]) -> Report {
    fuzz_verify_with(seed, trials, scope, None)
}

pub fn fuzz_verify_with(seed: u64, trials: u64, scope: &[FuzzOp], fault: Option<&Fault>) -> Report {
    let mut report = Report::new(
        "fuzz",
        &format!("randomized oracle checks, seed {seed}, {trials} trials per op"),
        &["op", "trials", "failures"],
    );
    for &op in scope {
        let mut found: Vec<Counterexample> = (0..trials)
            .into_par_iter()
            .filter_map(|t| trial(seed, op, t, fault))
            .collect();
        found.sort_by_key(|c| c.trial);
        report.row([op.to_string(), trials.to_string(), found.len().to_string()]);
        for c in found {
            report.mismatch(
                format!("{} trial {}", c.op, c.trial),
                format!(
                    "width {} shrunk to {}: {}",
                    c.width, c.shrunk_width, c.detail
                ),
            );
        }
    }
    report
}
