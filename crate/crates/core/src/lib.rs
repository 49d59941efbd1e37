pub mod accumulator;
pub mod codes;
pub mod compressor;
pub mod divider;
pub mod error;
pub mod expr;
pub mod fuzz;
pub mod golden;
pub mod map_unit;
pub mod multiplier;
pub mod reducer;
pub mod report;

pub use codes::{MultiRowCode, QuadSignedCode};
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/one_column.md")]
    mod one_column {}
    #[doc = include_str!("../../../book/src/accumulation.md")]
    mod accumulation {}
    #[doc = include_str!("../../../book/src/multiplication.md")]
    mod multiplication {}
    #[doc = include_str!("../../../book/src/division.md")]
    mod division {}
    #[doc = include_str!("../../../book/src/map.md")]
    mod map {}
    #[doc = include_str!("../../../book/src/timing.md")]
    mod timing {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
