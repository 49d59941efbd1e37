use thiserror::Error;

/// Errors raised by the arithmetic, timing, and reporting layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("radix must lie in 2..=256, got {0}")]
    InvalidRadix(u32),

    #[error("digit {digit} at row {row}, column {col} is outside [0, {max}]")]
    DigitOutOfRange {
        row: usize,
        col: usize,
        digit: u32,
        max: u32,
    },

    #[error("value needs {needed} columns but the code has only {width}")]
    WidthOverflow { needed: usize, width: usize },

    #[error("value is not a multiple of the least-significant column weight")]
    NotMultipleOfLsb,

    #[error("value is negative where a non-negative value is required")]
    NegativeValue,

    #[error("exponent mismatch: {left} vs {right}")]
    ExponentMismatch { left: i64, right: i64 },

    #[error("radix mismatch: {left} vs {right}")]
    RadixMismatch { left: u32, right: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} = {value} is outside the supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: i128,
        range: &'static str,
    },

    #[error("m = {0} has no entry in the reference gate-count table")]
    Untabulated(u32),

    #[error("division by zero")]
    DivisionByZero,

    #[error("dividend is not normalized against the divisor (x must be < q*z)")]
    Unnormalized,

    #[error("residual {0} is outside the range covered by the scale")]
    ResidualOutOfRange(String),

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown table id `{0}`")]
    UnknownTable(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
