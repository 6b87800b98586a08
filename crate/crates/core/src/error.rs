use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix did not have the length the operation requires.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A triplet referenced a position outside the declared shape.
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    /// A scalar parameter was outside its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// Variable `var` has `lower > upper`.
    InfeasibleBounds { var: usize, lower: f64, upper: f64 },
    /// A NaN or infinity showed up where only finite values are allowed.
    NonFinite { context: &'static str },
    /// An aggregate was requested over an empty set.
    EmptyInput { context: &'static str },
    /// Two result sets did not cover the same instances.
    InstanceMismatch {
        only_in_baseline: Vec<String>,
        only_in_variant: Vec<String>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, found {found}"),
            Error::IndexOutOfBounds { row, col, nrows, ncols } => {
                write!(f, "entry ({row}, {col}) out of bounds for a {nrows}x{ncols} matrix")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value {value} for parameter `{name}`")
            }
            Error::InfeasibleBounds { var, lower, upper } => {
                write!(f, "variable {var} has lower bound {lower} above upper bound {upper}")
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::EmptyInput { context } => write!(f, "empty input to {context}"),
            Error::InstanceMismatch {
                only_in_baseline,
                only_in_variant,
            } => write!(
                f,
                "instance sets differ: only in baseline {only_in_baseline:?}, only in variant {only_in_variant:?}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
