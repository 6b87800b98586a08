//! Primal-dual hybrid gradient for linear programs in the form
//! `min cᵀx s.t. Ax = b, x ≥ 0`, with diagonal preconditioners that can be
//! learned online while the method runs.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the benchmark harness live in the `olpdhg` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;

pub mod error;
pub mod lp;
pub mod metrics;
pub mod online;
pub mod pdhg;
pub mod pdlp;
pub mod precond;
pub mod solver;
pub mod sparse;
pub(crate) mod vecops;

pub use error::{Error, Result};
pub use lp::{to_standard_form, GeneralLp, LpProblem, RowSense, VarMap};
pub use online::{DualAnchor, OnlineConfig, OnlineLearner, Scheduler};
pub use pdhg::{Residuals, SaddleState, Status};
pub use precond::{DiagPreconditioner, StaticScaling};
pub use solver::{solve, Mode, SolveConfig, SolveReport};
pub use sparse::SparseMatrix;
