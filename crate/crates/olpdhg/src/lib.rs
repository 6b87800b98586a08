//! MPS input, benchmark harness and command line for `olpdhg-core`.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod bench;
pub mod cli;
pub mod generate;
pub mod mps;
pub mod trace;

pub use mps::{parse_mps, read_mps, write_mps, MpsError};
