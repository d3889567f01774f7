//! A dense, bounded-variable revised simplex engine.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    c'x
//! subject to  row_lo <= A x <= row_hi
//!             var_lo <=  x  <= var_hi
//! ```
//!
//! Every row gets a logical variable `s = A x` carrying the row bounds, so
//! equality, one-sided and ranged rows are handled uniformly. Phase one drives
//! artificial variables out of the starting basis; phase two optimises the real
//! objective. Dantzig pricing with a Harris ratio test is used until a long run
//! of degenerate pivots is seen, after which the engine drops to Bland's rule
//! until progress resumes.
//!
//! The engine is single-threaded and fully deterministic: the same problem
//! always produces a bit-identical [`Solution`].

#![allow(clippy::needless_range_loop)]

mod problem;
mod scaling;
mod simplex;

pub use problem::{Problem, Row};
pub use simplex::{solve, solve_with, Options, Solution, Status};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable index {index} out of range ({num_vars} variables)")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("non-finite coefficient in row {row}")]
    NonFiniteCoefficient { row: usize },
    #[error("non-finite objective coefficient for variable {var}")]
    NonFiniteObjective { var: usize },
    #[error("bounds are NaN for {what} {index}")]
    NanBound { what: &'static str, index: usize },
}
