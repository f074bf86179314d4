//! Numerical toolkit for elliptic equations with variable exponent growth.
//!
//! The crate covers exponent fields and their log-Hölder moduli, Luxemburg
//! norms, a discrete Dirichlet solver for the `p(x)`-Laplacian, checks of
//! structure conditions, empirical Harnack-type estimates, and barrier
//! constructions.

// Negated comparisons reject NaN inputs on purpose; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier;
pub mod error;
pub mod exponent;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod lebesgue;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
pub use exponent::{ExponentField, Profile};
pub use geometry::{Ball, BoxRegion, Region};
pub use grid::{Grid, GridFunction};
pub use solver::{solve_dirichlet, ProblemSpec, SolveResult};
