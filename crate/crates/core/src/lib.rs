//! Asymptotic expansions for elliptic problems with high-contrast, piecewise-constant
//! coefficients, built on P1 finite elements.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the element formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod elasticity;
pub mod error;
pub mod fem;
pub mod functions;
pub mod geometry;
pub mod harness;
pub mod localized;
pub mod oned;
pub mod pressure;
pub mod series;

pub use error::{Error, Result};
