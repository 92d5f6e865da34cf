//! Exact rationals, half-open interval sets and invertible piecewise-affine
//! maps between them.

mod interval;
mod map;
mod rat;

pub use interval::{Interval, IntervalSet, SetOp};
pub use map::{left_fill, Piece, PieceBudget, PiecewiseAffineMap};
pub use rat::{int, lcm_denominators, parse_rat, pow2_inv, rat, to_decimal, to_f64, uint, Rat};
