use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{uint, Interval, IntervalSet, Piece, PiecewiseAffineMap, Rat};

/// How the transfer amount `d_n` is solved for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TransferMode {
    /// `d = E·Y / X`: the contraction scales every region by the same factor
    /// `μ(X_n) / μ(X_{n+1})`, so conjugated maps stay measure preserving.
    #[default]
    Uniform,
    /// `d = E·Y / (X + E)`: solves `(E + d) / (X + Y - d) = E / X` as written.
    Literal,
}

impl TransferMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferMode::Uniform => "uniform",
            TransferMode::Literal => "literal",
        }
    }
}

impl std::str::FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(TransferMode::Uniform),
            "literal" => Ok(TransferMode::Literal),
            other => Err(Error::Parse(format!("unknown transfer mode `{other}`"))),
        }
    }
}

/// The stage-`n` interval cycle on `Y_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalCycle {
    pub map: PiecewiseAffineMap,
    pub y: Interval,
    /// First of the `h` levels; the base of the cycle.
    pub j: Interval,
    /// Right endpoint of `y`.
    pub b: Rat,
}

impl IntervalCycle {
    pub fn step(&self) -> Rat {
        self.j.length()
    }
}

/// Cycle on `h` consecutive levels of `Y = [b_prev, b_prev + 1/n)`, each of
/// length `1/(n h)`, shifting every level up by one and the top level back
/// to `J`.
pub fn build_s(n: u64, h: u64, b_prev: &Rat) -> Result<IntervalCycle> {
    if n == 0 || h < 2 {
        return Err(Error::InvalidSpec(format!("cycle needs n >= 1 and h >= 2 (n={n}, h={h})")));
    }
    let len = Rat::new(1.into(), n.into());
    let step = &len / uint(h);
    let b = b_prev + &len;
    let top = &b - &step;
    let map = PiecewiseAffineMap::from_pieces(vec![
        Piece::translation(Interval::new(b_prev.clone(), top.clone())?, step.clone()),
        Piece::translation(Interval::new(top, b.clone())?, -(&len - &step)),
    ])?;
    Ok(IntervalCycle {
        map,
        y: Interval::new(b_prev.clone(), b.clone())?,
        j: Interval::new(b_prev.clone(), b_prev + &step)?,
        b,
    })
}

/// Measure `d_n` moved from the cycle into the finite part.
pub fn solve_transfer(mu_e: &Rat, mu_x: &Rat, mu_y: &Rat, mode: TransferMode) -> Rat {
    match mode {
        TransferMode::Uniform => mu_e * mu_y / mu_x,
        TransferMode::Literal => mu_e * mu_y / (mu_x + mu_e),
    }
}

/// Leftmost slice of `j` with measure `d / h`.
pub fn select_transfer_set(j: &Interval, d: &Rat, h: u64) -> Result<IntervalSet> {
    let len = d / uint(h);
    if len > j.length() {
        return Err(Error::TransferTooLarge { requested: len, available: j.length() });
    }
    if len.is_zero() {
        return Ok(IntervalSet::empty());
    }
    IntervalSet::span(j.lo().clone(), j.lo() + len)
}
