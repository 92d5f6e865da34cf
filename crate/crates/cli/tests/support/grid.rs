//! Cell-counting oracle: every set becomes a bitmap of cells of width `1/L`
//! and every slope-1 map a cell permutation, so measures are `count / L`.

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use towerplex_core::{IntervalSet, PiecewiseAffineMap, Rat};

pub const NONE: u32 = u32::MAX;

pub struct Grid {
    pub l: u64,
    pub cells: usize,
}

/// Least common multiple of all denominators, if it fits under `cap`.
pub fn resolution<'a>(values: impl IntoIterator<Item = &'a Rat>, cap: u64) -> Option<u64> {
    let mut l = num_bigint::BigInt::from(1);
    for v in values {
        l = l.lcm(v.denom());
        if l > cap.into() {
            return None;
        }
    }
    l.to_u64()
}

pub fn set_values(s: &IntervalSet) -> Vec<Rat> {
    s.intervals().iter().flat_map(|iv| [iv.lo().clone(), iv.hi().clone()]).collect()
}

pub fn map_values(f: &PiecewiseAffineMap) -> Vec<Rat> {
    f.pieces()
        .iter()
        .flat_map(|p| [p.src.lo().clone(), p.src.hi().clone(), p.offset.clone()])
        .collect()
}

impl Grid {
    /// Grid of resolution `l` covering `[0, upper)`.
    pub fn new(l: u64, upper: &Rat) -> Grid {
        let cells = (upper * Rat::from_integer(l.into())).ceil().to_integer().to_usize().expect("grid size");
        Grid { l, cells }
    }

    fn index(&self, x: &Rat) -> usize {
        let y = x * Rat::from_integer(self.l.into());
        assert!(y.is_integer(), "{x} is not on the grid of width 1/{}", self.l);
        y.to_integer().to_usize().expect("nonnegative grid point")
    }

    pub fn set(&self, s: &IntervalSet) -> Vec<bool> {
        let mut out = vec![false; self.cells];
        for iv in s.intervals() {
            for c in self.index(iv.lo())..self.index(iv.hi()) {
                out[c] = true;
            }
        }
        out
    }

    /// Cell permutation of a slope-1 map; `NONE` off its domain.
    pub fn perm(&self, f: &PiecewiseAffineMap) -> Vec<u32> {
        let mut out = vec![NONE; self.cells];
        let one = Rat::from_integer(1.into());
        for p in f.pieces() {
            assert_eq!(p.slope, one, "grid oracle needs slope-1 maps");
            let shift = &p.offset * Rat::from_integer(self.l.into());
            assert!(shift.is_integer());
            let shift = shift.to_integer().to_i64().expect("small shift");
            for c in self.index(p.src.lo())..self.index(p.src.hi()) {
                out[c] = (c as i64 + shift) as u32;
            }
        }
        out
    }

    pub fn measure(&self, count: usize) -> Rat {
        Rat::new(count.into(), self.l.into())
    }

    pub fn count(s: &[bool]) -> usize {
        s.iter().filter(|&&b| b).count()
    }

    pub fn measure_of(&self, s: &[bool]) -> Rat {
        self.measure(Grid::count(s))
    }
}

pub fn image(perm: &[u32], s: &[bool]) -> Vec<bool> {
    let mut out = vec![false; s.len()];
    for (c, &inside) in s.iter().enumerate() {
        if inside {
            assert_ne!(perm[c], NONE, "set leaves the map's domain");
            out[perm[c] as usize] = true;
        }
    }
    out
}

pub fn compose(outer: &[u32], inner: &[u32]) -> Vec<u32> {
    inner.iter().map(|&c| if c == NONE { NONE } else { outer[c as usize] }).collect()
}

/// `perm^k` for `k >= 0` by repeated squaring.
pub fn power(perm: &[u32], mut k: u64) -> Vec<u32> {
    let mut result: Vec<u32> = (0..perm.len() as u32).map(|c| if perm[c as usize] == NONE { NONE } else { c }).collect();
    let mut base = perm.to_vec();
    while k > 0 {
        if k & 1 == 1 {
            result = compose(&base, &result);
        }
        base = compose(&base, &base);
        k >>= 1;
    }
    result
}

pub fn and_count(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| **x && **y).count()
}

pub fn xor_count(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| *x != *y).count()
}

pub fn is_zero(x: &Rat) -> bool {
    x.is_zero()
}
