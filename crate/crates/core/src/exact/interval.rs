use std::fmt;

use num_traits::Zero;

use super::rat::{parse_rat, Rat};
use crate::error::{Error, Result};

/// Half-open interval `[lo, hi)` with `lo < hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    lo: Rat,
    hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self> {
        if lo < hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::EmptyInterval(lo, hi))
        }
    }

    /// Returns `None` for an empty range instead of an error.
    pub fn try_new(lo: Rat, hi: Rat) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x < &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        Interval::try_new(lo, hi)
    }

    pub fn shift(&self, by: &Rat) -> Interval {
        Interval { lo: &self.lo + by, hi: &self.hi + by }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.lo, self.hi)
    }
}

/// Finite disjoint union of half-open intervals, sorted and with touching
/// intervals merged. The representation of a set is therefore unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    Difference,
    SymmetricDifference,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    pub fn from_interval(iv: Interval) -> Self {
        IntervalSet { intervals: vec![iv] }
    }

    pub fn span(lo: Rat, hi: Rat) -> Result<Self> {
        Ok(Self::from_interval(Interval::new(lo, hi)?))
    }

    /// Normalizes an arbitrary (possibly overlapping, unsorted) list.
    pub fn from_intervals(mut ivs: Vec<Interval>) -> Self {
        ivs.sort();
        let mut out: Vec<Interval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalSet { intervals: out }
    }

    /// Builds from intervals already sorted and pairwise disjoint; touching
    /// neighbours are still merged.
    pub(crate) fn from_sorted_disjoint(ivs: Vec<Interval>) -> Self {
        let mut out: Vec<Interval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            match out.last_mut() {
                Some(last) if last.hi == iv.lo => last.hi = iv.hi,
                _ => {
                    debug_assert!(out.last().is_none_or(|l| l.hi <= iv.lo));
                    out.push(iv)
                }
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn into_intervals(self) -> Vec<Interval> {
        self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> Rat {
        self.intervals.iter().fold(Rat::zero(), |acc, iv| acc + iv.length())
    }

    pub fn min(&self) -> Option<&Rat> {
        self.intervals.first().map(|iv| &iv.lo)
    }

    pub fn max(&self) -> Option<&Rat> {
        self.intervals.last().map(|iv| &iv.hi)
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let idx = self.intervals.partition_point(|iv| &iv.hi <= x);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(x))
    }

    pub fn shift(&self, by: &Rat) -> IntervalSet {
        IntervalSet { intervals: self.intervals.iter().map(|iv| iv.shift(by)).collect() }
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &IntervalSet) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Union)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Intersect)
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Difference)
    }

    pub fn symmetric_difference(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::SymmetricDifference)
    }

    /// Measure of the intersection without materializing it.
    pub fn intersection_measure(&self, other: &IntervalSet) -> Rat {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut total = Rat::zero();
        while i < a.len() && j < b.len() {
            if let Some(x) = a[i].intersect(&b[j]) {
                total += x.length();
            }
            if a[i].hi <= b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// Boolean combination by a sweep over all endpoints.
    pub fn combine(&self, other: &IntervalSet, op: SetOp) -> IntervalSet {
        let inside = |a: bool, b: bool| match op {
            SetOp::Union => a || b,
            SetOp::Intersect => a && b,
            SetOp::Difference => a && !b,
            SetOp::SymmetricDifference => a != b,
        };
        // Endpoint events, merged in sorted order.
        let mut events: Vec<&Rat> = Vec::with_capacity(2 * (self.len() + other.len()));
        {
            let ea = self.intervals.iter().flat_map(|iv| [&iv.lo, &iv.hi]);
            let eb = other.intervals.iter().flat_map(|iv| [&iv.lo, &iv.hi]);
            let (mut ea, mut eb) = (ea.peekable(), eb.peekable());
            loop {
                let next = match (ea.peek(), eb.peek()) {
                    (Some(x), Some(y)) => {
                        if x <= y {
                            ea.next()
                        } else {
                            eb.next()
                        }
                    }
                    (Some(_), None) => ea.next(),
                    (None, Some(_)) => eb.next(),
                    (None, None) => break,
                };
                let v = next.unwrap();
                if events.last() != Some(&v) {
                    events.push(v);
                }
            }
        }
        let mut out = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        let mut open: Option<&Rat> = None;
        for &x in events.iter().take(events.len().saturating_sub(1)) {
            while i < self.intervals.len() && &self.intervals[i].hi <= x {
                i += 1;
            }
            while j < other.intervals.len() && &other.intervals[j].hi <= x {
                j += 1;
            }
            let ina = self.intervals.get(i).is_some_and(|iv| &iv.lo <= x);
            let inb = other.intervals.get(j).is_some_and(|iv| &iv.lo <= x);
            match (inside(ina, inb), open) {
                (true, None) => open = Some(x),
                (false, Some(start)) => {
                    out.push(Interval { lo: start.clone(), hi: x.clone() });
                    open = None;
                }
                _ => {}
            }
        }
        if let (Some(start), Some(&end)) = (open, events.last()) {
            out.push(Interval { lo: start.clone(), hi: end.clone() });
        }
        IntervalSet { intervals: out }
    }

    /// Canonical text block: one `lo hi` line per interval.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for iv in &self.intervals {
            s.push_str(&iv.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<IntervalSet> {
        let mut ivs = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("expected `lo hi`, got `{line}`")));
            };
            ivs.push(Interval::new(parse_rat(a)?, parse_rat(b)?)?);
        }
        let set = IntervalSet::from_intervals(ivs.clone());
        if set.measure() != ivs.iter().fold(Rat::zero(), |a, iv| a + iv.length()) {
            return Err(Error::Parse("overlapping intervals in set block".into()));
        }
        Ok(set)
    }
}

impl From<Interval> for IntervalSet {
    fn from(iv: Interval) -> Self {
        IntervalSet::from_interval(iv)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "[{}, {})", iv.lo, iv.hi)?;
        }
        Ok(())
    }
}
