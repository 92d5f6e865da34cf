use std::fmt;

use num_traits::{One, Zero};

use super::interval::{Interval, IntervalSet};
use super::rat::{parse_rat, Rat};
use crate::error::{Error, Result};

/// Upper bound on the number of pieces any produced map may have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PieceBudget {
    pub max_pieces: usize,
}

impl Default for PieceBudget {
    fn default() -> Self {
        PieceBudget { max_pieces: 1_000_000 }
    }
}

impl PieceBudget {
    pub fn new(max_pieces: usize) -> Self {
        PieceBudget { max_pieces }
    }

    pub fn check(&self, pieces: usize) -> Result<()> {
        if pieces > self.max_pieces {
            Err(Error::PieceBudgetExceeded { pieces, budget: self.max_pieces })
        } else {
            Ok(())
        }
    }
}

/// One affine branch `x -> slope * x + offset` on `src`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub src: Interval,
    pub slope: Rat,
    pub offset: Rat,
}

impl Piece {
    pub fn new(src: Interval, slope: Rat, offset: Rat) -> Self {
        Piece { src, slope, offset }
    }

    pub fn translation(src: Interval, offset: Rat) -> Self {
        Piece { src, slope: Rat::one(), offset }
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        &self.slope * x + &self.offset
    }

    pub fn image(&self) -> Interval {
        Interval::try_new(self.eval(self.src.lo()), self.eval(self.src.hi()))
            .expect("positive slope keeps intervals nonempty")
    }

    /// Preimage under this branch of a subinterval of its image.
    fn pull_back(&self, iv: &Interval) -> Interval {
        let lo = (iv.lo() - &self.offset) / &self.slope;
        let hi = (iv.hi() - &self.offset) / &self.slope;
        Interval::try_new(lo, hi).expect("positive slope keeps intervals nonempty")
    }

    fn restrict(&self, sub: Interval) -> Piece {
        Piece { src: sub, slope: self.slope.clone(), offset: self.offset.clone() }
    }

    fn same_branch(&self, other: &Piece) -> bool {
        self.slope == other.slope && self.offset == other.offset
    }
}

/// Invertible map made of finitely many increasing affine branches.
///
/// Pieces are sorted by source, their sources tile `domain`, their images
/// tile `range`, and adjacent pieces with an identical branch are merged, so
/// two maps that agree everywhere compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseAffineMap {
    pieces: Vec<Piece>,
    domain: IntervalSet,
    range: IntervalSet,
}

impl PiecewiseAffineMap {
    /// Validating constructor: sources and images must each be pairwise
    /// disjoint and every slope positive.
    pub fn from_pieces(mut pieces: Vec<Piece>) -> Result<Self> {
        if let Some(p) = pieces.iter().find(|p| p.slope <= Rat::zero()) {
            return Err(Error::NotABijection(format!("non-positive slope {}", p.slope)));
        }
        pieces.sort_by(|a, b| a.src.lo().cmp(b.src.lo()));
        for w in pieces.windows(2) {
            if w[0].src.hi() > w[1].src.lo() {
                return Err(Error::NotABijection(format!(
                    "overlapping sources at {}",
                    w[1].src.lo()
                )));
            }
        }
        let mut images: Vec<Interval> = pieces.iter().map(Piece::image).collect();
        images.sort();
        for w in images.windows(2) {
            if w[0].hi() > w[1].lo() {
                return Err(Error::NotABijection(format!(
                    "overlapping images at {}",
                    w[1].lo()
                )));
            }
        }
        Ok(Self::from_sorted_unchecked(pieces))
    }

    /// Pieces must already be sorted by source and form a bijection.
    pub(crate) fn from_sorted_unchecked(pieces: Vec<Piece>) -> Self {
        let mut merged: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match merged.last_mut() {
                Some(last) if last.src.hi() == p.src.lo() && last.same_branch(&p) => {
                    last.src = Interval::try_new(last.src.lo().clone(), p.src.hi().clone())
                        .expect("adjacent merge");
                }
                _ => merged.push(p),
            }
        }
        let domain = IntervalSet::from_sorted_disjoint(merged.iter().map(|p| p.src.clone()).collect());
        let range = IntervalSet::from_intervals(merged.iter().map(Piece::image).collect());
        PiecewiseAffineMap { pieces: merged, domain, range }
    }

    pub fn identity(domain: &IntervalSet) -> Self {
        Self::from_sorted_unchecked(
            domain
                .intervals()
                .iter()
                .map(|iv| Piece::translation(iv.clone(), Rat::zero()))
                .collect(),
        )
    }

    pub fn empty() -> Self {
        Self::from_sorted_unchecked(Vec::new())
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn domain(&self) -> &IntervalSet {
        &self.domain
    }

    pub fn range(&self) -> &IntervalSet {
        &self.range
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.pieces.iter().all(|p| p.slope.is_one())
    }

    pub fn is_identity(&self) -> bool {
        self.pieces.iter().all(|p| p.slope.is_one() && p.offset.is_zero())
    }

    /// Index of the first piece whose source ends after `x`.
    fn first_after(&self, x: &Rat) -> usize {
        self.pieces.partition_point(|p| p.src.hi() <= x)
    }

    fn piece_at(&self, x: &Rat) -> Option<&Piece> {
        self.pieces.get(self.first_after(x)).filter(|p| p.src.contains(x))
    }

    pub fn apply(&self, x: &Rat) -> Result<Rat> {
        self.piece_at(x)
            .map(|p| p.eval(x))
            .ok_or_else(|| Error::PointOutsideDomain(x.clone()))
    }

    pub fn invert(&self) -> Self {
        let mut inv: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| {
                let slope = p.slope.recip();
                let offset = -(&p.offset * &slope);
                Piece { src: p.image(), slope, offset }
            })
            .collect();
        inv.sort_by(|a, b| a.src.lo().cmp(b.src.lo()));
        Self::from_sorted_unchecked(inv)
    }

    /// Walks the pieces of `self` overlapping `iv`, yielding each overlap.
    fn for_each_overlap(
        &self,
        iv: &Interval,
        mut visit: impl FnMut(&Piece, Interval),
    ) -> Result<()> {
        let mut cursor = iv.lo().clone();
        let mut idx = self.first_after(iv.lo());
        while &cursor < iv.hi() {
            let p = self.pieces.get(idx).ok_or(Error::DomainMismatch)?;
            if p.src.lo() > &cursor {
                return Err(Error::DomainMismatch);
            }
            let hi = p.src.hi().min(iv.hi()).clone();
            let sub = Interval::try_new(cursor.clone(), hi.clone()).expect("nonempty overlap");
            visit(p, sub);
            cursor = hi;
            idx += 1;
        }
        Ok(())
    }

    /// `self ∘ inner`. The range of `inner` must lie in the domain of `self`;
    /// the result has the domain of `inner`.
    pub fn compose(&self, inner: &PiecewiseAffineMap, budget: &PieceBudget) -> Result<Self> {
        let mut out: Vec<Piece> = Vec::with_capacity(inner.pieces.len() + self.pieces.len());
        for g in &inner.pieces {
            let img = g.image();
            self.for_each_overlap(&img, |f, sub| {
                let src = g.pull_back(&sub);
                let slope = &f.slope * &g.slope;
                let offset = &f.slope * &g.offset + &f.offset;
                out.push(Piece { src, slope, offset });
            })?;
        }
        let map = Self::from_sorted_unchecked(out);
        budget.check(map.piece_count())?;
        Ok(map)
    }

    /// `self` applied `k` times (`k < 0` iterates the inverse; `k = 0` is the
    /// identity on the domain). Requires `domain = range`.
    pub fn iterate(&self, k: i64, budget: &PieceBudget) -> Result<Self> {
        if self.domain != self.range {
            return Err(Error::DomainMismatch);
        }
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::identity(&self.domain);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = sq.compose(&acc, budget)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.compose(&sq, budget)?;
            }
        }
        Ok(acc)
    }

    /// Forward image of `set`, which must lie inside the domain.
    pub fn image(&self, set: &IntervalSet) -> Result<IntervalSet> {
        let mut out = Vec::with_capacity(set.len());
        for iv in set.intervals() {
            self.for_each_overlap(iv, |p, sub| {
                out.push(Interval::try_new(p.eval(sub.lo()), p.eval(sub.hi())).unwrap())
            })
            .map_err(|_| Error::SetOutsideDomain)?;
        }
        Ok(IntervalSet::from_intervals(out))
    }

    /// Preimage of `set`, which must lie inside the range.
    pub fn preimage(&self, set: &IntervalSet) -> Result<IntervalSet> {
        self.invert().image(set)
    }

    /// Restriction to a subset of the domain.
    pub fn restrict(&self, set: &IntervalSet) -> Result<Self> {
        let mut out = Vec::new();
        for iv in set.intervals() {
            self.for_each_overlap(iv, |p, sub| out.push(p.restrict(sub)))
                .map_err(|_| Error::SetOutsideDomain)?;
        }
        Ok(Self::from_sorted_unchecked(out))
    }

    /// Union of two maps with disjoint domains and disjoint ranges.
    pub fn disjoint_union(&self, other: &PiecewiseAffineMap) -> Result<Self> {
        if !self.domain.is_disjoint(&other.domain) || !self.range.is_disjoint(&other.range) {
            return Err(Error::NotABijection("overlapping union".into()));
        }
        let mut pieces = Vec::with_capacity(self.pieces.len() + other.pieces.len());
        pieces.extend(self.pieces.iter().cloned());
        pieces.extend(other.pieces.iter().cloned());
        pieces.sort_by(|a, b| a.src.lo().cmp(b.src.lo()));
        Ok(Self::from_sorted_unchecked(pieces))
    }

    /// Points of the common domain where the two maps take different values
    /// (up to finitely many points).
    pub fn disagreement(&self, other: &PiecewiseAffineMap) -> IntervalSet {
        let common = self.domain.intersect(&other.domain);
        let mut out = Vec::new();
        for iv in common.intervals() {
            let mut mine = Vec::new();
            self.for_each_overlap(iv, |p, sub| mine.push((p.clone(), sub))).expect("common domain");
            for (p, sub) in mine {
                other
                    .for_each_overlap(&sub, |q, part| {
                        if !p.same_branch(q) {
                            out.push(part);
                        }
                    })
                    .expect("common domain");
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// All distinct piece endpoints and offsets, for grid-resolution checks.
    pub fn rationals(&self) -> impl Iterator<Item = &Rat> {
        self.pieces.iter().flat_map(|p| [p.src.lo(), p.src.hi(), &p.offset, &p.slope])
    }

    /// Canonical text block: one `src_lo src_hi slope offset` line per piece.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.pieces {
            s.push_str(&format!("{} {} {} {}\n", p.src.lo(), p.src.hi(), p.slope, p.offset));
        }
        s
    }

    pub fn parse_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut pieces = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("expected 4 fields, got `{line}`")));
            }
            let src = Interval::new(parse_rat(f[0])?, parse_rat(f[1])?)?;
            pieces.push(Piece::new(src, parse_rat(f[2])?, parse_rat(f[3])?));
        }
        Self::from_pieces(pieces)
    }
}

impl fmt::Display for PiecewiseAffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Maps the concatenation of `sources` (in order) onto the concatenation of
/// `targets` (in order) with a single slope, filling targets from the left.
///
/// The total source length times `slope` must equal the total target length.
pub fn left_fill(sources: &[Interval], targets: &[Interval], slope: &Rat) -> Result<Vec<Piece>> {
    let mut out = Vec::new();
    let mut ti = 0usize;
    // Consumed length of the current target.
    let mut tpos = Rat::zero();
    for s in sources {
        let mut spos = s.lo().clone();
        while &spos < s.hi() {
            let t = targets
                .get(ti)
                .ok_or_else(|| Error::NotABijection("left fill overflows targets".into()))?;
            let t_left = t.length() - &tpos;
            let s_left_image = (s.hi() - &spos) * slope;
            let take = (&t_left).min(&s_left_image).clone();
            let src_len = &take / slope;
            let src_hi = &spos + &src_len;
            let tgt_lo = t.lo() + &tpos;
            let offset = &tgt_lo - slope * &spos;
            out.push(Piece::new(
                Interval::try_new(spos.clone(), src_hi.clone()).unwrap(),
                slope.clone(),
                offset,
            ));
            spos = src_hi;
            tpos += take;
            if tpos == t.length() {
                ti += 1;
                tpos = Rat::zero();
            }
        }
    }
    if ti != targets.len() {
        return Err(Error::NotABijection("left fill leaves targets uncovered".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::{int, rat};

    fn iv(a: Rat, b: Rat) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn unit() -> IntervalSet {
        IntervalSet::from(iv(int(0), int(1)))
    }

    /// Rotation of [0,1) by 1/2 as two pieces.
    fn half_rotation() -> PiecewiseAffineMap {
        PiecewiseAffineMap::from_pieces(vec![
            Piece::translation(iv(int(0), rat(1, 2)), rat(1, 2)),
            Piece::translation(iv(rat(1, 2), int(1)), rat(-1, 2)),
        ])
        .unwrap()
    }

    /// The 4-cycle on [1,2) with step 1/4.
    fn four_cycle() -> PiecewiseAffineMap {
        PiecewiseAffineMap::from_pieces(vec![
            Piece::translation(iv(int(1), rat(7, 4)), rat(1, 4)),
            Piece::translation(iv(rat(7, 4), int(2)), rat(-3, 4)),
        ])
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let id = PiecewiseAffineMap::identity(&unit());
        assert_eq!(id.apply(&rat(1, 3)).unwrap(), rat(1, 3));
        assert_eq!(four_cycle().apply(&int(1)).unwrap(), rat(5, 4));
        let tau = PiecewiseAffineMap::from_pieces(vec![Piece::new(
            iv(int(0), int(1)),
            rat(1, 2),
            int(0),
        )])
        .unwrap();
        assert_eq!(tau.apply(&rat(1, 2)).unwrap(), rat(1, 4));
        assert_eq!(id.apply(&int(1)), Err(Error::PointOutsideDomain(int(1))));
    }

    #[test]
    fn invert_examples() {
        let id = PiecewiseAffineMap::identity(&unit());
        assert_eq!(id.invert(), id);
        let rot = half_rotation();
        let inv = rot.invert();
        for k in 0..10 {
            let x = rat(k, 10);
            assert_eq!(inv.apply(&rot.apply(&x).unwrap()).unwrap(), x);
        }
        let dbl = PiecewiseAffineMap::from_pieces(vec![Piece::new(iv(int(0), int(1)), int(2), int(0))])
            .unwrap();
        let half = dbl.invert();
        assert_eq!(half.pieces(), &[Piece::new(iv(int(0), int(2)), rat(1, 2), int(0))]);
    }

    #[test]
    fn compose_examples() {
        let b = PieceBudget::default();
        let rot = half_rotation();
        let id = PiecewiseAffineMap::identity(&unit());
        assert_eq!(id.compose(&rot, &b).unwrap(), rot);
        assert!(rot.compose(&rot, &b).unwrap().is_identity());

        let dbl = PiecewiseAffineMap::from_pieces(vec![Piece::new(iv(int(0), rat(1, 2)), int(2), int(0))])
            .unwrap();
        let half = PiecewiseAffineMap::from_pieces(vec![Piece::new(iv(int(0), int(1)), rat(1, 2), int(0))])
            .unwrap();
        let c = dbl.compose(&half, &b).unwrap();
        assert!(c.is_measure_preserving());
        assert!(c.is_identity());
        assert_eq!(c.domain().measure(), int(1));
    }

    #[test]
    fn compose_rejects_mismatch() {
        let b = PieceBudget::default();
        let rot = half_rotation();
        assert_eq!(rot.compose(&four_cycle(), &b), Err(Error::DomainMismatch));
    }

    #[test]
    fn budget_is_enforced() {
        let rot = half_rotation();
        let tight = PieceBudget::new(1);
        assert!(matches!(
            rot.compose(&PiecewiseAffineMap::identity(&unit()), &tight),
            Err(Error::PieceBudgetExceeded { .. })
        ));
    }

    #[test]
    fn iterate_examples() {
        let b = PieceBudget::default();
        let cyc = four_cycle();
        assert!(cyc.iterate(0, &b).unwrap().is_identity());
        assert!(cyc.iterate(4, &b).unwrap().is_identity());
        assert_eq!(cyc.iterate(-1, &b).unwrap(), cyc.invert());
        assert_eq!(cyc.iterate(3, &b).unwrap(), cyc.invert());
    }

    #[test]
    fn image_examples() {
        let cyc = four_cycle();
        let s = IntervalSet::from(iv(int(1), rat(5, 4)));
        assert_eq!(cyc.image(&s).unwrap(), IntervalSet::from(iv(rat(5, 4), rat(3, 2))));
        let half = PiecewiseAffineMap::from_pieces(vec![Piece::new(iv(int(0), int(1)), rat(1, 2), int(0))])
            .unwrap();
        assert_eq!(half.image(&unit()).unwrap().measure(), rat(1, 2));
        assert_eq!(cyc.image(&unit()), Err(Error::SetOutsideDomain));
    }

    #[test]
    fn disagreement_finds_differing_branches() {
        let rot = half_rotation();
        let id = PiecewiseAffineMap::identity(&unit());
        assert_eq!(rot.disagreement(&id), unit());
        assert!(rot.disagreement(&rot).is_empty());
    }

    #[test]
    fn left_fill_splits_across_targets() {
        let src = [iv(int(0), int(1)), iv(int(2), int(3))];
        let tgt = [iv(int(0), rat(1, 4)), iv(rat(1, 2), rat(5, 4))];
        let pieces = left_fill(&src, &tgt, &rat(1, 2)).unwrap();
        let m = PiecewiseAffineMap::from_pieces(pieces).unwrap();
        assert_eq!(m.apply(&rat(1, 2)).unwrap(), rat(1, 2));
        assert_eq!(m.apply(&int(2)).unwrap(), rat(3, 4));
        assert_eq!(m.range().measure(), int(1));
    }

    #[test]
    fn text_round_trip() {
        let rot = half_rotation();
        assert_eq!(PiecewiseAffineMap::parse_lines(rot.to_text().lines()).unwrap(), rot);
        assert!(PiecewiseAffineMap::parse_lines(["0 1 1 0", "1/2 1 1 0"]).is_err());
    }
}
