use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{left_fill, uint, Interval, IntervalSet, Piece, PieceBudget, PiecewiseAffineMap, Rat};

/// Cells of the new tower base and the level partition built from them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerPartition {
    /// Base cells, sorted by left endpoint.
    pub cells: Vec<IntervalSet>,
    /// Slice of `J ∖ I*` attached to each cell, in cell order.
    pub slices: Vec<IntervalSet>,
    /// `levels[k]` maps the base onto level `k` (`R^k` restricted to the base).
    pub levels: Vec<PiecewiseAffineMap>,
    /// Element `k * cells.len() + c` is `R^k(cell c) ∪ S^k(slice c)`.
    pub p_prime: Vec<IntervalSet>,
}

impl TowerPartition {
    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn element(&self, level: usize, cell: usize) -> &IntervalSet {
        &self.p_prime[level * self.cells.len() + cell]
    }
}

/// Sorted, gap-free labelling of a region by partition index.
struct Labelling {
    parts: Vec<(Interval, usize)>,
}

impl Labelling {
    /// Labels each element of `partition` by its index and the rest of
    /// `space` by `partition.len()`.
    fn new(space: &IntervalSet, partition: &[IntervalSet]) -> Self {
        let mut parts = Vec::new();
        let mut covered = IntervalSet::empty();
        for (i, p) in partition.iter().enumerate() {
            let inside = p.intersect(space);
            parts.extend(inside.intervals().iter().map(|iv| (iv.clone(), i)));
            covered = covered.union(&inside);
        }
        let rest = space.difference(&covered);
        parts.extend(rest.intervals().iter().map(|iv| (iv.clone(), partition.len())));
        parts.sort_by(|a, b| a.0.lo().cmp(b.0.lo()));
        Labelling { parts }
    }

    /// Splits `iv` along label boundaries, in order.
    fn split(&self, iv: &Interval, mut visit: impl FnMut(Interval, usize)) -> Result<()> {
        let mut idx = self.parts.partition_point(|(p, _)| p.hi() <= iv.lo());
        let mut cursor = iv.lo().clone();
        while &cursor < iv.hi() {
            let (p, label) = self.parts.get(idx).ok_or(Error::SetOutsideDomain)?;
            if p.lo() > &cursor {
                return Err(Error::SetOutsideDomain);
            }
            let hi = p.hi().min(iv.hi()).clone();
            visit(Interval::try_new(cursor.clone(), hi.clone()).expect("nonempty"), *label);
            cursor = hi;
            idx += 1;
        }
        Ok(())
    }
}

/// Labels of level `level` pulled back to the base through `lift`.
fn pulled_labels(lift: &PiecewiseAffineMap, labels: &Labelling) -> Result<Vec<(Interval, usize)>> {
    let mut out = Vec::new();
    for g in lift.pieces() {
        labels.split(&g.image(), |sub, label| {
            let lo = (sub.lo() - &g.offset) / &g.slope;
            let hi = (sub.hi() - &g.offset) / &g.slope;
            out.push((Interval::try_new(lo, hi).expect("positive slope"), label));
        })?;
    }
    Ok(out)
}

/// Common refinement of two labellings of the same region, relabelled by
/// first appearance of each label pair.
fn refine(cur: &[(Interval, usize)], next: &[(Interval, usize)]) -> Vec<(Interval, usize)> {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out: Vec<(Interval, usize)> = Vec::with_capacity(cur.len().max(next.len()));
    let (mut i, mut j) = (0, 0);
    while i < cur.len() && j < next.len() {
        let (a, la) = &cur[i];
        let (b, lb) = &next[j];
        if let Some(part) = a.intersect(b) {
            let fresh = ids.len();
            let id = *ids.entry((*la, *lb)).or_insert(fresh);
            match out.last_mut() {
                Some((last, lid)) if *lid == id && last.hi() == part.lo() => {
                    *last = Interval::try_new(last.lo().clone(), part.hi().clone()).unwrap();
                }
                _ => out.push((part, id)),
            }
        }
        if a.hi() <= b.hi() {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Consecutive pieces of `set`, from the left, with the given measures.
fn carve(set: &IntervalSet, lengths: &[Rat]) -> Vec<IntervalSet> {
    let ivs = set.intervals();
    let mut out = Vec::with_capacity(lengths.len());
    let mut idx = 0usize;
    let mut pos = ivs.first().map(|iv| iv.lo().clone()).unwrap_or_else(Rat::zero);
    for len in lengths {
        let mut need = len.clone();
        let mut parts = Vec::new();
        while !need.is_zero() {
            let iv = &ivs[idx];
            let avail = iv.hi() - &pos;
            let take = (&avail).min(&need).clone();
            let hi = &pos + &take;
            parts.push(Interval::try_new(pos.clone(), hi.clone()).unwrap());
            need -= &take;
            pos = hi;
            if &pos == iv.hi() {
                idx += 1;
                if let Some(nx) = ivs.get(idx) {
                    pos = nx.lo().clone();
                }
            }
        }
        out.push(IntervalSet::from_intervals(parts));
    }
    out
}

/// Splits the tower base by the itinerary of its points through the levels
/// (which element of `p_prev`, or the uncovered rest, each level lands in),
/// then builds the level partition of the grafted tower.
pub fn build_partitions(
    r: &PiecewiseAffineMap,
    base: &IntervalSet,
    h: u64,
    p_prev: &[IntervalSet],
    s: &PiecewiseAffineMap,
    j_minus_istar: &IntervalSet,
    budget: &PieceBudget,
) -> Result<TowerPartition> {
    if h == 0 || base.is_empty() {
        return Err(Error::InvalidSpec("tower needs a nonempty base and positive height".into()));
    }
    let labels = Labelling::new(r.domain(), p_prev);
    let mut levels = Vec::with_capacity(h as usize);
    let mut lift = PiecewiseAffineMap::identity(base);
    let mut cur: Vec<(Interval, usize)> = base.intervals().iter().map(|iv| (iv.clone(), 0)).collect();
    for k in 0..h {
        let next = pulled_labels(&lift, &labels)?;
        cur = refine(&cur, &next);
        budget.check(cur.len())?;
        if k + 1 < h {
            let up = r.compose(&lift, budget)?;
            levels.push(std::mem::replace(&mut lift, up));
        } else {
            levels.push(lift.clone());
        }
    }

    let count = cur.iter().map(|(_, id)| id + 1).max().unwrap_or(0);
    let mut groups: Vec<Vec<Interval>> = vec![Vec::new(); count];
    for (iv, id) in cur {
        groups[id].push(iv);
    }
    let mut cells: Vec<IntervalSet> = groups.into_iter().map(IntervalSet::from_intervals).collect();
    cells.sort_by(|a, b| a.min().cmp(&b.min()));

    let ratio = j_minus_istar.measure() / base.measure();
    let lengths: Vec<Rat> = cells.iter().map(|c| c.measure() * &ratio).collect();
    let slices = carve(j_minus_istar, &lengths);

    let mut p_prime = Vec::with_capacity(cells.len() * h as usize);
    let mut s_levels = slices.clone();
    for (k, lift) in levels.iter().enumerate() {
        if k > 0 {
            for sl in s_levels.iter_mut() {
                if !sl.is_empty() {
                    *sl = s.image(sl)?;
                }
            }
        }
        for (c, sl) in cells.iter().zip(&s_levels) {
            p_prime.push(lift.image(c)?.union(sl));
        }
    }
    Ok(TowerPartition { cells, slices, levels, p_prime })
}

/// Parts of the contraction for one stage.
pub struct TauInput<'a> {
    pub partition: &'a TowerPartition,
    pub base: &'a IntervalSet,
    pub j_minus_istar: &'a IntervalSet,
    /// Length of one level of the interval cycle.
    pub step: &'a Rat,
    pub x_prime: &'a IntervalSet,
    pub residual: &'a IntervalSet,
}

/// Contraction from the grafted space onto the old one.
///
/// Each base cell together with its slice is filled from the left into the
/// cell; level `k` is conjugated up by the tower; `X'` is filled left to
/// right onto the residual.
pub fn build_tau(input: &TauInput<'_>, budget: &PieceBudget) -> Result<PiecewiseAffineMap> {
    let tp = input.partition;
    let tower_slope = input.base.measure() / (input.base.measure() + input.j_minus_istar.measure());
    let mut on_base = Vec::new();
    let mut on_slices = Vec::new();
    for (cell_idx, (cell, slice)) in tp.cells.iter().zip(&tp.slices).enumerate() {
        let need = &tower_slope * (cell.measure() + slice.measure());
        if need > cell.measure() {
            return Err(Error::ContainmentInfeasible(cell_idx));
        }
        let mut sources = cell.intervals().to_vec();
        sources.extend(slice.intervals().iter().cloned());
        for p in left_fill(&sources, cell.intervals(), &tower_slope)? {
            if input.base.contains(p.src.lo()) {
                on_base.push(p);
            } else {
                on_slices.push(p);
            }
        }
    }
    let tau_base = PiecewiseAffineMap::from_pieces(on_base)?;
    let tau_slices = PiecewiseAffineMap::from_pieces(on_slices)?;

    let mut pieces: Vec<Piece> = Vec::new();
    for (k, lift) in tp.levels.iter().enumerate() {
        let down = lift.invert();
        let part = lift.compose(&tau_base.compose(&down, budget)?, budget)?;
        pieces.extend(part.pieces().iter().cloned());
        if tau_slices.piece_count() > 0 {
            let shift = input.step * uint(k as u64);
            let back = PiecewiseAffineMap::from_pieces(
                input
                    .j_minus_istar
                    .intervals()
                    .iter()
                    .map(|iv| Piece::translation(iv.shift(&shift), -shift.clone()))
                    .collect(),
            )?;
            let part = lift.compose(&tau_slices.compose(&back, budget)?, budget)?;
            pieces.extend(part.pieces().iter().cloned());
        }
        budget.check(pieces.len())?;
    }
    if !input.x_prime.is_empty() {
        let slope = input.residual.measure() / input.x_prime.measure();
        pieces.extend(left_fill(input.x_prime.intervals(), input.residual.intervals(), &slope)?);
    }
    let tau = PiecewiseAffineMap::from_pieces(pieces)?;
    budget.check(tau.piece_count())?;
    Ok(tau)
}
