//! Cutting-and-stacking starters.
//!
//! A rank-one system is grown column by column: every stage cuts each level
//! of the current column into `r` equal subintervals, places the requested
//! number of fresh spacer levels on top of each subcolumn, and stacks the
//! subcolumns left to right. Spacers are taken from the free space to the
//! right of everything built so far, so the space is always one interval.
//! The stage map sends each level to the next one by translation and closes
//! the column up by sending the top level back to the base.

use crate::error::{Error, Result};
use crate::exact::{int, uint, Interval, IntervalSet, Piece, PieceBudget, PiecewiseAffineMap, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOneSpec {
    /// Number of subcolumns at each stage, all at least 2.
    pub cuts: Vec<u32>,
    /// Spacer counts placed on top of each subcolumn, one list per stage.
    pub spacers: Vec<Vec<u32>>,
    pub initial_base: Interval,
}

/// Which well-known starter a spec came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarterKind {
    /// Dyadic adding machine: ergodic, rigid along `2^m`, not weak mixing.
    Odometer,
    /// Chacón's map: weak mixing, not rigid.
    Chacon,
    Custom,
}

impl RankOneSpec {
    pub fn new(cuts: Vec<u32>, spacers: Vec<Vec<u32>>, initial_base: Interval) -> Result<Self> {
        if cuts.len() != spacers.len() {
            return Err(Error::InvalidSpec(format!(
                "{} cut counts but {} spacer lists",
                cuts.len(),
                spacers.len()
            )));
        }
        for (m, (&r, s)) in cuts.iter().zip(&spacers).enumerate() {
            if r < 2 {
                return Err(Error::InvalidSpec(format!("stage {m}: cut count {r} < 2")));
            }
            if s.len() != r as usize {
                return Err(Error::InvalidSpec(format!(
                    "stage {m}: {} spacer counts for {r} subcolumns",
                    s.len()
                )));
            }
        }
        Ok(RankOneSpec { cuts, spacers, initial_base })
    }

    /// Binary odometer on `[0, 1)` with `stages` doublings.
    pub fn odometer(stages: usize) -> Self {
        let base = Interval::new(int(0), int(1)).unwrap();
        Self::new(vec![2; stages], vec![vec![0, 0]; stages], base).unwrap()
    }

    /// Chacón's map (three subcolumns, one spacer on the middle one), scaled
    /// so that the stage-`stages` column fills exactly `[0, 1)`.
    ///
    /// Heights follow `h' = 3h + 1`, so stage `m` has `(3^(m+1) - 1) / 2`
    /// levels of width `1 / h_m` once fully built.
    pub fn chacon(stages: usize) -> Self {
        let pow = 3u64.pow(stages as u32);
        let w0 = Rat::new((2 * pow).into(), (3 * pow - 1).into());
        let base = Interval::new(int(0), w0).unwrap();
        Self::new(vec![3; stages], vec![vec![0, 1, 0]; stages], base).unwrap()
    }

    pub fn stages(&self) -> usize {
        self.cuts.len()
    }
}

#[derive(Clone, Debug)]
pub struct RankOneSystem {
    pub spec: RankOneSpec,
    pub stage: usize,
    /// Closed-up stage map, slope 1 everywhere, a bijection of `space`.
    pub map: PiecewiseAffineMap,
    pub tower_base: Interval,
    pub tower_height: u64,
    pub space: IntervalSet,
    /// Columns of every stage up to `stage`, bottom level first.
    columns: Vec<Vec<Interval>>,
}

/// A Rokhlin tower for a rank-one stage map: `height` disjoint images of
/// `base`, with `residual` the uncovered rest of the space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RokhlinTower {
    pub base: IntervalSet,
    pub residual: IntervalSet,
    pub height: u64,
    /// Native stage whose column was grouped to obtain the tower.
    pub native_stage: usize,
}

pub fn build_rank_one(spec: &RankOneSpec, m: usize, budget: &PieceBudget) -> Result<RankOneSystem> {
    if m > spec.stages() {
        return Err(Error::SpecExhausted { requested: m, available: spec.stages() });
    }
    let mut columns: Vec<Vec<Interval>> = vec![vec![spec.initial_base.clone()]];
    let mut width = spec.initial_base.length();
    let mut free = spec.initial_base.hi().clone();
    for stage in 0..m {
        let r = spec.cuts[stage];
        let sub_width = &width / uint(r as u64);
        let prev = columns.last().unwrap();
        let spacer_total: u64 = spec.spacers[stage].iter().map(|&s| s as u64).sum();
        let new_len = prev.len() * r as usize + spacer_total as usize;
        budget.check(new_len)?;
        let mut next = Vec::with_capacity(new_len);
        for j in 0..r {
            let shift = &sub_width * uint(j as u64);
            for level in prev {
                let lo = level.lo() + &shift;
                let hi = &lo + &sub_width;
                next.push(Interval::new(lo, hi)?);
            }
            for _ in 0..spec.spacers[stage][j as usize] {
                let hi = &free + &sub_width;
                next.push(Interval::new(free.clone(), hi.clone())?);
                free = hi;
            }
        }
        columns.push(next);
        width = sub_width;
    }
    let column = columns.last().unwrap();
    let mut pieces = Vec::with_capacity(column.len());
    for k in 0..column.len() {
        let to = &column[(k + 1) % column.len()];
        pieces.push(Piece::translation(column[k].clone(), to.lo() - column[k].lo()));
    }
    let map = PiecewiseAffineMap::from_pieces(pieces)?;
    budget.check(map.piece_count())?;
    let space = IntervalSet::span(spec.initial_base.lo().clone(), free)?;
    debug_assert_eq!(map.domain(), &space);
    Ok(RankOneSystem {
        spec: spec.clone(),
        stage: m,
        tower_base: column[0].clone(),
        tower_height: column.len() as u64,
        map,
        space,
        columns,
    })
}

impl RankOneSystem {
    /// Levels of the native column at stage `m` (bottom first).
    pub fn column(&self, m: usize) -> Option<&[Interval]> {
        self.columns.get(m).map(Vec::as_slice)
    }

    pub fn native_heights(&self) -> Vec<u64> {
        self.columns.iter().map(|c| c.len() as u64).collect()
    }

    /// Tower of height `h` with residual measure `< eps`, obtained by
    /// grouping `h` consecutive levels of the shallowest native column that
    /// achieves the bound. Levels of an earlier column are moved up by the
    /// current map exactly as in that column, except for its top level, which
    /// grouping never uses as a source.
    pub fn rokhlin_tower(&self, h: u64, eps: &Rat) -> Result<RokhlinTower> {
        if h == 0 {
            return Err(Error::InvalidSpec("tower height must be positive".into()));
        }
        for m in 0..self.columns.len() {
            match self.grouped_residual_measure(m, h) {
                Some(r) if &r < eps => return Ok(self.grouped_tower(m, h).expect("height checked")),
                _ => {}
            }
        }
        Err(Error::ResidualTooLarge { height: h, eps: eps.clone() })
    }

    /// Residual measure of the height-`h` grouping of column `m`, or `None`
    /// when that column is shorter than `h`.
    pub fn grouped_residual_measure(&self, m: usize, h: u64) -> Option<Rat> {
        let column = self.columns.get(m)?;
        let height = column.len() as u64;
        if h == 0 || height < h {
            return None;
        }
        let used = height / h * h;
        Some(self.space.measure() - column[0].length() * uint(used))
    }

    /// Height-`h` grouping of column `m`: full groups of `h` consecutive
    /// levels, the leftover top levels and later spacers forming the residual.
    pub fn grouped_tower(&self, m: usize, h: u64) -> Option<RokhlinTower> {
        let column = self.columns.get(m)?;
        let height = column.len() as u64;
        if h == 0 || height < h {
            return None;
        }
        let groups = height / h;
        let used = (groups * h) as usize;
        let base = IntervalSet::from_intervals(
            (0..groups).map(|j| column[(j * h) as usize].clone()).collect(),
        );
        let covered = IntervalSet::from_intervals(column[..used].to_vec());
        let residual = self.space.difference(&covered);
        Some(RokhlinTower { base, residual, height: h, native_stage: m })
    }
}

/// Strictly increasing sequence of positive times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigiditySequence {
    terms: Vec<u64>,
}

impl RigiditySequence {
    pub fn new(terms: Vec<u64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidSpec("rigidity sequence is empty".into()));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("rigidity sequence must increase strictly".into()));
        }
        Ok(RigiditySequence { terms })
    }

    pub fn terms(&self) -> &[u64] {
        &self.terms
    }

    /// Largest term not exceeding `bound`.
    pub fn largest_at_most(&self, bound: u64) -> Option<u64> {
        let idx = self.terms.partition_point(|&t| t <= bound);
        idx.checked_sub(1).map(|i| self.terms[i])
    }
}

/// Denominators `q_1, q_2, ...` of the convergents of `[0; a_1, a_2, ...]`,
/// via `q_k = a_k q_{k-1} + q_{k-2}` with `q_{-1} = 0`, `q_0 = 1`.
///
/// Returns at most `min(count, cf.len())` terms and stops early on `u64`
/// overflow.
pub fn convergent_denominators(cf: &[u64], count: usize) -> Result<RigiditySequence> {
    let (mut q2, mut q1) = (0u64, 1u64);
    let mut terms = Vec::new();
    for &a in cf.iter().take(count) {
        let Some(q) = a.checked_mul(q1).and_then(|v| v.checked_add(q2)) else {
            break;
        };
        terms.push(q);
        q2 = q1;
        q1 = q;
    }
    RigiditySequence::new(terms)
}

/// `#(A ∩ {1, ..., k}) / k`.
pub fn density(seq: &RigiditySequence, k: u64) -> Result<Rat> {
    if k == 0 {
        return Err(Error::InvalidSpec("density needs k >= 1".into()));
    }
    let count = seq.terms.iter().filter(|&&t| t >= 1 && t <= k).count() as u64;
    Ok(Rat::new(count.into(), k.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{pow2_inv, rat};

    fn budget() -> PieceBudget {
        PieceBudget::default()
    }

    #[test]
    fn odometer_stage_three() {
        let sys = build_rank_one(&RankOneSpec::odometer(3), 3, &budget()).unwrap();
        assert_eq!(sys.tower_height, 8);
        assert_eq!(sys.tower_base, Interval::new(int(0), rat(1, 8)).unwrap());
        assert_eq!(sys.space, IntervalSet::span(int(0), int(1)).unwrap());
        assert!(sys.map.is_measure_preserving());
        // Bit-reversal order of the dyadic levels.
        let starts: Vec<Rat> = sys.column(3).unwrap().iter().map(|l| l.lo().clone()).collect();
        let expected: Vec<Rat> = [0, 4, 2, 6, 1, 5, 3, 7].iter().map(|&k| rat(k, 8)).collect();
        assert_eq!(starts, expected);
    }

    #[test]
    fn chacon_heights() {
        let sys = build_rank_one(&RankOneSpec::chacon(3), 3, &budget()).unwrap();
        assert_eq!(sys.native_heights(), vec![1, 4, 13, 40]);
        assert_eq!(sys.space.measure(), int(1));
        assert!(sys.map.is_measure_preserving());
    }

    #[test]
    fn stage_zero_is_identity_tower() {
        let spec = RankOneSpec::chacon(4);
        let sys = build_rank_one(&spec, 0, &budget()).unwrap();
        assert_eq!(sys.tower_height, 1);
        assert!(sys.map.is_identity());
        assert_eq!(sys.space, IntervalSet::from(spec.initial_base.clone()));
    }

    #[test]
    fn spec_exhaustion_and_validation() {
        assert!(matches!(
            build_rank_one(&RankOneSpec::odometer(2), 3, &budget()),
            Err(Error::SpecExhausted { .. })
        ));
        let base = Interval::new(int(0), int(1)).unwrap();
        assert!(RankOneSpec::new(vec![1], vec![vec![0]], base.clone()).is_err());
        assert!(RankOneSpec::new(vec![2], vec![vec![0]], base).is_err());
    }

    #[test]
    fn odometer_adds_with_carry() {
        let sys = build_rank_one(&RankOneSpec::odometer(4), 4, &budget()).unwrap();
        let t2 = sys.map.iterate(2, &budget()).unwrap();
        // 1/4 = digits (0,1) = 2; 2 + 2 = 4 = digits (0,0,1) = 1/8.
        assert_eq!(t2.apply(&rat(1, 4)).unwrap(), rat(1, 8));
    }

    #[test]
    fn tower_examples() {
        let sys = build_rank_one(&RankOneSpec::odometer(5), 5, &budget()).unwrap();
        let t = sys.rokhlin_tower(8, &rat(1, 100)).unwrap();
        assert_eq!(t.native_stage, 3);
        assert!(t.residual.is_empty());
        assert_eq!(t.base, IntervalSet::span(int(0), rat(1, 8)).unwrap());

        // Height 3: stages 2 and 3 leave 1/4 uncovered, stage 4 leaves 1/16.
        let t3 = sys.rokhlin_tower(3, &rat(1, 4)).unwrap();
        assert_eq!(t3.native_stage, 4);
        assert_eq!(t3.residual.measure(), pow2_inv(4));
        let shallow = build_rank_one(&RankOneSpec::odometer(3), 3, &budget()).unwrap();
        assert!(matches!(
            shallow.rokhlin_tower(3, &rat(1, 4)),
            Err(Error::ResidualTooLarge { .. })
        ));

        let ch = build_rank_one(&RankOneSpec::chacon(3), 3, &budget()).unwrap();
        let native = ch.rokhlin_tower(40, &rat(1, 1000)).unwrap();
        assert!(native.residual.is_empty());
    }

    #[test]
    fn tower_levels_disjoint_and_measure_identity() {
        let sys = build_rank_one(&RankOneSpec::chacon(5), 5, &budget()).unwrap();
        for h in [2u64, 5, 7, 16] {
            let t = sys.rokhlin_tower(h, &rat(1, 5)).unwrap();
            let mut level = t.base.clone();
            let mut union = IntervalSet::empty();
            for _ in 0..h {
                assert!(union.is_disjoint(&level));
                union = union.union(&level);
                level = sys.map.image(&level).unwrap();
            }
            assert_eq!(union.union(&t.residual), sys.space);
            assert_eq!(
                t.residual.measure() + t.base.measure() * uint(h),
                sys.space.measure()
            );
        }
    }

    #[test]
    fn convergent_denominator_examples() {
        let golden = convergent_denominators(&[1, 1, 1, 1, 1, 1], 5).unwrap();
        assert_eq!(golden.terms(), &[1, 2, 3, 5, 8]);
        let sqrt2 = convergent_denominators(&[2, 2, 2], 3).unwrap();
        assert_eq!(sqrt2.terms(), &[2, 5, 12]);
        assert_eq!(convergent_denominators(&[7, 3], 1).unwrap().terms(), &[7]);
    }

    #[test]
    fn density_examples() {
        let evens = RigiditySequence::new((1..=20).map(|k| 2 * k).collect()).unwrap();
        assert_eq!(density(&evens, 10).unwrap(), rat(1, 2));
        let one = RigiditySequence::new(vec![1]).unwrap();
        assert_eq!(density(&one, 10).unwrap(), rat(1, 10));
        let fib = RigiditySequence::new(vec![1, 2, 3, 5, 8]).unwrap();
        assert_eq!(density(&fib, 8).unwrap(), rat(5, 8));
        assert!(density(&fib, 0).is_err());
        assert!(RigiditySequence::new(vec![2, 2]).is_err());
    }
}
