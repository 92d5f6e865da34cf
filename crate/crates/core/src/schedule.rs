//! Choice of the per-stage parameters `M_n`, `ε_n`, `h_n`, `δ_n`, `j_n`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{pow2_inv, uint, IntervalSet, PieceBudget, PiecewiseAffineMap, Rat};
use crate::rank_one::RigiditySequence;
use crate::stats::{correlations, rigidity_deviation, ProductSpec};

/// Parameters fixed for one stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StagePlan {
    pub n: usize,
    pub m: u64,
    pub h: u64,
    pub eps: Rat,
    pub delta: Rat,
    pub j: usize,
}

/// What a planner sees when stage `n` has just been formed.
pub struct PlanContext<'a> {
    pub n: usize,
    pub r: &'a PiecewiseAffineMap,
    pub mu_x: Rat,
    pub partition: &'a [IntervalSet],
    /// Plans of stages `1 .. n-1`.
    pub history: &'a [StagePlan],
}

pub trait Planner {
    fn plan(&mut self, ctx: &PlanContext<'_>) -> Result<StagePlan>;
}

/// `eps = largest 2^-k < eps_prev / (n M)`, `h = smallest 2^k > max(n M / eps_prev, M)`.
pub fn choose_eps_h(m: u64, n: u64, eps_prev: &Rat) -> Result<(Rat, u64)> {
    if m == 0 || n == 0 || !eps_prev.is_positive() {
        return Err(Error::InvalidSpec("choose_eps_h needs M, n >= 1 and eps_prev > 0".into()));
    }
    let nm = uint(n) * uint(m);
    let bound = eps_prev / &nm;
    let mut k = 0u32;
    while pow2_inv(k) >= bound {
        k += 1;
    }
    let eps = pow2_inv(k);
    let floor = (&nm / eps_prev).max(uint(m));
    let mut h = BigInt::one();
    while Rat::from_integer(h.clone()) <= floor {
        h <<= 1;
    }
    let h = u64::try_from(h).map_err(|_| Error::InvalidSpec(format!("h_{n} overflows u64")))?;
    Ok((eps, h))
}

/// Sort key of one entry: `-1 < 1 < -2 < 2 < ...`.
fn entry_key(e: i64) -> (u64, bool) {
    (e.unsigned_abs(), e > 0)
}

/// First `count` nonzero integer vectors of length `<= max_len` with entries
/// bounded by `max_abs`, ordered by length, then largest entry, then entries
/// lexicographically.
pub fn enumerate_vectors(count: usize, max_len: usize, max_abs: u64) -> Result<Vec<Vec<i64>>> {
    let entries: Vec<i64> = {
        let mut e: Vec<i64> = (1..=max_abs as i64).flat_map(|a| [-a, a]).collect();
        e.sort_by_key(|&x| entry_key(x));
        e
    };
    let available: usize = (1..=max_len as u32).map(|l| entries.len().pow(l)).sum();
    if count > available {
        return Err(Error::UniverseExhausted { requested: count, available });
    }
    let mut out: Vec<Vec<i64>> = Vec::with_capacity(count);
    for len in 1..=max_len {
        for bound in 1..=max_abs {
            // Vectors of this length whose largest entry is exactly `bound`,
            // produced in lexicographic order of entry keys.
            let allowed: Vec<i64> = entries.iter().copied().filter(|e| e.unsigned_abs() <= bound).collect();
            let mut idx = vec![0usize; len];
            loop {
                let v: Vec<i64> = idx.iter().map(|&i| allowed[i]).collect();
                if v.iter().any(|e| e.unsigned_abs() == bound) {
                    out.push(v);
                    if out.len() == count {
                        return Ok(out);
                    }
                }
                if !advance(&mut idx, allowed.len()) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Next index tuple in lexicographic order; false after the last one.
fn advance(idx: &mut [usize], radix: usize) -> bool {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < radix {
            return true;
        }
        idx[pos] = 0;
    }
    false
}

/// Result of searching for `M_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MSearch {
    pub m: u64,
    /// Largest scaled sum at `N = m` over all tested sets and vectors
    /// (zero when the mixing test is off).
    pub worst: Rat,
}

/// Which predicates `choose_m` enforces.
#[derive(Clone, Debug, Default)]
pub struct MCriteria<'a> {
    /// Vectors whose product sums must fall below `delta`; empty disables the
    /// mixing test.
    pub vectors: &'a [Vec<i64>],
    /// When set, `μ(R^ρ A △ A) < delta` for the largest `ρ <= M`.
    pub rigidity: Option<&'a RigiditySequence>,
}

/// Correlations `μ(A ∩ R^{±k} A)` for `k < len` in each direction needed.
struct SeriesCache {
    forward: Vec<Rat>,
    backward: Vec<Rat>,
}

fn series(
    r: &PiecewiseAffineMap,
    inv: &PiecewiseAffineMap,
    a: &IntervalSet,
    len: usize,
    need_back: bool,
) -> Result<SeriesCache> {
    let forward = correlations(r, a, a, len)?;
    let backward = if need_back { correlations(inv, a, a, len)? } else { Vec::new() };
    Ok(SeriesCache { forward, backward })
}

/// Prefix sums of the scaled-sum terms of vector `v` on the diagonal box
/// `A × ... × A`, for horizons `1 ..= horizon`.
fn vector_prefix(cache: &SeriesCache, a_measure: &Rat, mu_x: &Rat, v: &[i64], horizon: usize) -> Vec<Rat> {
    let l = v.len() as i32;
    let vol = mu_x.pow(l);
    let target = a_measure.pow(2 * l) / &vol;
    let mut acc = Rat::zero();
    (0..horizon)
        .map(|i| {
            let mut c = Rat::one();
            for &u in v {
                let k = u.unsigned_abs() as usize * i;
                c *= if u > 0 { &cache.forward[k] } else { &cache.backward[k] };
            }
            acc += (c - &target).abs();
            acc.clone()
        })
        .collect()
}

/// Smallest `M` in `(floor, cap]` meeting every enabled predicate for all sets
/// in `partition`, judging the mixing test at `N = M`.
#[allow(clippy::too_many_arguments)]
pub fn choose_m(
    r: &PiecewiseAffineMap,
    mu_x: &Rat,
    partition: &[IntervalSet],
    delta: &Rat,
    floor: u64,
    cap: u64,
    criteria: &MCriteria<'_>,
    budget: &PieceBudget,
) -> Result<MSearch> {
    if !delta.is_positive() {
        return Err(Error::InvalidSpec("delta must be positive".into()));
    }
    if floor >= cap {
        return Err(Error::SearchCapExceeded { cap, best: Rat::zero() });
    }
    let sets: Vec<&IntervalSet> = partition.iter().filter(|a| !a.is_empty()).collect();
    let mixing = !criteria.vectors.is_empty() && !sets.is_empty();
    let stretch = criteria.vectors.iter().flatten().map(|u| u.unsigned_abs()).max().unwrap_or(1) as usize;
    let need_back = criteria.vectors.iter().flatten().any(|&u| u < 0);
    let inv = r.invert();
    let mut rigid_cache: BTreeMap<u64, bool> = BTreeMap::new();
    let mut best = None::<Rat>;
    let mut horizon = cap.min((floor + 1).max(32) * 2);
    loop {
        // Prefix sums for every (set, vector) pair up to `horizon`.
        let prefixes: Vec<Vec<Vec<Rat>>> = if mixing {
            sets.par_iter()
                .map(|a| -> Result<Vec<Vec<Rat>>> {
                    let len = stretch * (horizon as usize - 1) + 1;
                    let cache = series(r, &inv, a, len, need_back)?;
                    let am = a.measure();
                    Ok(criteria
                        .vectors
                        .iter()
                        .map(|v| vector_prefix(&cache, &am, mu_x, v, horizon as usize))
                        .collect())
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        for m in floor + 1..=horizon {
            let worst = if mixing {
                let mut w = Rat::zero();
                for per_set in &prefixes {
                    for (pre, v) in per_set.iter().zip(criteria.vectors) {
                        let vol2 = mu_x.pow(2 * v.len() as i32);
                        let val = &pre[m as usize - 1] * vol2 / uint(m);
                        if val > w {
                            w = val;
                        }
                    }
                }
                w
            } else {
                Rat::zero()
            };
            if best.as_ref().is_none_or(|b| &worst < b) {
                best = Some(worst.clone());
            }
            if &worst >= delta {
                continue;
            }
            if let Some(seq) = criteria.rigidity {
                if let Some(rho) = seq.largest_at_most(m) {
                    let ok = match rigid_cache.get(&rho) {
                        Some(&ok) => ok,
                        None => {
                            let ok = sets
                                .par_iter()
                                .map(|a| rigidity_deviation(r, a, rho, budget).map(|d| &d < delta))
                                .collect::<Result<Vec<bool>>>()?
                                .into_iter()
                                .all(|x| x);
                            rigid_cache.insert(rho, ok);
                            ok
                        }
                    };
                    if !ok {
                        continue;
                    }
                }
            }
            return Ok(MSearch { m, worst });
        }
        if horizon >= cap {
            return Err(Error::SearchCapExceeded { cap, best: best.unwrap_or_else(Rat::zero) });
        }
        horizon = cap.min(horizon * 2);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Policy {
    /// Search for the smallest `M` passing the mixing test.
    #[default]
    Search,
    /// Take the smallest admissible `M` (subject to the rigidity test when on).
    Minimal,
}

/// How `δ_n` is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaRule {
    /// `δ_n = ratio^n`.
    Geometric(Rat),
    /// Explicit values for stages `1, 2, ...`; the last one repeats.
    List(Vec<Rat>),
}

impl Default for DeltaRule {
    fn default() -> Self {
        DeltaRule::Geometric(Rat::new(1.into(), 2.into()))
    }
}

impl DeltaRule {
    pub fn delta(&self, n: usize) -> Rat {
        match self {
            DeltaRule::Geometric(r) => r.pow(n as i32),
            DeltaRule::List(v) => v.get(n - 1).or(v.last()).cloned().unwrap_or_else(Rat::one),
        }
    }
}

/// Explicit values replacing the computed ones at one stage.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanOverride {
    pub m: Option<u64>,
    pub h: Option<u64>,
    pub eps: Option<Rat>,
}

#[derive(Clone, Debug)]
pub struct ScheduleConfig {
    pub policy: Policy,
    pub delta: DeltaRule,
    /// Cap on `j_n`.
    pub vector_budget: usize,
    /// Largest absolute exponent in enumerated vectors.
    pub max_abs: u64,
    pub search_cap: u64,
    pub rigidity: Option<RigiditySequence>,
    pub overrides: BTreeMap<usize, PlanOverride>,
    pub budget: PieceBudget,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            policy: Policy::Search,
            delta: DeltaRule::default(),
            vector_budget: 1,
            max_abs: 3,
            search_cap: 1 << 20,
            rigidity: None,
            overrides: BTreeMap::new(),
            budget: PieceBudget::default(),
        }
    }
}

/// Planner following the configured policy; records each search.
#[derive(Clone, Debug, Default)]
pub struct SchedulePlanner {
    pub config: ScheduleConfig,
    pub searches: Vec<(usize, MSearch)>,
}

impl SchedulePlanner {
    pub fn new(config: ScheduleConfig) -> Self {
        SchedulePlanner { config, searches: Vec::new() }
    }

    pub fn j_for(&self, n: usize) -> usize {
        n.min(self.config.vector_budget).max(1)
    }
}

impl Planner for SchedulePlanner {
    fn plan(&mut self, ctx: &PlanContext<'_>) -> Result<StagePlan> {
        let n = ctx.n;
        let prev = ctx.history.last();
        let floor = prev.map(|p| p.h.max(p.m)).unwrap_or(1);
        let eps_prev = prev.map(|p| p.eps.clone()).unwrap_or_else(Rat::one);
        let delta = self.config.delta.delta(n);
        let j = self.j_for(n);
        let over = self.config.overrides.get(&n).cloned().unwrap_or_default();
        let m = match over.m {
            Some(m) => m,
            None => {
                let vectors = match self.config.policy {
                    Policy::Search => enumerate_vectors(j, ProductSpec::MAX_LEN, self.config.max_abs)?,
                    Policy::Minimal => Vec::new(),
                };
                let criteria = MCriteria { vectors: &vectors, rigidity: self.config.rigidity.as_ref() };
                let found = choose_m(
                    ctx.r,
                    &ctx.mu_x,
                    ctx.partition,
                    &delta,
                    floor,
                    self.config.search_cap,
                    &criteria,
                    &self.config.budget,
                )?;
                let m = found.m;
                self.searches.push((n, found));
                m
            }
        };
        let (eps, h) = choose_eps_h(m, n as u64, &eps_prev)?;
        Ok(StagePlan { n, m, h: over.h.unwrap_or(h), eps: over.eps.unwrap_or(eps), delta, j })
    }
}

/// Planner replaying fixed plans, e.g. those read back from snapshots.
#[derive(Clone, Debug)]
pub struct FixedPlanner {
    pub plans: Vec<StagePlan>,
}

impl Planner for FixedPlanner {
    fn plan(&mut self, ctx: &PlanContext<'_>) -> Result<StagePlan> {
        self.plans
            .iter()
            .find(|p| p.n == ctx.n)
            .cloned()
            .ok_or(Error::DepthInsufficient { built: self.plans.len(), needed: ctx.n })
    }
}

/// Full parameter history of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleParams {
    pub delta: Vec<Rat>,
    pub m: Vec<u64>,
    pub eps: Vec<Rat>,
    pub h: Vec<u64>,
    pub j: Vec<usize>,
    pub rho: Option<RigiditySequence>,
    pub vector_budget: usize,
}

impl ScheduleParams {
    pub fn from_plans(plans: &[StagePlan], rho: Option<RigiditySequence>, vector_budget: usize) -> Self {
        ScheduleParams {
            delta: plans.iter().map(|p| p.delta.clone()).collect(),
            m: plans.iter().map(|p| p.m).collect(),
            eps: plans.iter().map(|p| p.eps.clone()).collect(),
            h: plans.iter().map(|p| p.h).collect(),
            j: plans.iter().map(|p| p.j).collect(),
            rho,
            vector_budget,
        }
    }

    /// Every violated inequality, as `(stage, description)`; empty when the
    /// schedule is admissible. Stage 0 is read as `h_0 = 1`, `M_0 = 0`,
    /// `ε_0 = 1`.
    pub fn violations(&self) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for i in 0..self.m.len() {
            let n = i + 1;
            let (h_prev, m_prev, eps_prev) = if i == 0 {
                (1, 0, Rat::one())
            } else {
                (self.h[i - 1], self.m[i - 1], self.eps[i - 1].clone())
            };
            let m = self.m[i];
            let nm = uint(n as u64) * uint(m);
            if m <= h_prev.max(m_prev) {
                out.push((n, format!("M_{n} = {m} <= max(h, M) of the previous stage")));
            }
            if self.h[i] <= m {
                out.push((n, format!("h_{n} = {} <= M_{n} = {m}", self.h[i])));
            }
            if &self.eps[i] * &nm >= eps_prev {
                out.push((n, format!("eps_{n} n M_{n} >= eps_{}", n - 1)));
            }
            if &nm / uint(self.h[i]) >= eps_prev {
                out.push((n, format!("n M_{n} / h_{n} >= eps_{}", n - 1)));
            }
        }
        out
    }
}
