use num_traits::{One, Zero};

use super::cycle::{build_s, select_transfer_set, solve_transfer, IntervalCycle, TransferMode};
use super::tower::{build_partitions, build_tau, TauInput};
use crate::error::{Error, Result};
use crate::exact::{uint, IntervalSet, PieceBudget, PiecewiseAffineMap, Rat};
use crate::rank_one::{RankOneSystem, RokhlinTower};
use crate::schedule::{PlanContext, Planner, StagePlan};

/// Everything produced when stage `n` is grafted into stage `n + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    /// Tower base `I_n`.
    pub base: IntervalSet,
    /// Residual `E_n`.
    pub residual: IntervalSet,
    /// Native rank-one column the tower was grouped from.
    pub native_stage: usize,
    pub d: Rat,
    pub istar: IntervalSet,
    pub x_prime: IntervalSet,
    pub cells: Vec<IntervalSet>,
    pub p_prime: Vec<IntervalSet>,
    pub q: Vec<IntervalSet>,
    pub tau: PiecewiseAffineMap,
    /// Where `T_{n+1}` differs from `T_n`.
    pub changed: IntervalSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageState {
    pub n: usize,
    pub x: IntervalSet,
    pub cycle: IntervalCycle,
    pub r: PiecewiseAffineMap,
    /// Conjugacy `Ψ_n` from `X_n` onto `X_1`, with `R_n = Ψ_n⁻¹ R_1 Ψ_n`.
    pub psi: PiecewiseAffineMap,
    pub plan: StagePlan,
    /// Absent for the deepest built stage.
    pub transition: Option<Transition>,
}

impl StageState {
    pub fn mu_x(&self) -> Rat {
        self.x.measure()
    }

    pub fn b(&self) -> &Rat {
        &self.cycle.b
    }

    pub fn s(&self) -> &PiecewiseAffineMap {
        &self.cycle.map
    }

    /// `T_n = R_n ⊔ S_n` on `X_n ∪ Y_n`.
    pub fn t(&self) -> Result<PiecewiseAffineMap> {
        self.r.disjoint_union(&self.cycle.map)
    }

    /// `μ(D_n) / (ε_n + 1/h_n)`.
    pub fn kappa_ratio(&self) -> Option<Rat> {
        let tr = self.transition.as_ref()?;
        let scale = &self.plan.eps + Rat::new(1.into(), self.plan.h.into());
        Some(tr.changed.measure() / scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub mode: TransferMode,
    pub budget: PieceBudget,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { mode: TransferMode::Uniform, budget: PieceBudget::default() }
    }
}

/// The towerplex chain built so far.
#[derive(Clone, Debug)]
pub struct Chain {
    pub starter: RankOneSystem,
    pub config: ChainConfig,
    /// Partition of `X_1` that seeds the first cell split.
    pub initial_partition: Vec<IntervalSet>,
    stages: Vec<StageState>,
}

/// `parts` equal slices of the convex hull of `space`, clipped to `space`.
pub fn equal_partition(space: &IntervalSet, parts: usize) -> Result<Vec<IntervalSet>> {
    let (lo, hi) = match (space.min(), space.max()) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return Err(Error::InvalidSpec("empty space".into())),
    };
    if parts == 0 {
        return Err(Error::InvalidSpec("partition needs at least one part".into()));
    }
    let w = (&hi - &lo) / uint(parts as u64);
    (0..parts as u64)
        .map(|i| {
            let a = &lo + &w * uint(i);
            Ok(IntervalSet::span(a.clone(), a + &w)?.intersect(space))
        })
        .collect()
}

impl Chain {
    /// Stage 1: `R_1` is the starter, `Ψ_1` the identity.
    pub fn start(
        starter: RankOneSystem,
        config: ChainConfig,
        initial_partition: Vec<IntervalSet>,
        planner: &mut dyn Planner,
    ) -> Result<Chain> {
        let x = starter.space.clone();
        let r = starter.map.clone();
        let plan = planner.plan(&PlanContext {
            n: 1,
            r: &r,
            mu_x: x.measure(),
            partition: &initial_partition,
            history: &[],
        })?;
        let b0 = x.max().cloned().ok_or_else(|| Error::InvalidSpec("empty starter".into()))?;
        let cycle = build_s(1, plan.h, &b0)?;
        let psi = PiecewiseAffineMap::identity(&x);
        let first = StageState { n: 1, x, cycle, r, psi, plan, transition: None };
        Ok(Chain { starter, config, initial_partition, stages: vec![first] })
    }

    /// Reassembles a chain from stored stages, e.g. when resuming.
    pub fn from_stages(
        starter: RankOneSystem,
        config: ChainConfig,
        initial_partition: Vec<IntervalSet>,
        stages: Vec<StageState>,
    ) -> Result<Chain> {
        if stages.is_empty() || stages.iter().enumerate().any(|(i, s)| s.n != i + 1) {
            return Err(Error::InvalidSpec("stages must be numbered 1, 2, ... without gaps".into()));
        }
        Ok(Chain { starter, config, initial_partition, stages })
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[StageState] {
        &self.stages
    }

    pub fn into_stages(self) -> Vec<StageState> {
        self.stages
    }

    /// Stage `n`, 1-based.
    pub fn stage(&self, n: usize) -> Result<&StageState> {
        n.checked_sub(1)
            .and_then(|i| self.stages.get(i))
            .ok_or(Error::DepthInsufficient { built: self.stages.len(), needed: n })
    }

    pub fn plans(&self) -> Vec<StagePlan> {
        self.stages.iter().map(|s| s.plan.clone()).collect()
    }

    /// Partition used to seed stage `n`'s cells and to test its schedule:
    /// the initial partition for `n = 1`, else `P'_{n-1}`.
    pub fn approximating_partition(&self, n: usize) -> Result<&[IntervalSet]> {
        if n == 1 {
            return Ok(&self.initial_partition);
        }
        let prev = self.stage(n - 1)?;
        prev.transition
            .as_ref()
            .map(|t| t.p_prime.as_slice())
            .ok_or(Error::DepthInsufficient { built: self.stages.len(), needed: n })
    }

    /// Largest `μ(D_n) / (ε_n + 1/h_n)` over all stages with a transition.
    pub fn kappa(&self) -> Option<Rat> {
        self.stages.iter().filter_map(StageState::kappa_ratio).max()
    }

    /// Tower for `R_n` with residual below `ε_n`, pulled back from a grouped
    /// native tower of the starter.
    fn tower_for(&self, st: &StageState) -> Result<(RokhlinTower, IntervalSet, IntervalSet)> {
        let h = st.plan.h;
        let down = st.psi.invert();
        let mu_x1 = self.starter.space.measure();
        let candidates: Vec<usize> = match self.config.mode {
            TransferMode::Uniform => {
                // Ψ_n scales every measure by μ(X_1)/μ(X_n).
                let eps = &st.plan.eps * &mu_x1 / st.mu_x();
                let t = self.starter.rokhlin_tower(h, &eps)?;
                vec![t.native_stage]
            }
            TransferMode::Literal => (0..=self.starter.stage).collect(),
        };
        for m in candidates {
            let Some(t) = self.starter.grouped_tower(m, h) else { continue };
            let residual = down.image(&t.residual)?;
            if residual.measure() < st.plan.eps {
                let base = down.image(&t.base)?;
                return Ok((t, base, residual));
            }
        }
        Err(Error::ResidualTooLarge { height: h, eps: st.plan.eps.clone() })
    }

    /// Grafts the deepest stage's cycle into its tower and appends the next
    /// stage.
    pub fn extend(&mut self, planner: &mut dyn Planner) -> Result<()> {
        let budget = self.config.budget;
        let last = self.stages.last().expect("chain is never empty");
        let n = last.n;
        let h = last.plan.h;
        let (tower, base, residual) = self.tower_for(last)?;

        let mu_y = last.cycle.y.length();
        let d = solve_transfer(&residual.measure(), &last.mu_x(), &mu_y, self.config.mode);
        let istar = select_transfer_set(&last.cycle.j, &d, h)?;
        let j_rest = IntervalSet::from(last.cycle.j.clone()).difference(&istar);
        let step = last.cycle.step();
        let transfer = IntervalSet::from_intervals(
            istar
                .intervals()
                .iter()
                .flat_map(|iv| (0..h).map(|k| iv.shift(&(&step * uint(k)))))
                .collect(),
        );
        let x_prime = residual.union(&transfer);

        let p_prev = self.approximating_partition(n)?;
        let tp = build_partitions(&last.r, &base, h, p_prev, last.s(), &j_rest, &budget)?;
        let tau = build_tau(
            &TauInput {
                partition: &tp,
                base: &base,
                j_minus_istar: &j_rest,
                step: &step,
                x_prime: &x_prime,
                residual: &residual,
            },
            &budget,
        )?;
        let r_next = tau.invert().compose(&last.r.compose(&tau, &budget)?, &budget)?;
        let changed = r_next.disagreement(&last.t()?);
        let q = tp.p_prime.iter().map(|p| tau.image(p)).collect::<Result<Vec<_>>>()?;
        let x_next = last.x.union(&IntervalSet::from(last.cycle.y.clone()));
        let psi_next = last.psi.compose(&tau, &budget)?;
        let b = last.cycle.b.clone();

        let mut history = self.plans();
        let plan = planner.plan(&PlanContext {
            n: n + 1,
            r: &r_next,
            mu_x: x_next.measure(),
            partition: &tp.p_prime,
            history: &history,
        })?;
        history.push(plan.clone());
        let cycle = build_s(n as u64 + 1, plan.h, &b)?;

        let transition = Transition {
            base,
            residual,
            native_stage: tower.native_stage,
            d,
            istar,
            x_prime,
            cells: tp.cells,
            p_prime: tp.p_prime,
            q,
            tau,
            changed,
        };
        self.stages.last_mut().unwrap().transition = Some(transition);
        self.stages.push(StageState {
            n: n + 1,
            x: x_next,
            cycle,
            r: r_next,
            psi: psi_next,
            plan,
            transition: None,
        });
        Ok(())
    }

    /// Extends until `depth() == stages`.
    pub fn extend_to(&mut self, stages: usize, planner: &mut dyn Planner) -> Result<()> {
        while self.depth() < stages {
            self.extend(planner)?;
        }
        Ok(())
    }
}

/// `T_N = R_N ⊔ S_N`.
pub fn assemble_t(chain: &Chain, n: usize) -> Result<PiecewiseAffineMap> {
    chain.stage(n)?.t()
}

/// Measure of the points of `a` whose first `m` iterates under the deepest
/// built `T` agree with their iterates under `T_{n+1}`.
pub fn stable_horizon(chain: &Chain, a: &IntervalSet, n: usize, m: u64) -> Result<Rat> {
    let near = assemble_t(chain, n + 1)?;
    if !a.is_subset(near.domain()) {
        return Err(Error::SetOutsideDomain);
    }
    if m == 0 {
        return Ok(a.measure());
    }
    let deep = assemble_t(chain, chain.depth())?;
    let delta = deep.disagreement(&near);
    if delta.is_empty() {
        return Ok(a.measure());
    }
    let back = near.invert();
    let mut bad = delta.clone();
    let mut layer = delta;
    for _ in 1..m {
        layer = back.image(&layer)?;
        bad = bad.union(&layer);
    }
    Ok(a.measure() - a.intersection_measure(&bad))
}

/// `m · Σ_{k=n+1}^{N-1} μ(D_k)`, an upper bound on the unstable part.
pub fn horizon_union_bound(chain: &Chain, n: usize, m: u64) -> Rat {
    let total: Rat = chain
        .stages()
        .iter()
        .filter(|s| s.n > n)
        .filter_map(|s| s.transition.as_ref().map(|t| t.changed.measure()))
        .fold(Rat::zero(), |acc, x| acc + x);
    total * uint(m)
}

/// Ratio `μ(X_{n+1}) / μ(X_n)`.
pub fn growth_ratio(chain: &Chain, n: usize) -> Result<Rat> {
    let a = chain.stage(n)?.mu_x();
    let b = chain.stage(n + 1)?.mu_x();
    if a.is_zero() {
        return Ok(Rat::one());
    }
    Ok(b / a)
}
