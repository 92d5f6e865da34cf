//! Run configuration: a flat TOML file with dotted keys.
//!
//! ```toml
//! starter.kind = "chacon"
//! starter.depth = 8
//! chain.stages = 3
//! partition.cells = 8
//! schedule.delta = "1/2"
//! schedule.vector_budget = 2
//! stats.horizon = 20
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use towerplex_core::exact::{parse_rat, Interval, IntervalSet};
use towerplex_core::rank_one::{build_rank_one, StarterKind};
use towerplex_core::schedule::{DeltaRule, PlanOverride, Policy};
use towerplex_core::{
    ChainConfig, PieceBudget, RankOneSpec, RankOneSystem, RigiditySequence, ScheduleConfig, TransferMode,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    starter: RawStarter,
    chain: RawChain,
    partition: RawPartition,
    schedule: RawSchedule,
    stats: RawStats,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawStarter {
    kind: Option<String>,
    depth: Option<usize>,
    cuts: Option<Vec<u32>>,
    spacers: Option<Vec<Vec<u32>>>,
    base: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawChain {
    stages: Option<usize>,
    mode: Option<String>,
    piece_budget: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPartition {
    cells: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDelta {
    Ratio(String),
    List(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverride {
    stage: usize,
    m: Option<u64>,
    h: Option<u64>,
    eps: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSchedule {
    policy: Option<String>,
    delta: Option<RawDelta>,
    vector_budget: Option<usize>,
    max_abs: Option<u64>,
    search_cap: Option<u64>,
    check_rigidity: bool,
    rigidity: Option<Vec<u64>>,
    overrides: Vec<RawOverride>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawStats {
    stage: Option<usize>,
    weights_horizon: Option<usize>,
    horizon: Option<usize>,
    set: Option<Vec<String>>,
    rigidity: Option<Vec<u64>>,
    vectors: Option<Vec<Vec<i64>>>,
    sweep_horizon: Option<usize>,
}

/// Diagnostics selection for `stats`.
#[derive(Clone, Debug)]
pub struct StatsConfig {
    /// Stage whose `T_n` is examined; the deepest snapshot when unset.
    pub stage: Option<usize>,
    pub weights_horizon: usize,
    pub horizon: usize,
    /// Test set `A`; the first initial partition element when unset.
    pub set: Option<IntervalSet>,
    pub rigidity: Vec<u64>,
    pub vectors: Vec<Vec<i64>>,
    /// Sweep-out horizon; `4 h_{n-1}` when unset.
    pub sweep_horizon: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kind: StarterKind,
    pub spec: RankOneSpec,
    /// Rank-one stage used as the starter.
    pub depth: usize,
    pub stages: usize,
    pub chain: ChainConfig,
    pub cells: usize,
    pub schedule: ScheduleConfig,
    pub stats: StatsConfig,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn rat_field(key: &str, text: &str) -> CliResult<towerplex_core::Rat> {
    parse_rat(text).map_err(|e| bad(format!("{key}: {e}")))
}

fn interval_field(key: &str, text: &str) -> CliResult<Interval> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(bad(format!("{key}: expected `lo hi`, got `{text}`")));
    };
    Interval::new(rat_field(key, lo)?, rat_field(key, hi)?).map_err(|e| bad(format!("{key}: {e}")))
}

fn dyadic(count: u32) -> Vec<u64> {
    (1..=count).map(|m| 1u64 << m).collect()
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| bad(e.to_string().trim().replace('\n', " ")))?;
        RunConfig::from_raw(raw)
    }

    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        RunConfig::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> CliResult<RunConfig> {
        let s = raw.starter;
        let kind = match s.kind.as_deref().unwrap_or("odometer") {
            "odometer" => StarterKind::Odometer,
            "chacon" => StarterKind::Chacon,
            "custom" => StarterKind::Custom,
            other => return Err(bad(format!("starter.kind: unknown kind `{other}`"))),
        };
        let (spec, depth) = match kind {
            StarterKind::Odometer => {
                let d = s.depth.unwrap_or(16);
                (RankOneSpec::odometer(d), d)
            }
            StarterKind::Chacon => {
                let d = s.depth.unwrap_or(8);
                (RankOneSpec::chacon(d), d)
            }
            StarterKind::Custom => {
                let cuts = s.cuts.ok_or_else(|| bad("starter.cuts is required for a custom starter"))?;
                let spacers = s.spacers.ok_or_else(|| bad("starter.spacers is required for a custom starter"))?;
                let base = interval_field("starter.base", s.base.as_deref().unwrap_or("0 1"))?;
                let spec = RankOneSpec::new(cuts, spacers, base).map_err(|e| bad(e.to_string()))?;
                let d = s.depth.unwrap_or(spec.stages());
                (spec, d)
            }
        };
        if depth == 0 || depth > spec.stages() {
            return Err(bad(format!("starter.depth must lie in 1..={}", spec.stages())));
        }

        let mode: TransferMode = match raw.chain.mode.as_deref() {
            None => TransferMode::default(),
            Some(m) => m.parse().map_err(|_| bad(format!("chain.mode: unknown mode `{m}`")))?,
        };
        let budget = raw.chain.piece_budget.map(PieceBudget::new).unwrap_or_default();
        let stages = raw.chain.stages.unwrap_or(3);
        if stages == 0 {
            return Err(bad("chain.stages must be positive"));
        }
        let cells = raw.partition.cells.unwrap_or(match kind {
            StarterKind::Odometer => 2,
            _ => 8,
        });
        if cells == 0 {
            return Err(bad("partition.cells must be positive"));
        }

        let sch = raw.schedule;
        let policy = match sch.policy.as_deref() {
            None if kind == StarterKind::Odometer => Policy::Minimal,
            None | Some("search") => Policy::Search,
            Some("minimal") => Policy::Minimal,
            Some(other) => return Err(bad(format!("schedule.policy: unknown policy `{other}`"))),
        };
        let delta = match sch.delta {
            None => DeltaRule::default(),
            Some(RawDelta::Ratio(r)) => DeltaRule::Geometric(rat_field("schedule.delta", &r)?),
            Some(RawDelta::List(v)) if !v.is_empty() => DeltaRule::List(
                v.iter().map(|r| rat_field("schedule.delta", r)).collect::<CliResult<_>>()?,
            ),
            Some(RawDelta::List(_)) => return Err(bad("schedule.delta: empty list")),
        };
        let rho_terms = sch.rigidity.or_else(|| (kind == StarterKind::Odometer).then(|| dyadic(20)));
        let rigidity = if sch.check_rigidity {
            let terms = rho_terms.ok_or_else(|| bad("schedule.check_rigidity needs schedule.rigidity"))?;
            Some(RigiditySequence::new(terms).map_err(|e| bad(format!("schedule.rigidity: {e}")))?)
        } else {
            None
        };
        let mut overrides = BTreeMap::new();
        for o in sch.overrides {
            let eps = o.eps.as_deref().map(|e| rat_field("schedule.overrides.eps", e)).transpose()?;
            if o.stage == 0 || overrides.insert(o.stage, PlanOverride { m: o.m, h: o.h, eps }).is_some() {
                return Err(bad(format!("schedule.overrides: bad or repeated stage {}", o.stage)));
            }
        }
        let defaults = ScheduleConfig::default();
        let schedule = ScheduleConfig {
            policy,
            delta,
            vector_budget: sch.vector_budget.unwrap_or(2),
            max_abs: sch.max_abs.unwrap_or(defaults.max_abs),
            search_cap: sch.search_cap.unwrap_or(defaults.search_cap),
            rigidity,
            overrides,
            budget,
        };

        let st = raw.stats;
        let set = match st.set {
            None => None,
            Some(lines) => Some(IntervalSet::from_intervals(
                lines.iter().map(|l| interval_field("stats.set", l)).collect::<CliResult<_>>()?,
            )),
        };
        let vectors = st.vectors.unwrap_or_else(|| vec![vec![1, -1], vec![2]]);
        for v in &vectors {
            towerplex_core::stats::ProductSpec::new(v.clone()).map_err(|e| bad(format!("stats.vectors: {e}")))?;
        }
        let stats = StatsConfig {
            stage: st.stage,
            weights_horizon: st.weights_horizon.unwrap_or(10),
            horizon: st.horizon.unwrap_or(20),
            set,
            rigidity: st.rigidity.unwrap_or_else(|| match kind {
                StarterKind::Odometer => dyadic(8),
                _ => Vec::new(),
            }),
            vectors,
            sweep_horizon: st.sweep_horizon,
        };

        Ok(RunConfig {
            kind,
            spec,
            depth,
            stages,
            chain: ChainConfig { mode, budget },
            cells,
            schedule,
            stats,
        })
    }

    /// Applies command-line flags on top of the file.
    pub fn with_flags(mut self, stages: Option<usize>, piece_budget: Option<usize>, mode: Option<TransferMode>) -> Self {
        if let Some(n) = stages {
            self.stages = n;
        }
        if let Some(b) = piece_budget {
            self.chain.budget = PieceBudget::new(b);
            self.schedule.budget = PieceBudget::new(b);
        }
        if let Some(m) = mode {
            self.chain.mode = m;
        }
        self
    }

    pub fn starter(&self) -> CliResult<RankOneSystem> {
        build_rank_one(&self.spec, self.depth, &self.chain.budget).map_err(CliError::core(Some(1)))
    }
}
