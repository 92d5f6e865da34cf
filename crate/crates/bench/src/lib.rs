//! Fixtures shared by the benchmarks.

use towerplex_core::multiplex::equal_partition;
use towerplex_core::rank_one::build_rank_one;
use towerplex_core::schedule::Policy;
use towerplex_core::{Chain, ChainConfig, PieceBudget, RankOneSpec, RankOneSystem, ScheduleConfig, SchedulePlanner};

pub fn odometer(depth: usize) -> RankOneSystem {
    build_rank_one(&RankOneSpec::odometer(depth), depth, &PieceBudget::default()).expect("odometer builds")
}

pub fn chacon(depth: usize) -> RankOneSystem {
    build_rank_one(&RankOneSpec::chacon(depth), depth, &PieceBudget::default()).expect("chacon builds")
}

/// Odometer chain under the minimal schedule.
pub fn odometer_chain(depth: usize, stages: usize) -> Chain {
    let sys = odometer(depth);
    let p0 = equal_partition(&sys.space, 2).expect("nonempty space");
    let cfg = ScheduleConfig { policy: Policy::Minimal, ..ScheduleConfig::default() };
    let mut planner = SchedulePlanner::new(cfg);
    let mut chain = Chain::start(sys, ChainConfig::default(), p0, &mut planner).expect("stage 1");
    chain.extend_to(stages, &mut planner).expect("chain builds");
    chain
}
