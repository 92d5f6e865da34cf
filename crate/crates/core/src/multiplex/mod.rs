mod chain;
mod cycle;
mod tower;

pub use chain::{
    assemble_t, equal_partition, growth_ratio, horizon_union_bound, stable_horizon, Chain, ChainConfig,
    StageState, Transition,
};
pub use cycle::{build_s, select_transfer_set, solve_transfer, IntervalCycle, TransferMode};
pub use tower::{build_partitions, build_tau, TauInput, TowerPartition};
