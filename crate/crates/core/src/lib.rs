pub mod error;
pub mod exact;
pub mod multiplex;
pub mod rank_one;
pub mod schedule;
pub mod snapshot;
pub mod stats;

pub use error::{Error, Result};
pub use exact::{Interval, IntervalSet, PieceBudget, PiecewiseAffineMap, Rat};
pub use multiplex::{Chain, ChainConfig, StageState, TransferMode};
pub use rank_one::{RankOneSpec, RankOneSystem, RigiditySequence};
pub use schedule::{Planner, ScheduleConfig, SchedulePlanner, StagePlan};
