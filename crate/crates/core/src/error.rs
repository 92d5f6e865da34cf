use thiserror::Error;

use crate::exact::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("point {0} is outside the map domain")]
    PointOutsideDomain(Rat),
    #[error("set is not contained in the map domain")]
    SetOutsideDomain,
    #[error("range of the inner map is not contained in the domain of the outer map")]
    DomainMismatch,
    #[error("piece budget exceeded: {pieces} pieces > {budget}")]
    PieceBudgetExceeded { pieces: usize, budget: usize },
    #[error("pieces do not form a bijection: {0}")]
    NotABijection(String),
    #[error("invalid interval [{0}, {1})")]
    EmptyInterval(Rat, Rat),
    #[error("rank-one spec has only {available} stages, {requested} requested")]
    SpecExhausted { requested: usize, available: usize },
    #[error("invalid rank-one spec: {0}")]
    InvalidSpec(String),
    #[error("no tower of height {height} with residual below {eps} at any built stage")]
    ResidualTooLarge { height: u64, eps: Rat },
    #[error("transfer slice {requested} exceeds base length {available}")]
    TransferTooLarge { requested: Rat, available: Rat },
    #[error("containment tau(p) in p fails for partition element {0}")]
    ContainmentInfeasible(usize),
    #[error("chain built to stage {built}, stage {needed} required")]
    DepthInsufficient { built: usize, needed: usize },
    #[error("weight normalizer a_N is zero")]
    ZeroNormalizer,
    #[error("vector universe has only {available} vectors, {requested} requested")]
    UniverseExhausted { requested: usize, available: usize },
    #[error("no admissible M up to {cap}; best sum {best}")]
    SearchCapExceeded { cap: u64, best: Rat },
    #[error("invalid product spec: {0}")]
    InvalidProduct(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::PointOutsideDomain(_) => "PointOutsideDomain",
            Error::SetOutsideDomain => "SetOutsideDomain",
            Error::DomainMismatch => "DomainMismatch",
            Error::PieceBudgetExceeded { .. } => "PieceBudgetExceeded",
            Error::NotABijection(_) => "NotABijection",
            Error::EmptyInterval(..) => "EmptyInterval",
            Error::SpecExhausted { .. } => "SpecExhausted",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::ResidualTooLarge { .. } => "ResidualTooLarge",
            Error::TransferTooLarge { .. } => "TransferTooLarge",
            Error::ContainmentInfeasible(_) => "ContainmentInfeasible",
            Error::DepthInsufficient { .. } => "DepthInsufficient",
            Error::ZeroNormalizer => "ZeroNormalizer",
            Error::UniverseExhausted { .. } => "UniverseExhausted",
            Error::SearchCapExceeded { .. } => "SearchCapExceeded",
            Error::InvalidProduct(_) => "InvalidProduct",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
