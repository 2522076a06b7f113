use thiserror::Error;

use crate::exact::Rat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("sequence index {0} is out of range (indices start at 1)")]
    IndexOutOfRange(usize),

    #[error("vector is not in the range of Q: first coordinate {first} != tail sum {tail}")]
    NotInRangeOfQ { first: Box<Rat>, tail: Box<Rat> },

    #[error("vector is not a member of {set}: {reason}")]
    NotMember { set: &'static str, reason: String },

    #[error("coefficient index {index} is outside the basis 1..={count}")]
    OutsideBasis { index: usize, count: usize },

    #[error("coefficient list is not convex: {0}")]
    NotConvex(String),

    #[error("enumeration of {terms} sign vectors exceeds the cap of 2^{cap_exp}")]
    EnumerationCap { terms: usize, cap_exp: u32 },

    #[error("level {level} must be strictly below the Rademacher index {index}")]
    LevelNotBelowIndex { level: u32, index: u32 },

    #[error("index {index} lies inside the support of the vector")]
    IndexInSupport { index: usize },

    #[error("sampler for {set} exhausted {attempts} attempts")]
    SamplingExhausted { set: &'static str, attempts: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid step function: {0}")]
    InvalidStepFn(String),

    #[error("epsilon sequence degenerates at n = {0} (1 - eps_n = 0)")]
    Degenerate(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
