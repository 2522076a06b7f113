//! Exact-arithmetic verification of fixed-point-free contractions on closed
//! bounded convex sets in renormings of `l1` and in `L1[0,1]`.

pub mod dual;
pub mod epsilon;
pub mod error;
pub mod exact;
pub mod harness;
pub mod maps;
pub mod perturbation;
pub mod rademacher;
pub mod sets;
pub mod stepfn;

pub use error::{Error, Result};
pub use exact::{Rat, SparseVec};
