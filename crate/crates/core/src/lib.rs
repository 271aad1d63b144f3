//! Online combinatorial allocation in the secretary model with interdependent
//! valuations.
//!
//! - [`valuations`]: signal profiles, valuation families and structural checkers.
//! - [`offline_opt`]: the exact offline benchmark `OPT(A, w; J)`.
//! - [`secretary`]: sample-then-allocate online algorithms, the proxy-valuation
//!   framework and the per-step optimum subroutine for matching.
//! - [`mechanism`]: the truthful matching mechanism and its audit tools.
//! - [`harness`]: instance generation, ratio estimation and report export.

pub mod error;
pub mod harness;
pub mod items;
mod lp;
pub mod mechanism;
pub mod offline_opt;
pub mod sampling;
pub mod secretary;
pub mod valuations;

pub use error::{Error, Result};
pub use items::ItemSet;
pub use offline_opt::{Allocation, BundleValuation, WeightOracle};
pub use valuations::{Instance, SignalProfile, SignalWeight, ValuationSpec};
