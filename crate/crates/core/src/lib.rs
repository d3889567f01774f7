//! Optimal allocation of `k` identical items among `n` agents who can inflate
//! costly signals.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`]: type distributions, grids and regularity checks.
//! * [`efficient`]: the efficient interim rule `Q_E` and its tail masses.
//! * [`ic`]: incentive compatibility, canonical utilities, feasibility and
//!   the principal's objective.
//! * [`solver_param`]: cutoff-family solvers, the winner-take-all baseline and
//!   region classification.
//! * [`solver_lp`]: the discretised relaxed program solved by simplex.
//! * [`expost`]: ex post tie-breaking kernels for two agents.
//! * [`sim`]: Monte Carlo evaluation and the large-market comparisons.

#![allow(clippy::needless_range_loop)]

pub mod dist;
pub mod efficient;
pub mod error;
pub mod expost;
pub mod ic;
pub mod numeric;
pub mod sim;
pub mod solver_lp;
pub mod solver_param;

pub use dist::{Family, RegularityParams, TypeDist, TypeGrid};
pub use efficient::{EfficientProfile, Estimate};
pub use ic::{InterimRule, MechParams, UtilityProfile};
pub use solver_param::{RegionKind, RegionSegment, StructuredSolution};
pub use error::{Error, Result};


