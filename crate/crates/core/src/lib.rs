//! Finite-horizon laboratory for topological transitivity and linear dynamics.
//!
//! The crate is organised around four layers:
//!
//! * [`spaces`]: points, balls, the catalogue of computable self-maps and
//!   Lipschitz ball enclosures.
//! * [`limits`]: orbit segments, limit-set / prolongational-limit-set
//!   witnesses, recurrence, (almost-)transitivity scans and the truncated
//!   G-delta membership check.
//! * [`constructor`]: the nested-ball construction that certifies a point whose
//!   orbit returns to itself while accumulating at a target.
//! * [`shifts`]: weighted backward shifts on truncated `l2(H)`, the
//!   partial-product criterion, exact transitivity witnesses, powers,
//!   unimodular multiples and orbit-span compression.
//!
//! Every search in this crate is a semi-decision procedure: a returned witness
//! is re-checkable evidence, an absent witness only means that nothing was
//! found within the budget.

pub mod constructor;
pub mod error;
pub mod limits;
pub mod shifts;
pub mod spaces;

pub use error::{Error, Result};
pub use spaces::{Ball, MapKind, Point, SeededSampler, SpaceTag, System, DEFAULT_SLACK};
