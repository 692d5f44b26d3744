//! Tie-line security regions for multi-period, multi-area DC power networks.
//!
//! A regional power system exposes its feasible coupling set — the tie-line
//! flows and curtailment budget it can absorb — as a polytope over
//! `(aggregated tie flows, z)` per time period. The crate computes those
//! regions fast by:
//!
//! 1. choosing per-period dispatch levels that make ramp constraints
//!    redundant, so the multi-period region factors into a Cartesian
//!    product of per-period regions ([`envelope`]),
//! 2. aggregating tie-lines at each border interface into one equivalent
//!    flow with certified error bounds ([`aggregation`]),
//! 3. projecting the reduced operating set onto the coupling space via
//!    iterative vertex search ([`projection`]), and
//! 4. coordinating several regions in one non-iterative LP that minimizes
//!    total renewable curtailment, then recovering each region's dispatch
//!    ([`coordination`]).
//!
//! Independent ground-truth machinery (Fourier–Motzkin projection, brute
//! force minimax fits, sampling feasibility counters, a centralized
//! baseline) lives in [`oracles`]. All linear programs run through the
//! embedded deterministic solver in [`lp`].

pub mod aggregation;
pub mod cases;
pub mod coordination;
pub mod envelope;
pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracles;
pub mod par;
pub mod projection;

mod linalg;
mod rng;

pub use error::{Error, Result};

/// Absolute feasibility tolerance on MW-scaled constraint rows.
pub const FEAS_TOL: f64 = 1e-6;
