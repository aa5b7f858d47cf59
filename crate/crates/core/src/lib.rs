//! Incremental minimization schemes for rate-independent systems.
//!
//! A problem is a triple of an energy `E(t, u, z)`, a (possibly asymmetric,
//! extended-valued) dissipation distance `d(z, z')` and a viscous correction
//! `δ(z, z')`. The crate solves the energetic, balanced-viscosity and
//! visco-energetic incremental schemes, computes jump transition costs, and
//! certifies discrete trajectories against the solution conditions.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod ext;
pub mod invariants;
pub mod jump;
pub mod models;
pub mod problem;
pub mod reduced;
pub mod scheme;
pub mod stability;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use problem::{
    eval_dissipation, eval_energy, eval_power, Correction, Dissipation, HCurve, Interval, Metric,
    PowerControl, RisProblem, State,
};
pub use reduced::{MinResult, Method, MinimizerConfig};
pub use trajectory::{DiscreteTrajectory, JumpDetection, JumpRecord, Trajectory};
