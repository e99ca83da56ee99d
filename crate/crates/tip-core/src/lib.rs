//! Trust inference and propagation for multi-human multi-robot teams.
//!
//! Trust is modeled as a Beta random variable over cumulative positive
//! and negative experience. Experience grows through two channels:
//! direct interaction with a robot, and trust reports communicated by
//! human teammates. The crate provides the update rules, long-run
//! equilibrium solvers for alternating interaction schedules, a
//! Monte-Carlo simulator, maximum-likelihood parameter fitting with
//! analytic gradients, missing-rating estimation, and the session-log
//! file formats plus a synthetic experiment generator behind the `tip`
//! CLI.

pub mod cli;
pub mod dataio;
pub mod equilibrium;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod simulator;
pub mod special;
pub mod trust;

pub use error::{Error, Result};
pub use trust::{ExperiencePair, PerformanceObservation, TrustParams, TrustRating};
