//! Sequential social learning with unbounded private signals.
//!
//! Agents act in a fixed order, each observing all earlier binary actions and
//! one private signal. The public log-likelihood ratio evolves through an
//! exact two-branch recurrence; this crate provides that recurrence for
//! several signal families, the ODE asymptotics that describe how fast it
//! grows, and a reproducible Monte Carlo engine for the random trajectories.

pub mod error;
pub mod numeric;
pub mod rng;
pub mod signal;
pub mod belief;
pub mod asymptotics;
pub mod montecarlo;
pub mod experiments;

pub use error::{Error, Result};
