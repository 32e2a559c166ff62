//! Simulation and analysis of Moran processes whose selection parameters
//! switch at random, together with their large-population limit: a piecewise
//! deterministic Markov process (PDMP) driven by a finite-state environment
//! chain.
//!
//! The crate is organised around the pipeline
//!
//! * [`env`] — simplex states, fitness vectors, the environment chain and the
//!   replicator-type vector field shared by both processes;
//! * [`moran`] — the exact finite-population birth/death simulator;
//! * [`pdmp`] — the switching-flow simulator with exact 1-d flow oracles,
//!   ergodic averages and occupation histograms;
//! * [`analysis`] — closed-form growth rates, regime classification,
//!   invariant densities, invasion rates and the persistence verdict;
//! * [`experiments`] — reproduction harness: ensemble runs, the
//!   finite-population convergence-rate experiment, density comparisons and
//!   report bundles.

pub mod analysis;
pub mod env;
pub mod experiments;
pub mod moran;
pub mod pdmp;

mod error;
mod linalg;
mod quad;
mod rng;

pub use error::Error;
pub use rng::derive_seed;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
