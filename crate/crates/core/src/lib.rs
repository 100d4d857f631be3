//! Simulation core for three-dimensional Brownian paths penalized by a
//! pairwise Coulomb self-energy.
//!
//! The crate is `no_std` and needs only `alloc`. Everything that touches the
//! file system, threads or the command line lives in the `polyel` companion
//! crate; parallelism enters through the [`exec::Executor`] trait so that all
//! reductions here keep a fixed summation order regardless of worker count.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimators;
pub mod exec;
pub mod functionals;
pub mod kernel;
pub mod mcmc;
pub mod model;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{Estimate, EstimateFlags, Method};
pub use exec::{Executor, Serial};
pub use functionals::PathFunctionals;
pub use mcmc::{ChainOutput, ChainStats, McmcConfig};
pub use model::{EventKind, EventPredicate, ModelParams, SeedSpec, TimeGrid};
pub use path::{PathSample, Rotation};
pub use theory::TheoremWindow;

/// A point or vector in R³.
pub type Vec3 = [f64; 3];
