//! Monte Carlo engine for interacting Brownian loop soups.
//!
//! Loops are closed Brownian paths of duration `βj` discretized on a uniform
//! time grid. They interact through a pair weight Φ evaluated at matched times
//! modulo β. The crate provides Poisson reference samplers, Metropolis–Hastings
//! samplers for the Dirichlet, free and excursion Gibbs kernels, and
//! statistical checks of the quantitative estimates those kernels satisfy.

pub mod cli_io;
pub mod configuration;
pub mod error;
pub mod gibbs_kernels;
pub mod interaction;
pub mod loop_measures;
pub mod loop_paths;
pub mod potentials;
pub mod rng;
pub mod stats;
pub mod verification;

pub use configuration::{Configuration, Psi, Restriction};
pub use error::{Error, Result};
pub use loop_paths::{Domain, Loop, TimeGrid};
pub use potentials::{ModelParams, Potential};
pub use gibbs_kernels::{Chain, KernelKind, McmcConfig, MoveMix};
