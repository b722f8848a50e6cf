//! Simulation laboratory for Brownian penalization by functionals of local times.

pub mod besq;
pub mod brownian;
pub mod cli;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod parallel;
pub mod penalize;
pub mod quadrature;
pub mod ray_knight;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
