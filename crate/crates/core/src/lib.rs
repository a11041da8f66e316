//! Simulation and verification toolkit for stochastic granular space-time
//! models.

pub mod cli;
pub mod compton;
pub mod error;
pub mod geometry;
pub mod gravity;
pub mod linalg;
pub mod manifest;
pub mod metric;
pub mod rng;
pub mod search;
pub mod spread;
pub mod units;
pub mod walk;

pub use error::{Error, Result};

pub type Complex = num_complex::Complex64;
