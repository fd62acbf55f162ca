//! Cahn–Hilliard dynamics on a periodic strip with dynamic boundary conditions.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod potentials;
pub mod solver;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
