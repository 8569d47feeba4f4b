//! Low-rank matrix recovery for passive bistatic SAR.
//!
//! Correlating the signals of two receivers makes the data linear in the
//! lifted scene `ρ = ρ̃ρ̃ᴴ`. This crate simulates those correlations, recovers
//! `ρ` by trace-regularized PSD-constrained Uzawa iteration, and ships the
//! numerical checks (resolution bound, kernel asymptotics, restricted
//! isometry probes) that explain when recovery succeeds.

pub mod analysis;
pub mod error;
pub mod forward;
pub mod io;
pub mod linalg;
pub mod metrics;
mod par;
pub mod scene;
pub mod solver;

pub use error::{Error, Result};
pub use par::current_num_threads;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
