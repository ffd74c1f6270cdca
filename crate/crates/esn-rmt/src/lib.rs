//! Noisy linear echo-state networks: exact simulation, least-squares readouts,
//! and random-matrix deterministic equivalents of their train and test errors.

pub mod ensembles;
pub mod error;
pub mod experiment;
pub mod closedform;
pub mod csvio;
pub mod deteq;
pub mod esn;
pub mod gram;
mod linalg;
pub mod tasks;

pub use error::{Error, Result};
