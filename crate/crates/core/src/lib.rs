//! Crosstalk-attack and context-switching defense toolkit for multi-programmed
//! quantum machines: device models, circuits, noisy simulation, scheduling,
//! attack detection and analytic models.

pub mod analytics;
pub mod characterize;
pub mod circuit;
pub mod detection;
pub mod error;
pub mod scenario;
pub mod scheduler;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};
