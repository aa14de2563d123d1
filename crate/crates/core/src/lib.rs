//! Simulation of repeated specification games between a model builder and
//! fairness and privacy regulators, played by gradient steps over a shared,
//! recalibrated Pareto frontier.

pub mod agents;
pub mod calibration;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod frontier;
pub mod metrics;
pub mod oracle;

pub use error::{Error, Result};
