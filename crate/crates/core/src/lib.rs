//! Seeded timing side-channel simulator and leakage risk scoring.
//!
//! A [`Scenario`] pairs a scheme preset with an execution environment, a
//! secret-dependent leakage model and a leak strength. [`simulate`] turns it
//! into a [`TraceSet`] of labelled timings, [`metrics`] measures how well the
//! two secret classes can be told apart, and [`scoring`] fuses those
//! measurements into a bounded Timing-Leakage Risk Index (TLRI).
//!
//! Every random draw flows from a [`rng::DeterministicRng`] whose seed is
//! derived from the master seed and the scenario identity, so a run is
//! reproducible bit for bit.

pub mod config;
pub mod environment;
mod error;
pub mod leakage;
pub mod metrics;
pub mod report;
pub mod results;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod scoring;
pub mod simulate;
pub mod sweep;

pub use config::{ScenarioMatrix, Scheme};
pub use error::{Error, Result};
pub use report::MetricReport;
pub use scenario::{partition, Environment, LeakModel, Scenario, SchemeParams, TraceSet};
pub use scoring::TlriWeights;

/// Tool identifier written into result metadata.
pub const TOOL_NAME: &str = "tlri";
/// Crate version written into result metadata.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
