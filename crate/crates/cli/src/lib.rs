//! Simulation and estimation harness around `deconv-core`: distribution
//! families, scenario configs, the Monte Carlo driver and CSV/JSON export.

pub mod export;
pub mod runner;
pub mod sample;
pub mod scenario;

pub use runner::{run_scenario, ResultFrame, ResultRow};
pub use sample::DistSpec;
pub use scenario::{EstimatorSpec, EtaSpec, GridSpec, Scenario};
