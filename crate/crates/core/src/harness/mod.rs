//! Scenario runs on the nonlinear plant, their metrics, and the CLI.

pub mod cli;
pub mod linearize;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use metrics::{compute_metrics, format_table, MetricsReport, ViolationStats};
pub use scenario::{load_scenario, GovernorKind, Scenario, ScenarioError, Window};
pub use sim::{
    default_admissible_set, run_scenario, run_scenario_observed, Governor, GovernorTrace, RunRecord, Sample, CSV_HEADER,
};

use crate::electrochem::ElectrochemError;
use crate::governor::GovernorError;
use crate::params::ParamError;
use crate::plant::PlantError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Electrochem(#[from] ElectrochemError),
    #[error(transparent)]
    Governor(#[from] GovernorError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
