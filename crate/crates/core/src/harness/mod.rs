//! Inputs, arrival orders, experiment orchestration and reports.

pub mod arrival;
pub mod config;
pub mod experiment;
pub mod report;
pub mod seeds;
pub mod zones;

use std::path::Path;

use thiserror::Error;

use crate::addressing::{AddressingError, ZoneId};
use crate::metrics::MetricsError;
use crate::routing::RoutingError;
use crate::topology::TopologyError;

pub use arrival::{arrival_order, ArrivalPolicy};
pub use config::{ExperimentConfig, ScenarioSpec};
pub use experiment::{run_experiment, run_experiment_with};
pub use report::emit_report;
pub use zones::{load_zones, synth_zones, Placement, SyntheticZoneSpec};

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("zone file, line {line}: {message}")]
    ZoneParse { line: u64, message: String },
    #[error("zone file, line {line}: latitude {value} outside [-90, 90]")]
    InvalidLatitude { line: u64, value: f64 },
    #[error("zone file, line {line}: longitude {value} outside [-180, 360]")]
    InvalidLongitude { line: u64, value: f64 },
    #[error("zone file, line {line}: population {value} below 1")]
    InvalidPopulation { line: u64, value: f64 },
    #[error("zone file, line {line}: duplicate zone id {zone}")]
    DuplicateZoneId { line: u64, zone: ZoneId },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Addressing(#[from] AddressingError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl HarnessError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Bad input or configuration, as opposed to a failure while running.
    pub fn is_input_error(&self) -> bool {
        match self {
            HarnessError::ZoneParse { .. }
            | HarnessError::InvalidLatitude { .. }
            | HarnessError::InvalidLongitude { .. }
            | HarnessError::InvalidPopulation { .. }
            | HarnessError::DuplicateZoneId { .. }
            | HarnessError::Config(_)
            | HarnessError::Addressing(_) => true,
            HarnessError::Topology(e) => matches!(
                e,
                TopologyError::Parse { .. }
                    | TopologyError::Addressing(_)
                    | TopologyError::InvalidFraction(_)
                    | TopologyError::MismatchedAddress { .. }
            ),
            HarnessError::Routing(_) => true,
            HarnessError::Io { .. } | HarnessError::Metrics(_) => false,
        }
    }

    /// Process exit code: 1 for input and config errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_input_error() {
            1
        } else {
            2
        }
    }
}
