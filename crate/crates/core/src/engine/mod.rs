//! Deterministic fixed-step execution of the coupled attack, sensing,
//! control, plant and gate models.

mod fixtures;
mod run;
mod scenario;
mod series;
mod summary;
mod sweep;

use thiserror::Error;

pub use fixtures::{fixture, fixtures, Fixture};
pub use run::{run_scenario, Event, EventKind, SimResult};
pub use scenario::{
    load_scenario, parse_scenario, AttackMode, AttackPoint, AttackSpec, FieldError, GateSetup, PlantConfig, Scenario,
    SensorConfig, SensorModel, SummaryConfig, TopologyKind, ValidationErrors, DEFAULT_SETTLING_GUARD,
};
pub use series::Series;
pub use summary::{summarize, ChannelStats, Summary, SummaryWindow, Window};
pub use sweep::{apply_parameter, linear_values, run_sweep, SweepPoint};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario:\n{0}")]
    Invalid(ValidationErrors),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("simulation diverged at step {step} (t = {t} s): {channel} is not finite")]
    Diverged { step: usize, t: f64, channel: &'static str },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<crate::adc::AdcError> for SimError {
    fn from(e: crate::adc::AdcError) -> Self {
        Self::Range(e.to_string())
    }
}

impl From<crate::plant::PlantError> for SimError {
    fn from(e: crate::plant::PlantError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<crate::gate::GateError> for SimError {
    fn from(e: crate::gate::GateError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<crate::coupling::CouplingError> for SimError {
    fn from(e: crate::coupling::CouplingError) -> Self {
        Self::Config(e.to_string())
    }
}

/// `t` is at or past `edge` on a grid of spacing `step`.
pub(crate) fn reached(t: f64, edge: f64, step: f64) -> bool {
    t >= edge - 1e-6 * step
}
