//! Trace-driven estimation of the operational and embodied carbon footprint of
//! scientific workflow executions, and of the reductions reachable through
//! carbon-aware temporal shifting and resource scaling.
//!
//! The crate is organised bottom-up:
//!
//! * [`trace`] parses Nextflow-style execution traces into [`WorkflowTrace`].
//! * [`ci`] holds carbon-intensity time series and integrates power over them.
//! * [`power`] contains the node catalog and the linear power model.
//! * [`footprint`] combines energy and intensity into emissions.
//! * [`shifting`] evaluates entire and interrupted temporal shifting.
//! * [`scaling`] compares nodes, governors and cluster sizes.
//! * [`report`] renders results as byte-stable CSV and JSON.

pub mod ci;
pub mod error;
pub mod footprint;
pub mod power;
pub mod region;
pub mod report;
pub mod scaling;
pub mod shifting;
pub mod time;
pub mod trace;

pub use ci::{CiSeries, CiWindow, LoadCiOptions, SignalKind};
pub use error::{Error, Result};
pub use footprint::{embodied_emissions, operational_emissions, FootprintReport};
pub use power::{EnergyBreakdown, NodeCatalog, NodeSpec, PowerCurve};
pub use scaling::{ScenarioResult, SeriesSet, StartPolicy};
pub use shifting::{ExecutionWindow, FlexibilityWindow, ReductionGrid, ShiftOptions, ShiftPlan};
pub use trace::{NodeCount, ParseOptions, TaskRecord, WorkflowTrace};

/// Result of a load step together with the non-fatal issues found along the way.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

impl<T> Loaded<T> {
    pub fn into_inner(self) -> T {
        self.value
    }
}
