//! Operational and embodied emissions of a workflow execution.
//!
//! Operational emissions integrate each task's power over the intensity
//! series individually, so tasks straddling interval boundaries are charged
//! per interval. Embodied emissions prorate each reserved node's life-cycle
//! emissions by makespan over expected lifetime. PUE is fixed at 1.0.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ci::CiSeries;
use crate::error::Result;
use crate::power::{
    is_low_confidence, reserved_memory_energy, reserved_memory_power_kw, task_power, trace_energy,
    EnergyBreakdown, NodeCatalog,
};
use crate::time::to_ms;
use crate::trace::{makespan_hours, WorkflowTrace};

/// Grams of CO2e from running `trace` against `series`, optionally moving the
/// whole workflow so that it starts at `start_override`.
pub fn operational_emissions(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &CiSeries,
    start_override: Option<DateTime<Utc>>,
) -> Result<f64> {
    let shift = start_override.map_or(0, |t| to_ms(t) - trace.origin_ms());
    let mut total = 0.0;
    for task in &trace.tasks {
        let power = task_power(task, catalog.get(&task.node_id)?, governor)?;
        total += series.integrate_ms(task.start_ms() + shift, task.end_ms() + shift, power)?;
    }
    Ok(total)
}

/// Embodied grams attributable to holding the reserved nodes for `hours`.
pub fn embodied_for_hours(trace: &WorkflowTrace, catalog: &NodeCatalog, hours: f64) -> Result<f64> {
    let mut total = 0.0;
    for n in &trace.node_assignment {
        let node = catalog.get(&n.node_id)?;
        total += n.count as f64 * node.lca_emissions_g * hours / node.lifetime_h;
    }
    Ok(total)
}

/// Life-cycle emissions of the reserved nodes prorated to the makespan.
pub fn embodied_emissions(trace: &WorkflowTrace, catalog: &NodeCatalog) -> Result<f64> {
    embodied_for_hours(trace, catalog, makespan_hours(trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintReport {
    pub workflow_name: String,
    pub resources: String,
    pub energy: EnergyBreakdown,
    pub operational_avg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operational_marg: Option<f64>,
    pub embodied: f64,
    pub reserved_memory_energy: f64,
    /// Reserved memory under the average signal.
    pub reserved_memory_emissions: f64,
    /// Reserved-memory share of operational plus reserved-memory emissions.
    pub reserved_share: f64,
    pub low_confidence: bool,
}

/// Baseline footprint at the trace's original start time.
pub fn footprint_report(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    average: &CiSeries,
    marginal: Option<&CiSeries>,
) -> Result<FootprintReport> {
    let energy = trace_energy(trace, catalog, governor)?;
    let operational_avg = operational_emissions(trace, catalog, governor, average, None)?;
    let operational_marg = marginal
        .map(|m| operational_emissions(trace, catalog, governor, m, None))
        .transpose()?;
    let reserved_energy = reserved_memory_energy(trace, catalog)?;
    let reserved_emissions =
        average.integrate_ms(trace.origin_ms(), trace.end_ms(), reserved_memory_power_kw(trace, catalog)?)?;
    let denom = operational_avg + reserved_emissions;
    Ok(FootprintReport {
        workflow_name: trace.workflow_name.clone(),
        resources: trace.resources_label(),
        energy,
        operational_avg,
        operational_marg,
        embodied: embodied_emissions(trace, catalog)?,
        reserved_memory_energy: reserved_energy,
        reserved_memory_emissions: reserved_emissions,
        reserved_share: if denom > 0.0 { reserved_emissions / denom } else { 0.0 },
        low_confidence: is_low_confidence(trace, catalog)?,
    })
}
