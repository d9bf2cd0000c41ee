//! Node catalog and the linear power model.
//!
//! A task is charged the node's idle power in proportion to the share of
//! cores it was allocated, plus the dynamic range in proportion to the cores
//! it kept busy, plus a per-GB memory term on its allocated memory:
//!
//! ```text
//! P = (p_idle * alloc/total + (p_max - p_idle) * busy/total) / 1000
//!     + mem_coeff * mem_gb / 1000            [kW]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{makespan_hours, TaskRecord, WorkflowTrace};

/// Memory power coefficient used by the Cloud Carbon Footprint methodology.
pub const DEFAULT_MEM_COEFF_W_PER_GB: f64 = 0.392;
/// Four years of continuous operation.
pub const DEFAULT_LIFETIME_H: f64 = 35_040.0;

pub const PERFORMANCE: &str = "performance";
pub const POWERSAVE: &str = "powersave";

const GIB: f64 = 1_073_741_824.0;

fn default_mem_coeff() -> f64 {
    DEFAULT_MEM_COEFF_W_PER_GB
}

fn default_lifetime() -> f64 {
    DEFAULT_LIFETIME_H
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    /// Whole node at 0% utilization.
    pub p_idle_w: f64,
    /// Whole node at 100% utilization.
    pub p_max_w: f64,
    #[serde(default = "default_mem_coeff")]
    pub mem_coeff_w_per_gb: f64,
}

impl PowerCurve {
    pub fn new(p_idle_w: f64, p_max_w: f64, mem_coeff_w_per_gb: f64) -> Self {
        Self {
            p_idle_w,
            p_max_w,
            mem_coeff_w_per_gb,
        }
    }

    /// Same curve with idle and max power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p_idle_w: self.p_idle_w * factor,
            p_max_w: self.p_max_w * factor,
            mem_coeff_w_per_gb: self.mem_coeff_w_per_gb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub hardware: String,
    pub cpus_total: u32,
    pub memory_total_bytes: u64,
    /// Whole-device life-cycle emissions, gCO2e.
    pub lca_emissions_g: f64,
    #[serde(default = "default_lifetime")]
    pub lifetime_h: f64,
    pub governors: BTreeMap<String, PowerCurve>,
    /// Measured runtime factor of each governor relative to `performance`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub runtime_multipliers: BTreeMap<String, f64>,
    /// Power curves are estimates rather than fitted to measurements.
    #[serde(default)]
    pub estimated: bool,
    /// Cloud instance relying on average coefficients.
    #[serde(default)]
    pub low_confidence: bool,
}

impl NodeSpec {
    pub fn curve(&self, governor: &str) -> Result<&PowerCurve> {
        self.governors
            .get(governor)
            .ok_or_else(|| Error::UnknownGovernor {
                node: self.node_id.clone(),
                governor: governor.to_string(),
            })
    }

    /// `performance` when present, otherwise the first governor by name.
    pub fn default_curve(&self) -> &PowerCurve {
        self.governors
            .get(PERFORMANCE)
            .or_else(|| self.governors.values().next())
            .expect("validated node has a governor")
    }

    pub fn memory_gb(&self) -> f64 {
        self.memory_total_bytes as f64 / GIB
    }

    pub fn runtime_multiplier(&self, governor: &str) -> Option<f64> {
        self.runtime_multipliers.get(governor).copied()
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidNode {
                node: self.node_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.cpus_total == 0 {
            return bad("cpus_total must be positive");
        }
        if self.lifetime_h.is_nan() || self.lifetime_h <= 0.0 {
            return bad("lifetime_h must be positive");
        }
        if self.lca_emissions_g.is_nan() || self.lca_emissions_g < 0.0 {
            return bad("lca_emissions_g must be non-negative");
        }
        if self.governors.is_empty() {
            return bad("at least one governor is required");
        }
        for (name, c) in &self.governors {
            if !(c.p_idle_w >= 0.0 && c.p_max_w >= c.p_idle_w && c.mem_coeff_w_per_gb >= 0.0) {
                return bad(&format!("governor `{name}` violates 0 <= p_idle <= p_max"));
            }
        }
        if self.runtime_multipliers.values().any(|m| m.is_nan() || *m <= 0.0) {
            return bad("runtime multipliers must be positive");
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    nodes: Vec<NodeSpec>,
}

/// Node specs keyed by id. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "CatalogFile", into = "CatalogFile")]
pub struct NodeCatalog {
    nodes: BTreeMap<String, NodeSpec>,
}

impl TryFrom<CatalogFile> for NodeCatalog {
    type Error = Error;

    fn try_from(file: CatalogFile) -> Result<Self> {
        let mut catalog = NodeCatalog::default();
        for node in file.nodes {
            catalog.insert(node)?;
        }
        Ok(catalog)
    }
}

impl From<NodeCatalog> for CatalogFile {
    fn from(c: NodeCatalog) -> Self {
        CatalogFile {
            nodes: c.nodes.into_values().collect(),
        }
    }
}

impl NodeCatalog {
    /// The shipped catalog: the study's machines with documented estimates
    /// for power curves.
    pub fn builtin() -> Self {
        Self::from_json_str(include_str!("../data/catalog.json")).expect("bundled catalog is valid")
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: CatalogFile = serde_json::from_str(json)?;
        file.try_into()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn insert(&mut self, node: NodeSpec) -> Result<()> {
        node.validate()?;
        self.nodes.insert(node.node_id.clone(), node);
        Ok(())
    }

    pub fn get(&self, node_id: &str) -> Result<&NodeSpec> {
        self.nodes
            .get(node_id)
            .ok_or_else(|| Error::UnknownNode(node_id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub cpu_kwh: f64,
    pub memory_kwh: f64,
    pub total_kwh: f64,
}

impl EnergyBreakdown {
    pub fn new(cpu_kwh: f64, memory_kwh: f64) -> Self {
        Self {
            cpu_kwh,
            memory_kwh,
            total_kwh: cpu_kwh + memory_kwh,
        }
    }
}

impl std::ops::Add for EnergyBreakdown {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.cpu_kwh + rhs.cpu_kwh, self.memory_kwh + rhs.memory_kwh)
    }
}

impl std::iter::Sum for EnergyBreakdown {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// CPU and memory power of a running task, in kW.
pub fn task_power_split(task: &TaskRecord, node: &NodeSpec, governor: &str) -> Result<(f64, f64)> {
    let curve = node.curve(governor)?;
    let total = node.cpus_total as f64;
    let alloc = task.cpus_allocated as f64;
    let busy = task.cpu_utilization / 100.0;
    let cpu_w = curve.p_idle_w * alloc / total + (curve.p_max_w - curve.p_idle_w) * busy / total;
    let mem_w = curve.mem_coeff_w_per_gb * task.memory_gb();
    Ok((cpu_w / 1000.0, mem_w / 1000.0))
}

/// Power drawn by a task while it runs, in kW.
pub fn task_power(task: &TaskRecord, node: &NodeSpec, governor: &str) -> Result<f64> {
    let (cpu, mem) = task_power_split(task, node, governor)?;
    Ok(cpu + mem)
}

pub fn task_energy(task: &TaskRecord, node: &NodeSpec, governor: &str) -> Result<EnergyBreakdown> {
    let (cpu, mem) = task_power_split(task, node, governor)?;
    let h = task.duration_hours();
    Ok(EnergyBreakdown::new(cpu * h, mem * h))
}

pub fn trace_energy(trace: &WorkflowTrace, catalog: &NodeCatalog, governor: &str) -> Result<EnergyBreakdown> {
    trace
        .tasks
        .iter()
        .map(|t| task_energy(t, catalog.get(&t.node_id)?, governor))
        .sum()
}

/// Memory power of every reserved node at full capacity, in kW.
pub fn reserved_memory_power_kw(trace: &WorkflowTrace, catalog: &NodeCatalog) -> Result<f64> {
    let mut watts = 0.0;
    for n in &trace.node_assignment {
        let node = catalog.get(&n.node_id)?;
        watts += n.count as f64 * node.default_curve().mem_coeff_w_per_gb * node.memory_gb();
    }
    Ok(watts / 1000.0)
}

/// Energy of keeping the full memory of all reserved nodes powered for the
/// workflow's makespan, in kWh.
pub fn reserved_memory_energy(trace: &WorkflowTrace, catalog: &NodeCatalog) -> Result<f64> {
    Ok(reserved_memory_power_kw(trace, catalog)? * makespan_hours(trace))
}

/// Idle power of the whole reserved cluster, in kW.
pub fn cluster_idle_power_kw(trace: &WorkflowTrace, catalog: &NodeCatalog, governor: &str) -> Result<f64> {
    let mut watts = 0.0;
    for n in &trace.node_assignment {
        watts += n.count as f64 * catalog.get(&n.node_id)?.curve(governor)?.p_idle_w;
    }
    Ok(watts / 1000.0)
}

/// True when any reserved node relies on low-confidence coefficients.
pub fn is_low_confidence(trace: &WorkflowTrace, catalog: &NodeCatalog) -> Result<bool> {
    for n in &trace.node_assignment {
        if catalog.get(&n.node_id)?.low_confidence {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::NodeCount;
    use chrono::{TimeZone, Utc};

    fn node(p_idle: f64, p_max: f64, cpus: u32, mem_gb: u64) -> NodeSpec {
        NodeSpec {
            node_id: "n".into(),
            hardware: String::new(),
            cpus_total: cpus,
            memory_total_bytes: mem_gb << 30,
            lca_emissions_g: 1000.0,
            lifetime_h: DEFAULT_LIFETIME_H,
            governors: BTreeMap::from([(PERFORMANCE.to_string(), PowerCurve::new(p_idle, p_max, 0.392))]),
            runtime_multipliers: BTreeMap::new(),
            estimated: false,
            low_confidence: false,
        }
    }

    fn task(cpus: u32, util: f64, mem_gb: u64, dur_s: f64) -> TaskRecord {
        let t = Utc.with_ymd_and_hms(2024, 1, 8, 9, 0, 0).unwrap();
        TaskRecord {
            task_id: "1".into(),
            process_name: "p".into(),
            submit_time: t,
            start_time: t,
            duration_s: dur_s,
            cpu_utilization: util,
            cpus_allocated: cpus,
            memory_allocated: mem_gb << 30,
            node_id: "n".into(),
        }
    }

    #[test]
    fn idle_and_full_load_identities() {
        let n = node(80.0, 280.0, 16, 64);
        assert_eq!(task_power(&task(16, 0.0, 0, 1.0), &n, PERFORMANCE).unwrap(), 0.08);
        assert_eq!(task_power(&task(16, 1600.0, 0, 1.0), &n, PERFORMANCE).unwrap(), 0.28);
    }

    #[test]
    fn formula_hand_evaluation() {
        // (80*4/16 + 200*2/16)/1000 + 0.392*8/1000 = 0.045 + 0.003136
        let n = node(80.0, 280.0, 16, 64);
        let p = task_power(&task(4, 200.0, 8, 1.0), &n, PERFORMANCE).unwrap();
        assert!((p - 0.048136).abs() < 1e-15, "{p}");
    }

    #[test]
    fn energy_breakdown() {
        let n = node(80.0, 280.0, 16, 64);
        assert_eq!(task_energy(&task(4, 200.0, 8, 0.0), &n, PERFORMANCE).unwrap(), EnergyBreakdown::default());
        let e = task_energy(&task(16, 1600.0, 0, 3600.0), &n, PERFORMANCE).unwrap();
        assert_eq!(e.cpu_kwh, 0.28);
        assert_eq!(e.memory_kwh, 0.0);
        let e = task_energy(&task(4, 200.0, 8, 5400.0), &n, PERFORMANCE).unwrap();
        assert!((e.total_kwh - (e.cpu_kwh + e.memory_kwh)).abs() <= 1e-12 * e.total_kwh);
    }

    #[test]
    fn unknown_governor() {
        let n = node(80.0, 280.0, 16, 64);
        assert!(matches!(
            task_power(&task(1, 0.0, 0, 1.0), &n, POWERSAVE),
            Err(Error::UnknownGovernor { governor, .. }) if governor == POWERSAVE
        ));
    }

    #[test]
    fn reserved_memory_direct_formula() {
        let mut catalog = NodeCatalog::default();
        catalog.insert(node(80.0, 280.0, 16, 32)).unwrap();
        let trace = WorkflowTrace::new("w", vec![task(1, 0.0, 0, 36_000.0)], vec![NodeCount::new("n", 1)], None).unwrap();
        let e = reserved_memory_energy(&trace, &catalog).unwrap();
        assert!((e - 0.12544).abs() < 1e-12, "{e}");
    }

    #[test]
    fn reserved_memory_atlantis_cluster() {
        // 8 x 128 GB at 0.392 W/GB over 3.71 h
        let catalog = NodeCatalog::builtin();
        let mut t = task(1, 0.0, 0, 3.71 * 3600.0);
        t.node_id = "atlantis".into();
        let trace = WorkflowTrace::new("w", vec![t], vec![NodeCount::new("atlantis", 8)], None).unwrap();
        let e = reserved_memory_energy(&trace, &catalog).unwrap();
        assert!((e - 1.49).abs() < 0.005, "{e}");
    }

    #[test]
    fn builtin_catalog_matches_hardware_table() {
        let c = NodeCatalog::builtin();
        assert_eq!(c.len(), 10);
        let lca = |id: &str| c.get(id).unwrap().lca_emissions_g;
        assert_eq!(lca("atlantis"), 23_170.0);
        assert_eq!(lca("camelot"), 21_000.0);
        assert_eq!(lca("elysium"), 46_730.0);
        assert_eq!(lca("olympus-2"), 19_800.0);
        assert_eq!(lca("sherwood"), 12_370.0);
        assert_eq!(lca("gcp-n1"), 19_000.0);
        assert_eq!(c.get("gcp-n1").unwrap().memory_gb(), 7.5);
        assert_eq!(c.get("camelot").unwrap().memory_gb(), 256.0);
        assert!(c.get("gcp-c2").unwrap().low_confidence);
        assert!(c.iter().all(|n| n.lifetime_h == DEFAULT_LIFETIME_H));
        let back = NodeCatalog::from_json_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_curve_rejected() {
        let mut catalog = NodeCatalog::default();
        assert!(matches!(catalog.insert(node(300.0, 100.0, 4, 1)), Err(Error::InvalidNode { .. })));
        let mut n = node(1.0, 2.0, 4, 1);
        n.lifetime_h = 0.0;
        assert!(catalog.insert(n).is_err());
    }
}
