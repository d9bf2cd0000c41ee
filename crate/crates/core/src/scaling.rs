//! Resource-scaling what-ifs: other nodes, other processor governors and
//! other cluster sizes.
//!
//! Runtime changes are always data. A variant either brings its own measured
//! trace or a runtime multiplier applied to the base trace; nothing is
//! derived from clock frequencies.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::CiSeries;
use crate::error::{Error, Result};
use crate::footprint::{embodied_emissions, operational_emissions};
use crate::power::{is_low_confidence, trace_energy, NodeCatalog, PERFORMANCE};
use crate::time::{local_hour_to_utc, median_day};
use crate::trace::{makespan_hours, WorkflowTrace};

/// Relative tolerance under which two values both count as the minimum.
pub const MIN_TIE_REL_TOL: f64 = 1e-9;

/// Local start hours used for the single-task experiments.
pub const TASK_START_HOURS: [(&str, u32); 4] = [("bowtie2_build", 9), ("fastp", 11), ("fastqc", 13), ("trimgalore", 15)];

pub fn task_start_hour(process: &str) -> Option<u32> {
    let key = process.rsplit(':').next().unwrap_or(process).to_ascii_lowercase();
    TASK_START_HOURS
        .iter()
        .find(|(name, _)| key == *name || key.starts_with(&format!("{name} ")))
        .map(|(_, h)| *h)
}

/// Average and (optionally) marginal intensity for one region.
#[derive(Debug, Clone)]
pub struct SeriesSet {
    pub average: CiSeries,
    pub marginal: Option<CiSeries>,
}

impl SeriesSet {
    pub fn new(average: CiSeries, marginal: Option<CiSeries>) -> Self {
        Self { average, marginal }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            average: self.average.scaled(factor),
            marginal: self.marginal.as_ref().map(|m| m.scaled(factor)),
        }
    }
}

/// When each variant is assumed to start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StartPolicy {
    /// Keep the timestamps recorded in the trace.
    Original,
    Fixed { at: DateTime<Utc> },
    /// Mean over the middle day of every month of `year`, starting at
    /// `local_hour` in a zone `utc_offset_h` hours from UTC.
    MonthlyMedian { year: i32, local_hour: u32, utc_offset_h: i32 },
}

impl StartPolicy {
    pub fn starts(&self) -> Vec<Option<DateTime<Utc>>> {
        match *self {
            StartPolicy::Original => vec![None],
            StartPolicy::Fixed { at } => vec![Some(at)],
            StartPolicy::MonthlyMedian {
                year,
                local_hour,
                utc_offset_h,
            } => (1..=12)
                .map(|m| Some(local_hour_to_utc(median_day(year, m), local_hour, utc_offset_h)))
                .collect(),
        }
    }
}

/// Where a variant's runtime comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RuntimeSource {
    Trace(WorkflowTrace),
    /// Factor applied to every task duration and start offset of the base trace.
    Multiplier(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantGroup {
    Cluster,
    Cloud,
}

impl VariantGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantGroup::Cluster => "cluster",
            VariantGroup::Cloud => "cloud",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MinFlags {
    pub runtime: bool,
    pub energy: bool,
    pub avg: bool,
    pub marg: bool,
    pub emb: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub variant: String,
    pub group: VariantGroup,
    pub low_confidence: bool,
    pub runtime_h: f64,
    pub energy_kwh: f64,
    pub avg_g: f64,
    pub marg_g: Option<f64>,
    pub emb_g: f64,
    pub min: MinFlags,
}

/// One row per variant, minima flagged within each group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub subject: String,
    pub rows: Vec<ScenarioRow>,
}

impl ScenarioResult {
    fn new(subject: String, mut rows: Vec<ScenarioRow>) -> Self {
        flag_minima(&mut rows);
        Self { subject, rows }
    }

    pub fn row(&self, variant: &str) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }
}

fn flag_minima(rows: &mut [ScenarioRow]) {
    let groups: Vec<VariantGroup> = rows.iter().map(|r| r.group).collect();
    for g in groups {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].group == g).collect();
        let mark = |rows: &mut [ScenarioRow], get: &dyn Fn(&ScenarioRow) -> Option<f64>, set: &dyn Fn(&mut MinFlags, bool)| {
            let min = idx.iter().filter_map(|&i| get(&rows[i])).fold(f64::INFINITY, f64::min);
            for &i in &idx {
                let on = get(&rows[i]).is_some_and(|v| v <= min + min.abs() * MIN_TIE_REL_TOL);
                set(&mut rows[i].min, on);
            }
        };
        mark(rows, &|r| Some(r.runtime_h), &|f, v| f.runtime = v);
        mark(rows, &|r| Some(r.energy_kwh), &|f, v| f.energy = v);
        mark(rows, &|r| Some(r.avg_g), &|f, v| f.avg = v);
        mark(rows, &|r| r.marg_g, &|f, v| f.marg = v);
        mark(rows, &|r| Some(r.emb_g), &|f, v| f.emb = v);
    }
}

fn emissions_under(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &CiSeries,
    policy: &StartPolicy,
) -> Result<f64> {
    let starts = policy.starts();
    let mut total = 0.0;
    for s in &starts {
        total += operational_emissions(trace, catalog, governor, series, *s)?;
    }
    Ok(total / starts.len() as f64)
}

fn evaluate(
    variant: String,
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &SeriesSet,
    policy: &StartPolicy,
) -> Result<ScenarioRow> {
    let low_confidence = is_low_confidence(trace, catalog)?;
    Ok(ScenarioRow {
        variant,
        group: if low_confidence {
            VariantGroup::Cloud
        } else {
            VariantGroup::Cluster
        },
        low_confidence,
        runtime_h: makespan_hours(trace),
        energy_kwh: trace_energy(trace, catalog, governor)?.total_kwh,
        avg_g: emissions_under(trace, catalog, governor, &series.average, policy)?,
        marg_g: series
            .marginal
            .as_ref()
            .map(|m| emissions_under(trace, catalog, governor, m, policy))
            .transpose()?,
        emb_g: embodied_emissions(trace, catalog)?,
        min: MinFlags::default(),
    })
}

fn collect_rows(jobs: Vec<Result<(String, WorkflowTrace, String)>>, catalog: &NodeCatalog, series: &SeriesSet, policy: &StartPolicy) -> Result<Vec<ScenarioRow>> {
    let jobs = jobs.into_iter().collect::<Result<Vec<_>>>()?;
    jobs.par_iter()
        .map(|(variant, trace, governor)| evaluate(variant.clone(), trace, catalog, governor, series, policy))
        .collect()
}

/// Runs the same task (or workflow) on each candidate node type, one node each.
///
/// The base trace's own node needs no runtime entry; every other candidate
/// needs a per-node trace or a multiplier in `runtimes`.
pub fn compare_nodes(
    base: &WorkflowTrace,
    candidates: &[String],
    runtimes: &BTreeMap<String, RuntimeSource>,
    catalog: &NodeCatalog,
    series: &SeriesSet,
    policy: &StartPolicy,
) -> Result<ScenarioResult> {
    if candidates.is_empty() {
        return Err(Error::MissingVariantTrace("no candidate nodes".into()));
    }
    let base_nodes: Vec<&str> = base.node_assignment.iter().map(|n| n.node_id.as_str()).collect();
    let jobs = candidates
        .iter()
        .map(|node| {
            catalog.get(node)?;
            let trace = match runtimes.get(node) {
                Some(RuntimeSource::Trace(t)) => t.retargeted(node),
                Some(RuntimeSource::Multiplier(m)) => base.stretched(*m).retargeted(node),
                None if base_nodes == [node.as_str()] => base.retargeted(node),
                None => return Err(Error::MissingVariantTrace(node.clone())),
            };
            Ok((node.clone(), trace, PERFORMANCE.to_string()))
        })
        .collect();
    Ok(ScenarioResult::new(
        base.workflow_name.clone(),
        collect_rows(jobs, catalog, series, policy)?,
    ))
}

/// Runs `base` (recorded under `performance`) under each governor.
///
/// Runtime comes from `runtimes` when present, otherwise from the catalog
/// multiplier of the base trace's first node.
pub fn compare_governors(
    base: &WorkflowTrace,
    governors: &[String],
    runtimes: &BTreeMap<String, RuntimeSource>,
    catalog: &NodeCatalog,
    series: &SeriesSet,
    policy: &StartPolicy,
) -> Result<ScenarioResult> {
    if governors.is_empty() {
        return Err(Error::MissingVariantTrace("no governors".into()));
    }
    let jobs = governors
        .iter()
        .map(|g| {
            for n in &base.node_assignment {
                catalog.get(&n.node_id)?.curve(g)?;
            }
            let trace = match runtimes.get(g) {
                Some(RuntimeSource::Trace(t)) => t.clone(),
                Some(RuntimeSource::Multiplier(m)) => base.stretched(*m),
                None => {
                    let first = &base.node_assignment[0].node_id;
                    match catalog.get(first)?.runtime_multiplier(g) {
                        Some(1.0) => base.clone(),
                        Some(m) => base.stretched(m),
                        None if g == PERFORMANCE => base.clone(),
                        None => return Err(Error::MissingVariantTrace(g.clone())),
                    }
                }
            };
            Ok((g.clone(), trace, g.clone()))
        })
        .collect();
    Ok(ScenarioResult::new(
        format!("{} on {}", base.workflow_name, base.resources_label()),
        collect_rows(jobs, catalog, series, policy)?,
    ))
}

/// One labelled trace per cluster size.
pub fn compare_cluster_sizes(
    traces: &[(String, WorkflowTrace)],
    catalog: &NodeCatalog,
    governor: &str,
    series: &SeriesSet,
    policy: &StartPolicy,
) -> Result<ScenarioResult> {
    let Some((_, first)) = traces.first() else {
        return Err(Error::MissingVariantTrace("no cluster-size traces".into()));
    };
    let jobs = traces
        .iter()
        .map(|(label, t)| Ok((label.clone(), t.clone(), governor.to_string())))
        .collect();
    Ok(ScenarioResult::new(
        first.workflow_name.clone(),
        collect_rows(jobs, catalog, series, policy)?,
    ))
}

/// Number of days between the first and last start of a monthly-median policy.
pub fn policy_span_days(policy: &StartPolicy) -> i64 {
    let starts: Vec<DateTime<Utc>> = policy.starts().into_iter().flatten().collect();
    match (starts.first(), starts.last()) {
        (Some(a), Some(b)) => (*b - *a).num_days(),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::SignalKind;
    use crate::power::POWERSAVE;
    use crate::trace::{NodeCount, TaskRecord};
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 15, 9, 0, 0).unwrap()
    }

    fn task(node: &str, hours: f64, cpus: u32, util: f64) -> TaskRecord {
        TaskRecord {
            task_id: "1".into(),
            process_name: "bowtie2_build".into(),
            submit_time: t0(),
            start_time: t0(),
            duration_s: hours * 3600.0,
            cpu_utilization: util,
            cpus_allocated: cpus,
            memory_allocated: 0,
            node_id: node.into(),
        }
    }

    fn single(node: &str, hours: f64, cpus: u32, util: f64) -> WorkflowTrace {
        WorkflowTrace::new("bowtie2_build", vec![task(node, hours, cpus, util)], vec![NodeCount::new(node, 1)], None).unwrap()
    }

    fn year_series(v: f64) -> SeriesSet {
        let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let avg = CiSeries::from_values("GB", SignalKind::Average, start, 3600, vec![v; 366 * 24]).unwrap();
        SeriesSet::new(avg.clone(), Some(avg.scaled(1.5)))
    }

    #[test]
    fn start_hours() {
        assert_eq!(task_start_hour("bowtie2_build"), Some(9));
        assert_eq!(task_start_hour("NFCORE_CHIPSEQ:TRIMGALORE"), Some(15));
        assert_eq!(task_start_hour("FASTQC (sample1)"), Some(13));
        assert_eq!(task_start_hour("multiqc"), None);
    }

    #[test]
    fn identical_candidates_all_minimal() {
        let c = NodeCatalog::builtin();
        let base = single("olympus-1", 0.25, 8, 800.0);
        let cands = vec!["olympus-1".to_string(), "olympus-2".to_string(), "olympus-3".to_string()];
        let runtimes = BTreeMap::from([
            ("olympus-2".to_string(), RuntimeSource::Multiplier(1.0)),
            ("olympus-3".to_string(), RuntimeSource::Trace(base.clone())),
        ]);
        let r = compare_nodes(&base, &cands, &runtimes, &c, &year_series(200.0), &StartPolicy::Original).unwrap();
        let first = &r.rows[0];
        for row in &r.rows {
            assert_eq!(row.energy_kwh, first.energy_kwh);
            assert_eq!(row.avg_g, first.avg_g);
            assert_eq!(row.min, MinFlags { runtime: true, energy: true, avg: true, marg: true, emb: true });
        }
    }

    #[test]
    fn fastest_node_is_not_most_efficient() {
        let c = NodeCatalog::builtin();
        let base = single("olympus-1", 0.25, 8, 800.0);
        let runtimes = BTreeMap::from([("elysium".to_string(), RuntimeSource::Trace(single("elysium", 0.15, 32, 800.0)))]);
        let r = compare_nodes(
            &base,
            &["elysium".into(), "olympus-1".into()],
            &runtimes,
            &c,
            &year_series(200.0),
            &StartPolicy::MonthlyMedian { year: 2024, local_hour: 9, utc_offset_h: 0 },
        )
        .unwrap();
        let e = r.row("elysium").unwrap();
        let o = r.row("olympus-1").unwrap();
        assert!(e.min.runtime && !o.min.runtime);
        assert!(o.min.energy && !e.min.energy);
        assert!(o.min.emb);
    }

    #[test]
    fn missing_runtime_is_an_error() {
        let c = NodeCatalog::builtin();
        let base = single("olympus-1", 0.25, 8, 800.0);
        let err = compare_nodes(&base, &["sherwood".into()], &BTreeMap::new(), &c, &year_series(1.0), &StartPolicy::Original);
        assert!(matches!(err, Err(Error::MissingVariantTrace(n)) if n == "sherwood"));
    }

    #[test]
    fn cloud_rows_form_their_own_group() {
        let c = NodeCatalog::builtin();
        let base = single("sherwood", 1.0, 2, 200.0);
        let runtimes = BTreeMap::from([("gcp-n1".to_string(), RuntimeSource::Multiplier(1.0))]);
        let r = compare_nodes(&base, &["sherwood".into(), "gcp-n1".into()], &runtimes, &c, &year_series(100.0), &StartPolicy::Original).unwrap();
        let cloud = r.row("gcp-n1").unwrap();
        assert_eq!(cloud.group, VariantGroup::Cloud);
        assert!(cloud.low_confidence);
        assert!(cloud.min.energy && r.row("sherwood").unwrap().min.energy);
    }

    #[test]
    fn governor_multiplier_from_catalog() {
        let c = NodeCatalog::builtin();
        let base = WorkflowTrace::new(
            "chipseq",
            vec![task("camelot", 3.3, 32, 2400.0)],
            vec![NodeCount::new("camelot", 8)],
            None,
        )
        .unwrap();
        let r = compare_governors(
            &base,
            &[PERFORMANCE.into(), POWERSAVE.into()],
            &BTreeMap::new(),
            &c,
            &year_series(300.0),
            &StartPolicy::Fixed { at: t0() },
        )
        .unwrap();
        let p = r.row(PERFORMANCE).unwrap();
        let s = r.row(POWERSAVE).unwrap();
        assert!((s.runtime_h / p.runtime_h - 2.58).abs() < 1e-6);
        assert!(p.min.runtime);
        assert!((s.emb_g / p.emb_g - 2.58).abs() < 1e-6);
    }

    #[test]
    fn unknown_governor() {
        let c = NodeCatalog::builtin();
        let base = single("gcp-n1", 1.0, 2, 100.0);
        assert!(matches!(
            compare_governors(&base, &[POWERSAVE.into()], &BTreeMap::new(), &c, &year_series(1.0), &StartPolicy::Original),
            Err(Error::UnknownGovernor { .. })
        ));
    }

    #[test]
    fn cluster_sizes_match_embodied() {
        let c = NodeCatalog::builtin();
        let mk = |n: u32, h: f64| {
            WorkflowTrace::new("chipseq", vec![task("atlantis", h, 32, 3200.0)], vec![NodeCount::new("atlantis", n)], None).unwrap()
        };
        let traces = vec![("2".to_string(), mk(2, 11.84)), ("4".to_string(), mk(4, 5.97)), ("8".to_string(), mk(8, 3.13))];
        let r = compare_cluster_sizes(&traces, &c, PERFORMANCE, &year_series(100.0), &StartPolicy::Original).unwrap();
        for ((_, t), row) in traces.iter().zip(&r.rows) {
            assert_eq!(row.emb_g, embodied_emissions(t, &c).unwrap());
        }
        assert!(r.row("8").unwrap().min.runtime);
        assert!(r.row("2").unwrap().min.emb);
    }

    #[test]
    fn policy_covers_the_year() {
        let p = StartPolicy::MonthlyMedian { year: 2023, local_hour: 9, utc_offset_h: 1 };
        let s = p.starts();
        assert_eq!(s.len(), 12);
        assert_eq!(s[0], Some(Utc.with_ymd_and_hms(2023, 1, 16, 8, 0, 0).unwrap()));
        assert_eq!(s[1], Some(Utc.with_ymd_and_hms(2023, 2, 14, 8, 0, 0).unwrap()));
        assert_eq!(policy_span_days(&p), 334);
    }
}
