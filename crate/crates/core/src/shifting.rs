//! Carbon-aware temporal shifting.
//!
//! *Entire* shifting moves the whole workflow to each whole-hour start inside
//! a flexibility window and keeps the cheapest placement. *Interrupted*
//! shifting cuts the execution into hourly windows (by task start hour) and
//! maps them, in chronological order, onto one-hour carbon-intensity
//! intervals inside `[anchor, anchor + length + N)`, pausing between
//! non-adjacent intervals.
//!
//! A pause after window `i` delays the tasks that started in `i` but had not
//! finished by its end. The delay is bounded by the longest such task (or,
//! with [`OverheadRule::SpillOver`], by its run-over past the window end).
//! During the delay the reserved cluster idles: that idle power is charged at
//! the intensity of window `i`'s interval and the embodied share grows by the
//! delay.
//!
//! Sub-hourly series are averaged to hourly intervals before shifting.

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::{CiSeries, CiWindow};
use crate::error::{Error, Result};
use crate::footprint::{embodied_for_hours, operational_emissions};
use crate::power::{cluster_idle_power_kw, task_energy, NodeCatalog};
use crate::time::{local_hour_to_utc, second_monday, HOUR_MS};
use crate::trace::WorkflowTrace;

/// Placements whose emissions differ by less than this relative amount are
/// treated as ties and the earlier start wins.
pub const TIE_REL_TOL: f64 = 1e-12;

/// Window lengths evaluated by default, in hours.
pub const DEFAULT_WINDOWS_H: [u32; 5] = [6, 12, 24, 48, 96];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlexibilityWindow {
    pub anchor: DateTime<Utc>,
    pub length_h: u32,
}

impl FlexibilityWindow {
    pub fn new(anchor: DateTime<Utc>, length_h: u32) -> Self {
        Self { anchor, length_h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    Entire,
    Interrupted,
}

impl ShiftMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ShiftMode::Entire => "entire",
            ShiftMode::Interrupted => "interrupted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverheadRule {
    /// Full duration of the longest partial task.
    #[default]
    FullDuration,
    /// Largest run-over of a partial task past the window end.
    SpillOver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalSelection {
    /// Cheapest order-preserving mapping of windows to intervals, weighting
    /// each interval by the energy of the window placed on it. Equals
    /// `LowestN` whenever all windows carry the same energy.
    #[default]
    OrderPreserving,
    /// The N lowest-intensity intervals, taken in chronological order.
    LowestN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftOptions {
    pub overhead_rule: OverheadRule,
    /// Charge reserved-cluster idle power during interruption overhead.
    pub charge_idle_overhead: bool,
    pub selection: IntervalSelection,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self {
            overhead_rule: OverheadRule::FullDuration,
            charge_idle_overhead: true,
            selection: IntervalSelection::OrderPreserving,
        }
    }
}

/// One hour of the original execution, by task start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionWindow {
    pub index: usize,
    pub tasks_complete: Vec<String>,
    pub tasks_partial: Vec<String>,
    /// Energy of all task time falling inside this hour.
    pub window_energy_kwh: f64,
    pub overhead_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowAssignment {
    pub window: usize,
    pub interval: CiWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftPlan {
    pub mode: ShiftMode,
    pub flex: FlexibilityWindow,
    /// Start of the first assigned interval.
    pub start: DateTime<Utc>,
    pub assignment: Vec<WindowAssignment>,
    pub projected_emissions: f64,
    pub baseline_emissions: f64,
    pub reduction: f64,
    pub interruptions: usize,
    pub total_overhead_s: f64,
    /// Idle-power emissions during overhead, included in `projected_emissions`.
    pub overhead_emissions: f64,
    /// Embodied emissions added by the overhead.
    pub extra_embodied: f64,
}

fn reduction(baseline: f64, projected: f64) -> f64 {
    if baseline > 0.0 {
        (baseline - projected) / baseline
    } else {
        0.0
    }
}

fn hourly(series: &CiSeries) -> Result<std::borrow::Cow<'_, CiSeries>> {
    if series.resolution_s() == 3600 {
        Ok(std::borrow::Cow::Borrowed(series))
    } else {
        series.hourly().map(std::borrow::Cow::Owned)
    }
}

/// Splits the execution into hourly windows relative to the first task start.
pub fn build_windows(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    rule: OverheadRule,
) -> Result<Vec<ExecutionWindow>> {
    let origin = trace.origin_ms();
    let span = trace.end_ms() - origin;
    let count = (span.max(1) as u64).div_ceil(HOUR_MS as u64) as usize;
    let mut windows: Vec<ExecutionWindow> = (0..count)
        .map(|index| ExecutionWindow {
            index,
            tasks_complete: Vec::new(),
            tasks_partial: Vec::new(),
            window_energy_kwh: 0.0,
            overhead_s: 0.0,
        })
        .collect();

    for task in &trace.tasks {
        let s = task.start_ms() - origin;
        let e = task.end_ms() - origin;
        let idx = (s / HOUR_MS) as usize;
        let window_end = (idx as i64 + 1) * HOUR_MS;
        let w = &mut windows[idx];
        if e <= window_end {
            w.tasks_complete.push(task.task_id.clone());
        } else {
            w.tasks_partial.push(task.task_id.clone());
            let bound = match rule {
                OverheadRule::FullDuration => task.duration_s,
                OverheadRule::SpillOver => (e - window_end) as f64 / 1000.0,
            };
            w.overhead_s = w.overhead_s.max(bound);
        }

        let energy = task_energy(task, catalog.get(&task.node_id)?, governor)?.total_kwh;
        if e <= s {
            windows[idx].window_energy_kwh += energy;
            continue;
        }
        let len = (e - s) as f64;
        let mut h = idx;
        let mut cursor = s;
        while cursor < e {
            let hi = ((h as i64 + 1) * HOUR_MS).min(e);
            windows[h].window_energy_kwh += energy * (hi - cursor) as f64 / len;
            cursor = hi;
            h += 1;
        }
    }
    Ok(windows)
}

/// Tries every whole-hour start in `[anchor, anchor + length]` and keeps the
/// lowest-emission placement. The baseline is the placement at `anchor`.
pub fn shift_entire(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &CiSeries,
    flex: FlexibilityWindow,
) -> Result<ShiftPlan> {
    let series = hourly(series)?;
    let windows = window_count(trace);
    entire_plan(trace, catalog, governor, &series, flex, windows)
}

fn window_count(trace: &WorkflowTrace) -> usize {
    let span = trace.end_ms() - trace.origin_ms();
    (span.max(1) as u64).div_ceil(HOUR_MS as u64) as usize
}

fn entire_plan(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &CiSeries,
    flex: FlexibilityWindow,
    windows: usize,
) -> Result<ShiftPlan> {
    let at = |k: u32| flex.anchor + Duration::hours(k as i64);
    let baseline = operational_emissions(trace, catalog, governor, series, Some(flex.anchor))?;
    let (mut best_k, mut best) = (0u32, baseline);
    for k in 1..=flex.length_h {
        let g = operational_emissions(trace, catalog, governor, series, Some(at(k)))?;
        if g < best - TIE_REL_TOL * best.abs() {
            best_k = k;
            best = g;
        }
    }
    let start = at(best_k);
    let assignment = series
        .hourly_windows(start, windows)?
        .into_iter()
        .enumerate()
        .map(|(window, interval)| WindowAssignment { window, interval })
        .collect();
    Ok(ShiftPlan {
        mode: ShiftMode::Entire,
        flex,
        start,
        assignment,
        projected_emissions: best,
        baseline_emissions: baseline,
        reduction: reduction(baseline, best),
        interruptions: 0,
        total_overhead_s: 0.0,
        overhead_emissions: 0.0,
        extra_embodied: 0.0,
    })
}

/// Maps hourly execution windows onto low-intensity intervals, preserving
/// their order. The baseline is the uninterrupted run at `anchor`.
pub fn shift_interrupted(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &CiSeries,
    flex: FlexibilityWindow,
    options: &ShiftOptions,
) -> Result<ShiftPlan> {
    let series = hourly(series)?;
    let windows = build_windows(trace, catalog, governor, options.overhead_rule)?;
    let ctx = InterruptCtx::new(trace, catalog, governor, options)?;
    ctx.plan(&series, flex, &windows)
}

struct InterruptCtx {
    idle_kw: f64,
    embodied_per_h: f64,
    selection: IntervalSelection,
}

impl InterruptCtx {
    fn new(trace: &WorkflowTrace, catalog: &NodeCatalog, governor: &str, options: &ShiftOptions) -> Result<Self> {
        let idle_kw = if options.charge_idle_overhead {
            cluster_idle_power_kw(trace, catalog, governor)?
        } else {
            0.0
        };
        Ok(Self {
            idle_kw,
            embodied_per_h: embodied_for_hours(trace, catalog, 1.0)?,
            selection: options.selection,
        })
    }

    fn plan(&self, series: &CiSeries, flex: FlexibilityWindow, windows: &[ExecutionWindow]) -> Result<ShiftPlan> {
        let n = windows.len();
        if n > flex.length_h as usize {
            return Err(Error::InfeasibleWindow {
                windows: n,
                length_h: flex.length_h,
            });
        }
        let intervals = series.hourly_windows(flex.anchor, flex.length_h as usize + n)?;
        let ci: Vec<f64> = intervals.iter().map(|w| w.mean_ci).collect();
        let energy: Vec<f64> = windows.iter().map(|w| w.window_energy_kwh).collect();
        // grams of idle emissions per g/kWh if window i is followed by a pause
        let pause: Vec<f64> = windows.iter().map(|w| self.idle_kw * w.overhead_s / 3600.0).collect();

        let baseline = energy.iter().zip(&ci).fold(0.0, |acc, (e, c)| e * c + acc);
        let chosen = match self.selection {
            IntervalSelection::LowestN => lowest_n(&ci, n),
            IntervalSelection::OrderPreserving => order_preserving(&energy, &pause, &ci),
        };

        let mut projected = 0.0;
        let mut overhead_g = 0.0;
        let mut overhead_s = 0.0;
        let mut interruptions = 0;
        for (i, &j) in chosen.iter().enumerate() {
            if i > 0 && j != chosen[i - 1] + 1 {
                let cost = pause[i - 1] * ci[chosen[i - 1]];
                projected += cost;
                overhead_g += cost;
                overhead_s += windows[i - 1].overhead_s;
                interruptions += 1;
            }
            projected += energy[i] * ci[j];
        }
        let assignment = chosen
            .iter()
            .enumerate()
            .map(|(window, &j)| WindowAssignment {
                window,
                interval: intervals[j],
            })
            .collect();
        Ok(ShiftPlan {
            mode: ShiftMode::Interrupted,
            flex,
            start: intervals[chosen[0]].start,
            assignment,
            projected_emissions: projected,
            baseline_emissions: baseline,
            reduction: reduction(baseline, projected),
            interruptions,
            total_overhead_s: overhead_s,
            overhead_emissions: overhead_g,
            extra_embodied: self.embodied_per_h * overhead_s / 3600.0,
        })
    }
}

/// Indices of the `n` smallest values, ties to the earlier index, returned in
/// ascending index order.
fn lowest_n(ci: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ci.len()).collect();
    order.sort_by(|&a, &b| ci[a].total_cmp(&ci[b]).then(a.cmp(&b)));
    let mut picked = order[..n].to_vec();
    picked.sort_unstable();
    picked
}

/// Minimum-cost strictly increasing assignment of windows to intervals.
///
/// Placing window `i` on interval `j` costs `energy[i] * ci[j]`; a pause
/// between windows `i` and `i + 1` costs `pause[i] * ci[j_i]`. Ties prefer a
/// contiguous continuation, then the earlier interval.
fn order_preserving(energy: &[f64], pause: &[f64], ci: &[f64]) -> Vec<usize> {
    let n = energy.len();
    let m = ci.len();
    let slack = m - n;
    let mut cost = vec![vec![f64::INFINITY; m]; n];
    let mut parent = vec![vec![usize::MAX; m]; n];
    for j in 0..=slack {
        cost[0][j] = energy[0] * ci[j];
    }
    for i in 1..n {
        // best predecessor among intervals strictly before j - 1, pause included
        let mut gap_best = f64::INFINITY;
        let mut gap_arg = usize::MAX;
        for j in i..=i + slack {
            if j >= 2 {
                let k = j - 2;
                let c = cost[i - 1][k] + pause[i - 1] * ci[k];
                if c < gap_best {
                    gap_best = c;
                    gap_arg = k;
                }
            }
            let contig = cost[i - 1][j - 1];
            let (prev, arg) = if contig <= gap_best {
                (contig, j - 1)
            } else {
                (gap_best, gap_arg)
            };
            if prev.is_finite() {
                cost[i][j] = energy[i] * ci[j] + prev;
                parent[i][j] = arg;
            }
        }
    }
    let mut j = (0..m)
        .fold(None::<usize>, |best, j| match best {
            Some(b) if cost[n - 1][b] <= cost[n - 1][j] => Some(b),
            _ if cost[n - 1][j].is_finite() => Some(j),
            _ => best,
        })
        .expect("at least one feasible assignment");
    let mut out = vec![0; n];
    for i in (0..n).rev() {
        out[i] = j;
        if i > 0 {
            j = parent[i][j];
        }
    }
    out
}

/// Sweep configuration: anchors at local `hour` on the second Monday of each
/// month of `year`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub year: i32,
    pub windows_h: Vec<u32>,
    pub utc_offset_h: i32,
    pub local_hour: u32,
    pub parallel: bool,
}

impl SweepConfig {
    pub fn new(year: i32, utc_offset_h: i32) -> Self {
        Self {
            year,
            windows_h: DEFAULT_WINDOWS_H.to_vec(),
            utc_offset_h,
            local_hour: 9,
            parallel: true,
        }
    }

    pub fn anchor(&self, month: u32) -> DateTime<Utc> {
        local_hour_to_utc(second_monday(self.year, month), self.local_hour, self.utc_offset_h)
    }
}

/// Reduction fractions per month (rows) and window length (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionGrid {
    pub workflow: String,
    pub region: String,
    pub signal: String,
    pub year: i32,
    pub windows_h: Vec<u32>,
    pub anchors: Vec<DateTime<Utc>>,
    pub entire: Vec<Vec<f64>>,
    /// `None` where the execution has more hourly windows than the
    /// flexibility window is long.
    pub interrupted: Vec<Vec<Option<f64>>>,
}

impl ReductionGrid {
    pub fn row(&self, mode: ShiftMode, month_idx: usize) -> Vec<Option<f64>> {
        match mode {
            ShiftMode::Entire => self.entire[month_idx].iter().map(|v| Some(*v)).collect(),
            ShiftMode::Interrupted => self.interrupted[month_idx].clone(),
        }
    }
}

/// Entire and interrupted reductions for every month and window length.
pub fn monthly_sweep(
    trace: &WorkflowTrace,
    catalog: &NodeCatalog,
    governor: &str,
    series: &CiSeries,
    config: &SweepConfig,
    options: &ShiftOptions,
) -> Result<ReductionGrid> {
    let series = hourly(series)?;
    let windows = build_windows(trace, catalog, governor, options.overhead_rule)?;
    let ctx = InterruptCtx::new(trace, catalog, governor, options)?;
    let cells: Vec<(u32, u32)> = (1..=12u32)
        .flat_map(|m| config.windows_h.iter().map(move |&w| (m, w)))
        .collect();

    let eval = |&(month, length): &(u32, u32)| -> Result<(f64, Option<f64>)> {
        let flex = FlexibilityWindow::new(config.anchor(month), length);
        let entire = entire_plan(trace, catalog, governor, &series, flex, windows.len())?.reduction;
        let interrupted = match ctx.plan(&series, flex, &windows) {
            Ok(p) => Some(p.reduction),
            Err(Error::InfeasibleWindow { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok((entire, interrupted))
    };
    let results: Vec<Result<(f64, Option<f64>)>> = if config.parallel {
        cells.par_iter().map(eval).collect()
    } else {
        cells.iter().map(eval).collect()
    };

    let cols = config.windows_h.len();
    let mut entire: Vec<Vec<f64>> = (0..12).map(|_| Vec::with_capacity(cols)).collect();
    let mut interrupted: Vec<Vec<Option<f64>>> = (0..12).map(|_| Vec::with_capacity(cols)).collect();
    for ((month, _), r) in cells.iter().zip(results) {
        let (e, i) = r?;
        entire[*month as usize - 1].push(e);
        interrupted[*month as usize - 1].push(i);
    }
    Ok(ReductionGrid {
        workflow: trace.workflow_name.clone(),
        region: series.region().to_string(),
        signal: series.kind().to_string(),
        year: config.year,
        windows_h: config.windows_h.clone(),
        anchors: (1..=12).map(|m| config.anchor(m)).collect(),
        entire,
        interrupted,
    })
}

/// Convenience: the interval start times of a plan, for order checks.
pub fn assignment_starts(plan: &ShiftPlan) -> Vec<DateTime<Utc>> {
    plan.assignment.iter().map(|a| a.interval.start).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::SignalKind;
    use crate::power::{trace_energy, NodeSpec, PowerCurve, PERFORMANCE};
    use crate::trace::{NodeCount, TaskRecord};
    use chrono::TimeZone;
    use std::collections::BTreeMap;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 4, 8, 9, 0, 0).unwrap()
    }

    /// 1 kW while fully busy on one core; no memory term.
    fn catalog() -> NodeCatalog {
        let mut c = NodeCatalog::default();
        c.insert(NodeSpec {
            node_id: "unit".into(),
            hardware: String::new(),
            cpus_total: 1,
            memory_total_bytes: 0,
            lca_emissions_g: 35_040.0,
            lifetime_h: 35_040.0,
            governors: BTreeMap::from([(PERFORMANCE.into(), PowerCurve::new(0.0, 1000.0, 0.0))]),
            runtime_multipliers: BTreeMap::new(),
            estimated: false,
            low_confidence: false,
        })
        .unwrap();
        c
    }

    fn task(id: &str, offset_min: i64, dur_min: i64) -> TaskRecord {
        TaskRecord {
            task_id: id.into(),
            process_name: "p".into(),
            submit_time: t0() + Duration::minutes(offset_min),
            start_time: t0() + Duration::minutes(offset_min),
            duration_s: dur_min as f64 * 60.0,
            cpu_utilization: 100.0,
            cpus_allocated: 1,
            memory_allocated: 0,
            node_id: "unit".into(),
        }
    }

    fn trace(tasks: Vec<TaskRecord>) -> WorkflowTrace {
        WorkflowTrace::new("w", tasks, vec![NodeCount::new("unit", 1)], None).unwrap()
    }

    fn series(values: &[f64]) -> CiSeries {
        CiSeries::from_values("GB", SignalKind::Average, t0(), 3600, values.iter().copied()).unwrap()
    }

    #[test]
    fn entire_flat_is_zero() {
        let tr = trace(vec![task("a", 0, 61), task("b", 13, 170)]);
        let s = series(&[321.7; 120]);
        for len in DEFAULT_WINDOWS_H {
            let p = shift_entire(&tr, &catalog(), PERFORMANCE, &s, FlexibilityWindow::new(t0(), len)).unwrap();
            assert_eq!(p.reduction, 0.0);
            assert_eq!(p.start, t0());
        }
    }

    #[test]
    fn entire_single_low_hour() {
        let tr = trace(vec![task("a", 0, 60)]);
        let mut v = vec![500.0; 30];
        v[7] = 100.0;
        let p = shift_entire(&tr, &catalog(), PERFORMANCE, &series(&v), FlexibilityWindow::new(t0(), 24)).unwrap();
        assert!((p.reduction - 0.8).abs() < 1e-12);
        assert_eq!(p.start, t0() + Duration::hours(7));
        assert_eq!(p.projected_emissions, 100.0);
    }

    #[test]
    fn entire_out_of_range() {
        let tr = trace(vec![task("a", 0, 60)]);
        assert!(matches!(
            shift_entire(&tr, &catalog(), PERFORMANCE, &series(&[1.0; 10]), FlexibilityWindow::new(t0(), 24)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn windows_without_partials_have_no_overhead() {
        let tr = trace(vec![task("a", 0, 30), task("b", 60, 59), task("c", 125, 35)]);
        let w = build_windows(&tr, &catalog(), PERFORMANCE, OverheadRule::FullDuration).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|w| w.overhead_s == 0.0 && w.tasks_partial.is_empty()));
    }

    #[test]
    fn ninety_minute_task_from_minute_thirty() {
        let tr = trace(vec![task("x", 0, 10), task("t", 30, 90)]);
        let w = build_windows(&tr, &catalog(), PERFORMANCE, OverheadRule::FullDuration).unwrap();
        assert_eq!(w[0].tasks_partial, vec!["t".to_string()]);
        assert_eq!(w[0].tasks_complete, vec!["x".to_string()]);
        assert_eq!(w[0].overhead_s, 5400.0);
        let spill = build_windows(&tr, &catalog(), PERFORMANCE, OverheadRule::SpillOver).unwrap();
        assert_eq!(spill[0].overhead_s, 3600.0);
        // 30 of 90 minutes fall in hour 0
        assert!((w[0].window_energy_kwh - (10.0 / 60.0 + 0.5)).abs() < 1e-12);
        assert!((w[1].window_energy_kwh - 1.0).abs() < 1e-12);
    }

    #[test]
    fn figure_nine_configuration() {
        // a completes in hour 0; b and c start in hour 0 and run over, c longest
        let tr = trace(vec![task("a", 5, 20), task("b", 40, 35), task("c", 50, 80)]);
        let w = build_windows(&tr, &catalog(), PERFORMANCE, OverheadRule::FullDuration).unwrap();
        assert_eq!(w[0].tasks_complete, vec!["a".to_string()]);
        assert_eq!(w[0].tasks_partial, vec!["b".to_string(), "c".to_string()]);
        assert_eq!(w[0].overhead_s, 80.0 * 60.0);
    }

    #[test]
    fn windows_conserve_energy() {
        let tr = trace(vec![task("a", 0, 200), task("b", 17, 3), task("c", 61, 119), task("d", 179, 121)]);
        let w = build_windows(&tr, &catalog(), PERFORMANCE, OverheadRule::FullDuration).unwrap();
        let sum: f64 = w.iter().map(|w| w.window_energy_kwh).sum();
        let total = trace_energy(&tr, &catalog(), PERFORMANCE).unwrap().total_kwh;
        assert!((sum - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn interrupted_flat_is_zero() {
        let tr = trace(vec![task("a", 0, 61), task("b", 13, 170)]);
        for sel in [IntervalSelection::OrderPreserving, IntervalSelection::LowestN] {
            let opts = ShiftOptions { selection: sel, ..Default::default() };
            let p = shift_interrupted(&tr, &catalog(), PERFORMANCE, &series(&[250.0; 120]), FlexibilityWindow::new(t0(), 24), &opts)
                .unwrap();
            assert_eq!(p.reduction, 0.0);
            assert_eq!(p.interruptions, 0);
        }
    }

    #[test]
    fn interrupted_picks_two_separated_dips() {
        // four one-hour windows of 1 kWh each; dips at hours 3-4 and 10-11
        let tr = trace((0..4).map(|h| task(&format!("t{h}"), h * 60, 60)).collect());
        let mut v = vec![400.0; 28];
        v[3] = 50.0;
        v[4] = 60.0;
        v[10] = 20.0;
        v[11] = 30.0;
        let s = series(&v);
        let flex = FlexibilityWindow::new(t0(), 24);
        for sel in [IntervalSelection::OrderPreserving, IntervalSelection::LowestN] {
            let opts = ShiftOptions { selection: sel, ..Default::default() };
            let p = shift_interrupted(&tr, &catalog(), PERFORMANCE, &s, flex, &opts).unwrap();
            let hours: Vec<i64> = assignment_starts(&p).iter().map(|t| (*t - t0()).num_hours()).collect();
            assert_eq!(hours, [3, 4, 10, 11]);
            assert_eq!(p.projected_emissions, 50.0 + 60.0 + 20.0 + 30.0);
            assert_eq!(p.baseline_emissions, 1250.0);
            assert_eq!(p.interruptions, 1);
            assert_eq!(p.total_overhead_s, 0.0);
        }
    }

    #[test]
    fn interrupted_contiguous_matches_entire() {
        let tr = trace((0..3).map(|h| task(&format!("t{h}"), h * 60, 60)).collect());
        let mut v = vec![300.0; 40];
        v[5] = 10.0;
        v[6] = 11.0;
        v[7] = 12.0;
        let s = series(&v);
        let flex = FlexibilityWindow::new(t0(), 24);
        let i = shift_interrupted(&tr, &catalog(), PERFORMANCE, &s, flex, &ShiftOptions::default()).unwrap();
        let e = shift_entire(&tr, &catalog(), PERFORMANCE, &s, flex).unwrap();
        assert_eq!(i.interruptions, 0);
        assert_eq!(i.start, e.start);
        assert!((i.projected_emissions - e.projected_emissions).abs() < 1e-9);
    }

    #[test]
    fn infeasible_window() {
        let tr = trace(vec![task("a", 0, 7 * 60)]);
        assert!(matches!(
            shift_interrupted(&tr, &catalog(), PERFORMANCE, &series(&[1.0; 30]), FlexibilityWindow::new(t0(), 6), &ShiftOptions::default()),
            Err(Error::InfeasibleWindow { windows: 7, length_h: 6 })
        ));
    }

    #[test]
    fn overhead_charged_at_idle_power() {
        let mut c = catalog();
        let mut n = c.get("unit").unwrap().clone();
        n.governors.insert(PERFORMANCE.into(), PowerCurve::new(500.0, 1000.0, 0.0));
        c.insert(n).unwrap();
        // window 0: task of 90 min at 100% => partial with 1.5 h overhead
        let tr = trace(vec![task("a", 0, 90)]);
        let mut v = vec![200.0; 30];
        v[0] = 40.0;
        v[1] = 1000.0;
        v[5] = 0.0;
        let s = series(&v);
        let flex = FlexibilityWindow::new(t0(), 12);
        let on = shift_interrupted(&tr, &c, PERFORMANCE, &s, flex, &ShiftOptions::default()).unwrap();
        let off = shift_interrupted(
            &tr,
            &c,
            PERFORMANCE,
            &s,
            flex,
            &ShiftOptions { charge_idle_overhead: false, ..Default::default() },
        )
        .unwrap();
        // window energies 1.0 and 0.5 kWh; hour 0 then hour 5 beats the best contiguous pair (100 g)
        assert_eq!(off.projected_emissions, 40.0);
        assert_eq!(off.interruptions, 1);
        assert_eq!(off.total_overhead_s, 5400.0);
        assert!((off.extra_embodied - 1.5).abs() < 1e-12);
        // idle 0.5 kW for 1.5 h at 40 g/kWh adds 30 g
        assert!((on.projected_emissions - 70.0).abs() < 1e-9);
        assert!((on.overhead_emissions - 30.0).abs() < 1e-9);
        assert_eq!(assignment_starts(&on), [t0(), t0() + Duration::hours(5)]);
    }

    #[test]
    fn lowest_n_is_not_monotone_with_uneven_energy() {
        // energies 1 and 10; extending the window admits an interval that the
        // unweighted rule prefers although it is worse for the heavy window
        let e = [1.0, 10.0];
        let small = [2.0, 1.5, 9.0, 9.0];
        let large = [2.0, 1.5, 9.0, 9.0, 9.0, 9.0, 9.0, 1.9];
        let cost = |ci: &[f64], js: &[usize]| e[0] * ci[js[0]] + e[1] * ci[js[1]];
        let a = lowest_n(&small, 2);
        let b = lowest_n(&large, 2);
        assert!(cost(&large, &b) > cost(&small, &a));
        let a = order_preserving(&e, &[0.0, 0.0], &small);
        let b = order_preserving(&e, &[0.0, 0.0], &large);
        assert!(cost(&large, &b) <= cost(&small, &a));
    }

    #[test]
    fn order_preserving_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..=4);
            let m = n + rng.gen_range(0..=5);
            let e: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
            let pause: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect();
            let ci: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..500.0)).collect();
            let score = |js: &[usize]| {
                let mut acc = 0.0;
                for i in 0..js.len() {
                    if i > 0 && js[i] != js[i - 1] + 1 {
                        acc += pause[i - 1] * ci[js[i - 1]];
                    }
                    acc += e[i] * ci[js[i]];
                }
                acc
            };
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << m) {
                if mask.count_ones() as usize == n {
                    let js: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
                    best = best.min(score(&js));
                }
            }
            let got = score(&order_preserving(&e, &pause, &ci));
            assert!((got - best).abs() <= 1e-9 * best.max(1.0), "{got} vs {best}");
        }
    }

    #[test]
    fn sweep_flat_year_is_zero_and_serial_equals_parallel() {
        let tr = trace(vec![task("a", 0, 61), task("b", 13, 170)]);
        let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let s = CiSeries::from_values("GB", SignalKind::Average, start, 3600, vec![180.0; 366 * 24]).unwrap();
        let mut cfg = SweepConfig::new(2024, 0);
        let g = monthly_sweep(&tr, &catalog(), PERFORMANCE, &s, &cfg, &ShiftOptions::default()).unwrap();
        assert!(g.entire.iter().flatten().all(|v| *v == 0.0));
        assert!(g.interrupted.iter().flatten().all(|v| *v == Some(0.0)));
        cfg.parallel = false;
        let serial = monthly_sweep(&tr, &catalog(), PERFORMANCE, &s, &cfg, &ShiftOptions::default()).unwrap();
        assert_eq!(g, serial);
    }
}
