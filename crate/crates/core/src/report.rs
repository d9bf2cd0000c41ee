//! Byte-stable CSV and JSON renderings of results.
//!
//! Grams and kWh use two decimals, reduction fractions and shares four.
//! Missing values are written as an empty CSV field or JSON `null`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::footprint::FootprintReport;
use crate::scaling::ScenarioResult;
use crate::shifting::{ReductionGrid, ShiftMode, ShiftPlan};
use crate::time::format_timestamp;

pub const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

pub fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    // avoid "-0.00"
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn g2(v: f64) -> String {
    fixed(v, 2)
}

fn frac(v: f64) -> String {
    fixed(v, 4)
}

fn opt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn round(v: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    let r = (v * p).round() / p;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn footprint_csv(reports: &[FootprintReport]) -> String {
    let mut out = String::from("workflow,resources,energy_kwh,avg_g,marg_g,emb_g\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.workflow_name),
            csv_field(&r.resources),
            g2(r.energy.total_kwh),
            g2(r.operational_avg),
            opt(r.operational_marg, g2),
            g2(r.embodied)
        );
    }
    out
}

pub fn reserved_memory_csv(reports: &[FootprintReport]) -> String {
    let mut out = String::from("workflow,resources,reserved_mem_kwh,reserved_mem_g,operational_g,reserved_share\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.workflow_name),
            csv_field(&r.resources),
            g2(r.reserved_memory_energy),
            g2(r.reserved_memory_emissions),
            g2(r.operational_avg),
            frac(r.reserved_share)
        );
    }
    out
}

/// Bar-chart data: one category per workflow, one series per emission kind.
pub fn footprint_bar_json(reports: &[FootprintReport]) -> Result<String> {
    let cats: Vec<&str> = reports.iter().map(|r| r.workflow_name.as_str()).collect();
    let series = |name: &str, f: &dyn Fn(&FootprintReport) -> Option<f64>| {
        json!({
            "name": name,
            "values": reports.iter().map(|r| f(r).map(|v| round(v, 2))).collect::<Vec<_>>(),
        })
    };
    let v = json!({
        "categories": cats,
        "unit": "gCO2e",
        "series": [
            series("operational_avg", &|r| Some(r.operational_avg)),
            series("operational_marg", &|r| r.operational_marg),
            series("embodied", &|r| Some(r.embodied)),
        ],
    });
    to_json(&v)
}

fn grid_rows(grid: &ReductionGrid, mode: ShiftMode) -> impl Iterator<Item = (usize, Vec<Option<f64>>)> + '_ {
    (0..grid.anchors.len()).map(move |m| (m, grid.row(mode, m)))
}

/// Months as rows, window lengths as columns, one block per mode.
pub fn grid_csv(grid: &ReductionGrid) -> String {
    let mut out = String::from("mode,month,anchor_utc");
    for w in &grid.windows_h {
        let _ = write!(out, ",{w}h");
    }
    out.push('\n');
    for mode in [ShiftMode::Entire, ShiftMode::Interrupted] {
        for (m, row) in grid_rows(grid, mode) {
            let _ = write!(out, "{},{},{}", mode.as_str(), MONTHS[m], format_timestamp(grid.anchors[m]));
            for v in row {
                let _ = write!(out, ",{}", opt(v, frac));
            }
            out.push('\n');
        }
    }
    out
}

/// Heatmap data with months on the y axis and window lengths on the x axis.
pub fn heatmap_json(grid: &ReductionGrid) -> Result<String> {
    let z = |mode| -> Vec<Vec<Option<f64>>> {
        grid_rows(grid, mode)
            .map(|(_, row)| row.into_iter().map(|v| v.map(|x| round(x, 4))).collect())
            .collect()
    };
    let v: Value = json!({
        "workflow": grid.workflow,
        "region": grid.region,
        "signal": grid.signal,
        "year": grid.year,
        "value": "reduction_fraction",
        "x": { "name": "window_h", "values": grid.windows_h },
        "y": { "name": "month", "values": MONTHS },
        "entire": z(ShiftMode::Entire),
        "interrupted": z(ShiftMode::Interrupted),
    });
    to_json(&v)
}

pub fn scenario_csv(result: &ScenarioResult) -> String {
    let mut out = String::from(
        "variant,group,low_confidence,runtime_h,energy_kwh,avg_g,marg_g,emb_g,min_runtime,min_energy,min_avg,min_marg,min_emb\n",
    );
    let mut rows: Vec<_> = result.rows.iter().collect();
    rows.sort_by_key(|r| r.group);
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.variant),
            r.group.as_str(),
            r.low_confidence,
            g2(r.runtime_h),
            g2(r.energy_kwh),
            g2(r.avg_g),
            opt(r.marg_g, g2),
            g2(r.emb_g),
            r.min.runtime,
            r.min.energy,
            r.min.avg,
            r.min.marg,
            r.min.emb
        );
    }
    out
}

pub const SHIFT_PLAN_HEADER: &str =
    "mode,anchor_utc,window_h,start_utc,baseline_g,projected_g,reduction,interruptions,overhead_s,overhead_g,extra_embodied_g\n";

pub fn shift_plan_row(plan: &ShiftPlan) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        plan.mode.as_str(),
        format_timestamp(plan.flex.anchor),
        plan.flex.length_h,
        format_timestamp(plan.start),
        g2(plan.baseline_emissions),
        g2(plan.projected_emissions),
        frac(plan.reduction),
        plan.interruptions,
        g2(plan.total_overhead_s),
        g2(plan.overhead_emissions),
        g2(plan.extra_embodied)
    )
}

pub fn shift_plans_csv(plans: &[ShiftPlan]) -> String {
    let mut out = SHIFT_PLAN_HEADER.to_string();
    for p in plans {
        out.push_str(&shift_plan_row(p));
    }
    out
}

/// Window-to-interval mapping of one plan.
pub fn assignment_csv(plan: &ShiftPlan) -> String {
    let mut out = String::from("window,interval_start_utc,interval_end_utc,mean_ci\n");
    for a in &plan.assignment {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            a.window,
            format_timestamp(a.interval.start),
            format_timestamp(a.interval.end),
            g2(a.interval.mean_ci)
        );
    }
    out
}
