use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use wfcarbon::ci::load_ci;
use wfcarbon::footprint::footprint_report;
use wfcarbon::region::REGIONS;
use wfcarbon::report;
use wfcarbon::scaling::{
    compare_cluster_sizes, compare_governors, compare_nodes, task_start_hour, RuntimeSource, ScenarioResult,
};
use wfcarbon::shifting::{
    monthly_sweep, shift_entire, shift_interrupted, IntervalSelection, OverheadRule, ShiftMode, SweepConfig,
};
use wfcarbon::time::parse_timestamp;
use wfcarbon::trace::parse_trace;
use wfcarbon::{
    CiSeries, FlexibilityWindow, LoadCiOptions, NodeCatalog, ParseOptions, SeriesSet, ShiftOptions, SignalKind,
    StartPolicy, WorkflowTrace,
};

use crate::args::*;
use crate::table::Table;

/// An error raised by the command layer itself, with a stable code.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn fail<T>(code: &'static str, message: impl Into<String>) -> Result<T> {
    Err(CliError {
        code,
        message: message.into(),
    }
    .into())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Footprint(a) => footprint(a),
        Command::ShiftEntire(a) => shift(a, ShiftMode::Entire),
        Command::ShiftInterrupt(a) => shift(a, ShiftMode::Interrupted),
        Command::Sweep(a) => sweep(a),
        Command::ScaleNodes(a) => scale_nodes(a),
        Command::ScaleGovernors(a) => scale_governors(a),
        Command::ScaleCluster(a) => scale_cluster(a),
        Command::InspectTrace(a) => inspect(a),
    }
}

fn load_catalog(spec: &str) -> Result<NodeCatalog> {
    if spec == "builtin" {
        Ok(NodeCatalog::builtin())
    } else {
        Ok(NodeCatalog::from_path(spec)?)
    }
}

fn load_trace(path: &Path, catalog: &NodeCatalog, default_node: Option<&str>) -> Result<WorkflowTrace> {
    let opts = ParseOptions {
        default_node: default_node.map(str::to_string),
        ..Default::default()
    };
    let loaded = parse_trace(path, catalog, &opts).with_context(|| format!("trace {}", path.display()))?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    log::info!("loaded {} ({} tasks)", path.display(), loaded.value.tasks.len());
    Ok(loaded.value)
}

fn load_traces(input: &TraceInput, catalog: &NodeCatalog) -> Result<Vec<WorkflowTrace>> {
    if input.trace.is_empty() {
        return fail("CONFIG_MISSING_TRACE", "no trace given; pass --trace PATH");
    }
    input
        .trace
        .iter()
        .map(|p| load_trace(p, catalog, input.default_node.as_deref()))
        .collect()
}

struct Region {
    code: &'static str,
    utc_offset_h: i32,
}

fn resolve_region(ci: &CiInput, traces: &[WorkflowTrace]) -> Result<Region> {
    let requested = if ci.region.eq_ignore_ascii_case("auto") {
        match traces.iter().find_map(|t| t.origin_region.clone()) {
            Some(r) => r,
            None => return fail("CONFIG_MISSING_REGION", "no --region given and the trace declares none"),
        }
    } else {
        ci.region.clone()
    };
    match REGIONS.iter().find(|(c, _, _)| c.eq_ignore_ascii_case(&requested)) {
        Some((code, off, _)) => Ok(Region {
            code,
            utc_offset_h: *off,
        }),
        None => Err(wfcarbon::Error::UnknownRegion(requested).into()),
    }
}

/// All `{REGION}_{kind}_*.csv` files in the CI directory, merged in name order.
fn load_signal(ci: &CiInput, region: &Region, kind: SignalKind) -> Result<Option<CiSeries>> {
    let prefix = format!("{}_{}_", region.code, kind.as_str());
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&ci.ci_dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(&prefix) && n.ends_with(".csv"))
            })
            .collect(),
        Err(e) => return Err(wfcarbon::Error::Io { path: ci.ci_dir.clone(), source: e }.into()),
    };
    files.sort();
    if files.is_empty() {
        return Ok(None);
    }
    let opts = LoadCiOptions {
        forward_fill: ci.forward_fill,
    };
    let mut parts = Vec::new();
    for f in &files {
        let loaded = load_ci(f, region.code, kind, opts)?;
        for w in &loaded.warnings {
            log::warn!("{}: {w}", f.display());
        }
        parts.push(loaded.value);
    }
    Ok(Some(CiSeries::concat(parts)?))
}

fn require_signal(ci: &CiInput, region: &Region, kind: SignalKind) -> Result<CiSeries> {
    match load_signal(ci, region, kind)? {
        Some(s) => Ok(s),
        None => fail(
            "CONFIG_MISSING_CI",
            format!(
                "no {} carbon-intensity files for region {} in {} (expected {}_{}_<year>.csv)",
                kind,
                region.code,
                ci.ci_dir.display(),
                region.code,
                kind
            ),
        ),
    }
}

fn parse_signal(raw: &str) -> Result<SignalKind> {
    raw.parse().or_else(|e: String| fail("CONFIG_INVALID", e))
}

fn write_out(out: &OutputOpts, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&out.out_dir).map_err(|e| wfcarbon::Error::Io { path: out.out_dir.clone(), source: e })?;
    let path = out.out_dir.join(name);
    std::fs::write(&path, contents).map_err(|e| wfcarbon::Error::Io { path: path.clone(), source: e })?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn slug(trace: &WorkflowTrace) -> String {
    let raw = format!("{}_{}", trace.workflow_name, trace.resources_label());
    let mut s = String::new();
    for c in raw.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    s.trim_matches('-').to_string()
}

fn g2(v: f64) -> String {
    report::fixed(v, 2)
}

fn footprint(a: FootprintArgs) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let traces = load_traces(&a.input, &catalog)?;
    let region = resolve_region(&a.ci, &traces)?;
    let avg = require_signal(&a.ci, &region, SignalKind::Average)?;
    let marg = load_signal(&a.ci, &region, SignalKind::Marginal)?;
    if marg.is_none() {
        log::warn!("no marginal data for {}, marginal column left empty", region.code);
    }
    let reports = traces
        .iter()
        .map(|t| footprint_report(t, &catalog, &a.governor, &avg, marg.as_ref()))
        .collect::<wfcarbon::Result<Vec<_>>>()?;

    match a.out.format {
        Format::Csv => {
            write_out(&a.out, "footprint.csv", &report::footprint_csv(&reports))?;
            write_out(&a.out, "reserved_memory.csv", &report::reserved_memory_csv(&reports))?;
        }
        Format::Json => {
            write_out(&a.out, "footprint.json", &report::to_json(&reports)?)?;
        }
    }
    write_out(&a.out, "footprint_bars.json", &report::footprint_bar_json(&reports)?)?;

    let mut t = Table::new(["workflow", "resources", "energy kWh", "avg g", "marg g", "emb g", "reserved mem"]);
    for r in &reports {
        t.row([
            r.workflow_name.clone(),
            r.resources.clone(),
            g2(r.energy.total_kwh),
            g2(r.operational_avg),
            r.operational_marg.map(g2).unwrap_or_else(|| "-".into()),
            g2(r.embodied),
            format!("{}%", report::fixed(r.reserved_share * 100.0, 1)),
        ]);
    }
    print!("{t}");
    Ok(())
}

fn shift_options(s: &ShiftOpts) -> ShiftOptions {
    ShiftOptions {
        overhead_rule: if s.overhead_spillover {
            OverheadRule::SpillOver
        } else {
            OverheadRule::FullDuration
        },
        charge_idle_overhead: !s.no_idle_charge,
        selection: match s.selection {
            Selection::OrderPreserving => IntervalSelection::OrderPreserving,
            Selection::LowestN => IntervalSelection::LowestN,
        },
    }
}

fn parse_time(raw: &str, flag: &str) -> Result<DateTime<Utc>> {
    match parse_timestamp(raw) {
        Some(t) => Ok(t),
        None => fail("CONFIG_INVALID", format!("{flag}: cannot parse timestamp `{raw}`")),
    }
}

fn shift(a: ShiftArgs, mode: ShiftMode) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let traces = load_traces(&a.input, &catalog)?;
    let region = resolve_region(&a.ci, &traces)?;
    let series = require_signal(&a.ci, &region, parse_signal(&a.shift.signal)?)?;
    let opts = shift_options(&a.shift);

    let mut plans = Vec::new();
    for trace in &traces {
        let anchor = if a.anchor == "trace" {
            trace.origin_start.duration_trunc(TimeDelta::hours(1))?
        } else {
            parse_time(&a.anchor, "--anchor")?
        };
        let flex = FlexibilityWindow::new(anchor, a.window);
        let plan = match mode {
            ShiftMode::Entire => shift_entire(trace, &catalog, &a.shift.governor, &series, flex)?,
            ShiftMode::Interrupted => shift_interrupted(trace, &catalog, &a.shift.governor, &series, flex, &opts)?,
        };
        plans.push((trace, plan));
    }

    let name = format!("shift_{}", mode.as_str());
    match a.out.format {
        Format::Csv => {
            let all: Vec<_> = plans.iter().map(|(_, p)| p.clone()).collect();
            write_out(&a.out, &format!("{name}.csv"), &report::shift_plans_csv(&all))?;
            for (trace, plan) in &plans {
                write_out(&a.out, &format!("{name}_{}_assignment.csv", slug(trace)), &report::assignment_csv(plan))?;
            }
        }
        Format::Json => {
            let all: Vec<_> = plans.iter().map(|(_, p)| p).collect();
            write_out(&a.out, &format!("{name}.json"), &report::to_json(&all)?)?;
        }
    }

    let mut t = Table::new(["workflow", "anchor", "window h", "start", "baseline g", "shifted g", "reduction", "pauses"]);
    for (trace, p) in &plans {
        t.row([
            trace.workflow_name.clone(),
            p.flex.anchor.format("%Y-%m-%d %H:%M").to_string(),
            p.flex.length_h.to_string(),
            p.start.format("%Y-%m-%d %H:%M").to_string(),
            g2(p.baseline_emissions),
            g2(p.projected_emissions),
            format!("{}%", report::fixed(p.reduction * 100.0, 2)),
            p.interruptions.to_string(),
        ]);
    }
    print!("{t}");
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let traces = load_traces(&a.input, &catalog)?;
    let region = resolve_region(&a.ci, &traces)?;
    let series = require_signal(&a.ci, &region, parse_signal(&a.shift.signal)?)?;
    if a.windows.is_empty() {
        return fail("CONFIG_INVALID", "--windows needs at least one length");
    }
    let config = SweepConfig {
        year: a.ci.year,
        windows_h: a.windows.clone(),
        utc_offset_h: region.utc_offset_h,
        local_hour: a.local_hour,
        parallel: !a.serial,
    };
    let opts = shift_options(&a.shift);

    for trace in &traces {
        let grid = monthly_sweep(trace, &catalog, &a.shift.governor, &series, &config, &opts)?;
        let name = format!("sweep_{}", slug(trace));
        match a.out.format {
            Format::Csv => write_out(&a.out, &format!("{name}.csv"), &report::grid_csv(&grid))?,
            Format::Json => write_out(&a.out, &format!("{name}.json"), &report::to_json(&grid)?)?,
        };
        write_out(&a.out, &format!("heatmap_{}.json", slug(trace)), &report::heatmap_json(&grid)?)?;

        println!("{} on {} ({} {} {})", trace.workflow_name, trace.resources_label(), region.code, grid.signal, grid.year);
        for mode in [ShiftMode::Entire, ShiftMode::Interrupted] {
            let mut header = vec![mode.as_str().to_string()];
            header.extend(grid.windows_h.iter().map(|w| format!("{w}h")));
            let mut t = Table::new(header);
            for (m, month) in report::MONTHS.iter().enumerate() {
                let mut row = vec![month.to_string()];
                row.extend(
                    grid.row(mode, m)
                        .into_iter()
                        .map(|v| v.map_or("-".to_string(), |v| format!("{}%", report::fixed(v * 100.0, 1)))),
                );
                t.row(row);
            }
            print!("{t}");
        }
    }
    Ok(())
}

fn start_policy(s: &StartOpts, year: i32, region: &Region, base: &WorkflowTrace) -> Result<StartPolicy> {
    Ok(match s.start_policy {
        Policy::Original => StartPolicy::Original,
        Policy::Fixed => match &s.start_at {
            Some(raw) => StartPolicy::Fixed {
                at: parse_time(raw, "--start-at")?,
            },
            None => return fail("CONFIG_INVALID", "--start-policy fixed needs --start-at"),
        },
        Policy::MonthlyMedian => {
            let local_hour = if s.start_hour == "auto" {
                task_start_hour(&base.tasks[0].process_name).unwrap_or(9)
            } else {
                match s.start_hour.parse::<u32>() {
                    Ok(h) if h < 24 => h,
                    _ => return fail("CONFIG_INVALID", format!("--start-hour: `{}` is not an hour", s.start_hour)),
                }
            };
            StartPolicy::MonthlyMedian {
                year,
                local_hour,
                utc_offset_h: region.utc_offset_h,
            }
        }
    })
}

fn parse_variants(
    raw: &[String],
    catalog: &NodeCatalog,
    default_node: impl Fn(&str) -> Option<String>,
) -> Result<Vec<(String, RuntimeSource)>> {
    let mut out = Vec::new();
    for v in raw {
        let Some((key, value)) = v.split_once('=') else {
            return fail("CONFIG_INVALID", format!("--variant `{v}` is not KEY=PATH or KEY=x<factor>"));
        };
        let source = match value.strip_prefix('x').map(str::parse::<f64>) {
            Some(Ok(m)) if m > 0.0 => RuntimeSource::Multiplier(m),
            _ => RuntimeSource::Trace(load_trace(Path::new(value), catalog, default_node(key).as_deref())?),
        };
        out.push((key.to_string(), source));
    }
    Ok(out)
}

fn single_base(traces: Vec<WorkflowTrace>) -> Result<WorkflowTrace> {
    if traces.len() != 1 {
        return fail("CONFIG_INVALID", "this command takes exactly one --trace; add alternatives with --variant");
    }
    Ok(traces.into_iter().next().expect("one trace"))
}

fn series_set(ci: &CiInput, region: &Region) -> Result<SeriesSet> {
    Ok(SeriesSet::new(
        require_signal(ci, region, SignalKind::Average)?,
        load_signal(ci, region, SignalKind::Marginal)?,
    ))
}

fn emit_scenario(out: &OutputOpts, name: &str, result: &ScenarioResult) -> Result<()> {
    match out.format {
        Format::Csv => write_out(out, &format!("{name}.csv"), &report::scenario_csv(result))?,
        Format::Json => write_out(out, &format!("{name}.json"), &report::to_json(result)?)?,
    };
    let mark = |v: String, on: bool| if on { format!("*{v}") } else { v };
    let mut t = Table::new(["variant", "group", "runtime h", "energy kWh", "avg g", "marg g", "emb g"]);
    let mut rows: Vec<_> = result.rows.iter().collect();
    rows.sort_by_key(|r| r.group);
    for r in rows {
        t.row([
            if r.low_confidence {
                format!("{} (low confidence)", r.variant)
            } else {
                r.variant.clone()
            },
            r.group.as_str().to_string(),
            mark(g2(r.runtime_h), r.min.runtime),
            mark(g2(r.energy_kwh), r.min.energy),
            mark(g2(r.avg_g), r.min.avg),
            r.marg_g.map_or("-".into(), |v| mark(g2(v), r.min.marg)),
            mark(g2(r.emb_g), r.min.emb),
        ]);
    }
    println!("{} (* = minimum within group)", result.subject);
    print!("{t}");
    Ok(())
}

fn scale_nodes(a: ScaleNodesArgs) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let base = single_base(load_traces(&a.input, &catalog)?)?;
    let region = resolve_region(&a.ci, std::slice::from_ref(&base))?;
    let series = series_set(&a.ci, &region)?;
    let variants = parse_variants(&a.variant, &catalog, |k| Some(k.to_string()))?;

    let mut candidates = a.nodes.clone();
    if candidates.is_empty() {
        candidates.extend(base.node_assignment.iter().map(|n| n.node_id.clone()));
        candidates.extend(variants.iter().map(|(k, _)| k.clone()));
        let mut seen = std::collections::HashSet::new();
        candidates.retain(|c| seen.insert(c.clone()));
    }
    let runtimes: BTreeMap<String, RuntimeSource> = variants.into_iter().collect();
    let policy = start_policy(&a.start, a.ci.year, &region, &base)?;
    let result = compare_nodes(&base, &candidates, &runtimes, &catalog, &series, &policy)?;
    emit_scenario(&a.out, "scale_nodes", &result)
}

fn scale_governors(a: ScaleGovernorsArgs) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let base = single_base(load_traces(&a.input, &catalog)?)?;
    let region = resolve_region(&a.ci, std::slice::from_ref(&base))?;
    let series = series_set(&a.ci, &region)?;
    let default_node = a.input.default_node.clone();
    let runtimes: BTreeMap<String, RuntimeSource> =
        parse_variants(&a.variant, &catalog, |_| default_node.clone())?.into_iter().collect();
    let policy = start_policy(&a.start, a.ci.year, &region, &base)?;
    let result = compare_governors(&base, &a.governors, &runtimes, &catalog, &series, &policy)?;
    emit_scenario(&a.out, "scale_governors", &result)
}

fn scale_cluster(a: ScaleClusterArgs) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let traces = load_traces(&a.input, &catalog)?;
    let region = resolve_region(&a.ci, &traces)?;
    let series = series_set(&a.ci, &region)?;
    let policy = start_policy(&a.start, a.ci.year, &region, &traces[0])?;
    let labelled: Vec<(String, WorkflowTrace)> = traces.into_iter().map(|t| (t.resources_label(), t)).collect();
    let result = compare_cluster_sizes(&labelled, &catalog, &a.governor, &series, &policy)?;
    emit_scenario(&a.out, "scale_cluster", &result)
}

fn inspect(a: InspectArgs) -> Result<()> {
    let catalog = load_catalog(&a.input.catalog)?;
    let traces = load_traces(&a.input, &catalog)?;
    if traces.len() == 1 {
        println!("{}", serde_json::to_string_pretty(&traces[0])?);
    } else {
        println!("{}", serde_json::to_string_pretty(&traces)?);
    }
    Ok(())
}
