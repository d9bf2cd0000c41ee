//! Workflow execution traces.
//!
//! Traces are tab-separated files using Nextflow trace column names plus an
//! optional `node` column. Leading `# key: value` lines carry workflow
//! metadata:
//!
//! ```text
//! # workflow: Chip-Seq
//! # nodes: atlantis x8
//! # region: DE
//! task_id	process	submit	start	realtime	%cpu	cpus	memory	node
//! 1	FASTQC	2024-01-08 09:00:00.000	2024-01-08 09:00:01.000	1m 30s	250.0%	4	4 GB	atlantis
//! ```
//!
//! Durations accept Nextflow's `1h 2m 3s 500ms` form; a bare number is read
//! as milliseconds. Memory accepts `B`, `KB`, `MB`, `GB`, `TB` as binary
//! multiples; a bare number is bytes. A `-` in `%cpu` or `memory` reads as 0.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::NodeCatalog;
use crate::time::{format_timestamp, from_ms, parse_timestamp, secs_to_ms, to_ms};
use crate::Loaded;

/// One executed task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub process_name: String,
    pub submit_time: DateTime<Utc>,
    pub start_time: DateTime<Utc>,
    /// Wall-clock runtime in seconds.
    pub duration_s: f64,
    /// Percent of one core, so 250.0 means two and a half cores busy.
    pub cpu_utilization: f64,
    pub cpus_allocated: u32,
    /// Bytes.
    pub memory_allocated: u64,
    pub node_id: String,
}

impl TaskRecord {
    pub fn start_ms(&self) -> i64 {
        to_ms(self.start_time)
    }

    pub fn end_ms(&self) -> i64 {
        self.start_ms() + secs_to_ms(self.duration_s)
    }

    pub fn end_time(&self) -> DateTime<Utc> {
        from_ms(self.end_ms())
    }

    pub fn duration_hours(&self) -> f64 {
        self.duration_s / 3600.0
    }

    pub fn memory_gb(&self) -> f64 {
        self.memory_allocated as f64 / GIB
    }
}

/// `count` reserved nodes of catalog type `node_id`, e.g. "atlantis x8".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCount {
    pub node_id: String,
    pub count: u32,
}

impl NodeCount {
    pub fn new(node_id: impl Into<String>, count: u32) -> Self {
        Self {
            node_id: node_id.into(),
            count,
        }
    }

    /// Parses `atlantis x8`, `atlantis*8`, `atlantis=8` or a bare `sherwood`.
    pub fn parse(raw: &str) -> Option<Self> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        for sep in [" x", "*", "="] {
            if let Some((id, n)) = raw.rsplit_once(sep) {
                if let Ok(count) = n.trim().parse::<u32>() {
                    let id = id.trim();
                    if !id.is_empty() && count > 0 {
                        return Some(Self::new(id, count));
                    }
                }
            }
        }
        Some(Self::new(raw, 1))
    }

    pub fn parse_list(raw: &str) -> Option<Vec<Self>> {
        raw.split(',').map(Self::parse).collect()
    }
}

impl std::fmt::Display for NodeCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.count == 1 {
            write!(f, "{}", self.node_id)
        } else {
            write!(f, "{} x{}", self.node_id, self.count)
        }
    }
}

/// A validated workflow execution: tasks sorted by start time (ties by id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowTrace {
    pub workflow_name: String,
    pub tasks: Vec<TaskRecord>,
    pub node_assignment: Vec<NodeCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_region: Option<String>,
    pub origin_start: DateTime<Utc>,
}

impl WorkflowTrace {
    /// Builds a trace from tasks, sorting them and checking structural
    /// invariants. `origin_start` is taken from the earliest task.
    pub fn new(
        workflow_name: impl Into<String>,
        mut tasks: Vec<TaskRecord>,
        node_assignment: Vec<NodeCount>,
        origin_region: Option<String>,
    ) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::EmptyTrace);
        }
        sort_tasks(&mut tasks);
        for task in &tasks {
            if !node_assignment.iter().any(|n| n.node_id == task.node_id) {
                return Err(Error::UnknownNode(task.node_id.clone()));
            }
        }
        let origin_start = tasks[0].start_time;
        Ok(Self {
            workflow_name: workflow_name.into(),
            tasks,
            node_assignment,
            origin_region,
            origin_start,
        })
    }

    pub fn origin_ms(&self) -> i64 {
        to_ms(self.origin_start)
    }

    pub fn end_ms(&self) -> i64 {
        self.tasks.iter().map(TaskRecord::end_ms).max().unwrap_or(self.origin_ms())
    }

    /// Short resource label like `atlantis x8`.
    pub fn resources_label(&self) -> String {
        self.node_assignment
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Returns a copy whose schedule and durations are stretched by `factor`
    /// around the workflow start, used for per-governor runtime multipliers.
    pub fn stretched(&self, factor: f64) -> Self {
        let origin = self.origin_ms();
        let mut out = self.clone();
        for task in &mut out.tasks {
            let submit_off = (to_ms(task.submit_time) - origin) as f64 * factor;
            let start_off = (task.start_ms() - origin) as f64 * factor;
            task.submit_time = from_ms(origin + submit_off.round() as i64);
            task.start_time = from_ms(origin + start_off.round() as i64);
            task.duration_s = (task.duration_s * factor * 1000.0).round() / 1000.0;
        }
        sort_tasks(&mut out.tasks);
        out
    }

    /// Returns a copy with every task placed on `node_id` and a single
    /// reserved node of that type.
    pub fn retargeted(&self, node_id: &str) -> Self {
        let mut out = self.clone();
        for task in &mut out.tasks {
            task.node_id = node_id.to_string();
        }
        out.node_assignment = vec![NodeCount::new(node_id, 1)];
        out
    }
}

fn sort_tasks(tasks: &mut [TaskRecord]) {
    tasks.sort_by(|a, b| {
        a.start_time
            .cmp(&b.start_time)
            .then_with(|| a.task_id.cmp(&b.task_id))
    });
}

/// Wall-clock span from the first task start to the last task end, in seconds.
pub fn makespan(trace: &WorkflowTrace) -> f64 {
    let start = trace.tasks.iter().map(TaskRecord::start_ms).min();
    let end = trace.tasks.iter().map(TaskRecord::end_ms).max();
    match (start, end) {
        (Some(s), Some(e)) => (e - s) as f64 / 1000.0,
        _ => 0.0,
    }
}

pub fn makespan_hours(trace: &WorkflowTrace) -> f64 {
    makespan(trace) / 3600.0
}

/// Overrides applied on top of what the file itself declares.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub workflow_name: Option<String>,
    /// Node used for every row when the trace has no `node` column.
    pub default_node: Option<String>,
    pub node_assignment: Option<Vec<NodeCount>>,
    pub region: Option<String>,
}

const GIB: f64 = 1_073_741_824.0;

/// Parses a `1h 2m 3s 500ms`-style duration into seconds. Bare numbers are
/// milliseconds.
pub fn parse_duration(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if raw.is_empty() || raw == "-" {
        return None;
    }
    if let Ok(ms) = raw.parse::<f64>() {
        return (ms >= 0.0 && ms.is_finite()).then_some(ms / 1000.0);
    }
    let bytes = raw.as_bytes();
    let mut i = 0;
    let mut total = 0.0;
    let mut parts = 0;
    while i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i == bytes.len() {
            break;
        }
        let num_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        let value: f64 = raw[num_start..i].parse().ok()?;
        let unit_start = i;
        while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
            i += 1;
        }
        let scale = match &raw[unit_start..i] {
            "d" => 86_400.0,
            "h" => 3_600.0,
            "m" => 60.0,
            "s" => 1.0,
            "ms" => 0.001,
            _ => return None,
        };
        total += value * scale;
        parts += 1;
    }
    (parts > 0).then_some(total)
}

/// Parses `4 GB`, `512MB`, `1.5 GB` or a bare byte count. Units are binary.
pub fn parse_memory(raw: &str) -> Option<u64> {
    let raw = raw.trim();
    if raw == "-" {
        return Some(0);
    }
    let split = raw
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(raw.len());
    let value: f64 = raw[..split].parse().ok()?;
    let scale: f64 = match raw[split..].trim().to_ascii_uppercase().as_str() {
        "" | "B" => 1.0,
        "K" | "KB" | "KIB" => 1024.0,
        "M" | "MB" | "MIB" => 1024.0 * 1024.0,
        "G" | "GB" | "GIB" => GIB,
        "T" | "TB" | "TIB" => GIB * 1024.0,
        _ => return None,
    };
    let bytes = value * scale;
    (bytes.is_finite() && bytes >= 0.0).then(|| bytes.round() as u64)
}

fn parse_cpu_percent(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if raw == "-" {
        return Some(0.0);
    }
    let v: f64 = raw.trim_end_matches('%').trim().parse().ok()?;
    (v.is_finite() && v >= 0.0).then_some(v)
}

/// Reads and validates a trace file.
pub fn parse_trace(
    path: impl AsRef<Path>,
    catalog: &NodeCatalog,
    options: &ParseOptions,
) -> Result<Loaded<WorkflowTrace>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    read_trace_inner(file, catalog, options, stem).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

/// Parses trace text from any reader; see the module docs for the format.
pub fn read_trace(
    reader: impl Read,
    catalog: &NodeCatalog,
    options: &ParseOptions,
) -> Result<Loaded<WorkflowTrace>> {
    read_trace_inner(reader, catalog, options, None)
}

fn read_trace_inner(
    mut reader: impl Read,
    catalog: &NodeCatalog,
    options: &ParseOptions,
    fallback_name: Option<String>,
) -> Result<Loaded<WorkflowTrace>> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<trace>", e))?;

    let mut meta: HashMap<String, String> = HashMap::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
            }
            body_start += line.len();
        } else if trimmed.is_empty() {
            body_start += line.len();
        } else {
            break;
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(false)
        .from_reader(&text.as_bytes()[body_start..]);
    let headers = rdr.headers().map_err(|e| Error::csv("<trace>", e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        col(name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
        })
    };

    let c_id = require("task_id")?;
    let c_start = require("start")?;
    let c_real = col("realtime");
    let c_complete = col("complete");
    if c_real.is_none() && c_complete.is_none() {
        return Err(Error::MissingColumn {
            column: "realtime".into(),
        });
    }
    let c_cpu = require("%cpu")?;
    let c_cpus = require("cpus")?;
    let c_mem = require("memory")?;
    let c_process = col("process").or_else(|| col("name"));
    let c_submit = col("submit");
    let c_node = col("node");
    if c_node.is_none() && options.default_node.is_none() {
        return Err(Error::MissingColumn {
            column: "node".into(),
        });
    }

    let mut warnings = Vec::new();
    let mut tasks = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // 1-based data row number
        let row = i + 1;
        let record = record.map_err(|e| Error::csv("<trace>", e))?;
        let get = |c: usize| record.get(c).unwrap_or("").trim();
        let bad = |c: usize| Error::UnparseableValue {
            row,
            column: headers.get(c).unwrap_or("?").to_string(),
            value: get(c).to_string(),
        };

        let task_id = get(c_id).to_string();
        let start_time = parse_timestamp(get(c_start)).ok_or_else(|| bad(c_start))?;
        let submit_time = match c_submit {
            Some(c) if !get(c).is_empty() && get(c) != "-" => {
                parse_timestamp(get(c)).ok_or_else(|| bad(c))?
            }
            _ => start_time,
        };
        if start_time < submit_time {
            return Err(Error::InvalidRecord {
                row,
                reason: "start precedes submit".into(),
            });
        }
        let duration_s = match (c_real, c_complete) {
            (Some(c), _) if get(c) != "-" && !get(c).is_empty() => {
                parse_duration(get(c)).ok_or_else(|| bad(c))?
            }
            (_, Some(c)) => {
                let end = parse_timestamp(get(c)).ok_or_else(|| bad(c))?;
                if end < start_time {
                    return Err(Error::InvalidRecord {
                        row,
                        reason: "complete precedes start".into(),
                    });
                }
                (to_ms(end) - to_ms(start_time)) as f64 / 1000.0
            }
            (Some(c), None) => return Err(bad(c)),
            (None, None) => unreachable!("checked above"),
        };
        let cpus_allocated: u32 = get(c_cpus)
            .parse()
            .ok()
            .filter(|&n: &u32| n > 0)
            .ok_or_else(|| bad(c_cpus))?;
        let mut cpu_utilization = parse_cpu_percent(get(c_cpu)).ok_or_else(|| bad(c_cpu))?;
        let cap = 100.0 * cpus_allocated as f64;
        if cpu_utilization > cap {
            let msg = format!(
                "row {row} (task {task_id}): %cpu {cpu_utilization} exceeds 100 x {cpus_allocated} cpus, clamped to {cap}"
            );
            log::warn!("{msg}");
            warnings.push(msg);
            cpu_utilization = cap;
        }
        let memory_allocated = parse_memory(get(c_mem)).ok_or_else(|| bad(c_mem))?;
        let process_name = c_process.map(|c| get(c).to_string()).unwrap_or_default();
        let node_id = match c_node {
            Some(c) if !get(c).is_empty() => get(c).to_string(),
            _ => options.default_node.clone().ok_or_else(|| bad(c_node.unwrap_or(c_id)))?,
        };
        catalog.get(&node_id)?;

        tasks.push(TaskRecord {
            task_id,
            process_name,
            submit_time,
            start_time,
            duration_s,
            cpu_utilization,
            cpus_allocated,
            memory_allocated,
            node_id,
        });
    }
    if tasks.is_empty() {
        return Err(Error::EmptyTrace);
    }

    let node_assignment = match (&options.node_assignment, meta.get("nodes")) {
        (Some(nodes), _) => nodes.clone(),
        (None, Some(raw)) => NodeCount::parse_list(raw).ok_or_else(|| Error::InvalidRecord {
            row: 0,
            reason: format!("bad `# nodes:` header `{raw}`"),
        })?,
        (None, None) => {
            let distinct: BTreeMap<&str, ()> =
                tasks.iter().map(|t| (t.node_id.as_str(), ())).collect();
            distinct.keys().map(|id| NodeCount::new(*id, 1)).collect()
        }
    };
    for n in &node_assignment {
        catalog.get(&n.node_id)?;
    }

    let name = options
        .workflow_name
        .clone()
        .or_else(|| meta.get("workflow").cloned())
        .or(fallback_name)
        .unwrap_or_else(|| "workflow".into());
    let region = options.region.clone().or_else(|| meta.get("region").cloned());

    let trace = WorkflowTrace::new(name, tasks, node_assignment, region)?;
    if makespan(&trace) <= 0.0 {
        return Err(Error::ZeroMakespan);
    }
    Ok(Loaded {
        value: trace,
        warnings,
    })
}

/// Writes a trace in the tab-separated input format. Durations are written as
/// raw milliseconds and memory as raw bytes so re-parsing is lossless for
/// millisecond-precision durations.
pub fn write_trace_tsv(trace: &WorkflowTrace, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# workflow: {}", trace.workflow_name)?;
    let nodes: Vec<String> = trace
        .node_assignment
        .iter()
        .map(|n| format!("{} x{}", n.node_id, n.count))
        .collect();
    writeln!(out, "# nodes: {}", nodes.join(", "))?;
    if let Some(region) = &trace.origin_region {
        writeln!(out, "# region: {region}")?;
    }
    writeln!(out, "task_id\tprocess\tsubmit\tstart\trealtime\t%cpu\tcpus\tmemory\tnode")?;
    for t in &trace.tasks {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}%\t{}\t{}\t{}",
            t.task_id,
            t.process_name,
            format_timestamp(t.submit_time),
            format_timestamp(t.start_time),
            secs_to_ms(t.duration_s),
            t.cpu_utilization,
            t.cpus_allocated,
            t.memory_allocated,
            t.node_id
        )?;
    }
    Ok(())
}

pub fn write_trace_json(trace: &WorkflowTrace, out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, trace)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::NodeCatalog;

    const HEADER: &str = "task_id\tprocess\tsubmit\tstart\trealtime\t%cpu\tcpus\tmemory\tnode\n";

    fn parse(text: &str) -> Result<Loaded<WorkflowTrace>> {
        read_trace(text.as_bytes(), &NodeCatalog::builtin(), &ParseOptions::default())
    }

    #[test]
    fn unit_conversions() {
        let text = format!(
            "{HEADER}\
             1\tA\t2024-01-08 09:00:00.000\t2024-01-08 09:00:00.000\t1m 30s\t250.0%\t4\t4 GB\tsherwood\n\
             2\tB\t2024-01-08 09:00:00.000\t2024-01-08 09:01:00.000\t1h 2m 3s\t100%\t1\t512 MB\tsherwood\n\
             3\tC\t2024-01-08 09:00:00.000\t2024-01-08 09:02:00.000\t500ms\t-\t2\t-\tsherwood\n"
        );
        let trace = parse(&text).unwrap().value;
        assert_eq!(trace.tasks.len(), 3);
        let a = &trace.tasks[0];
        assert_eq!(a.duration_s, 90.0);
        assert_eq!(a.cpu_utilization, 250.0);
        assert_eq!(a.memory_allocated, 4_294_967_296);
        assert_eq!(trace.tasks[1].duration_s, 3723.0);
        assert_eq!(trace.tasks[1].memory_allocated, 536_870_912);
        assert_eq!(trace.tasks[2].duration_s, 0.5);
        assert_eq!(trace.tasks[2].cpu_utilization, 0.0);
        assert_eq!(trace.tasks[2].memory_allocated, 0);
    }

    #[test]
    fn clamps_cpu_above_allocation() {
        let text = format!(
            "{HEADER}1\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t60s\t900%\t8\t1 GB\tsherwood\n"
        );
        let loaded = parse(&text).unwrap();
        assert_eq!(loaded.value.tasks[0].cpu_utilization, 800.0);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("clamped"));
    }

    #[test]
    fn complete_column_fallback() {
        let text = "task_id\tstart\tcomplete\t%cpu\tcpus\tmemory\tnode\n\
                    1\t2024-01-08 09:00:00\t2024-01-08 09:10:00\t50%\t1\t1 GB\tsherwood\n";
        let trace = parse(text).unwrap().value;
        assert_eq!(trace.tasks[0].duration_s, 600.0);
        assert_eq!(trace.tasks[0].process_name, "");
    }

    #[test]
    fn missing_column_is_named() {
        let text = "task_id\tstart\trealtime\tcpus\tmemory\tnode\n";
        match parse(text) {
            Err(Error::MissingColumn { column }) => assert_eq!(column, "%cpu"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unparseable_value_reports_row_and_column() {
        let text = format!(
            "{HEADER}\
             1\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t60s\t10%\t1\t1 GB\tsherwood\n\
             2\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\tsoon\t10%\t1\t1 GB\tsherwood\n"
        );
        match parse(&text) {
            Err(Error::UnparseableValue { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "realtime", "soon"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_unknown_node() {
        assert!(matches!(parse(HEADER), Err(Error::EmptyTrace)));
        let text = format!(
            "{HEADER}1\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t60s\t10%\t1\t1 GB\tnarnia\n"
        );
        assert!(matches!(parse(&text), Err(Error::UnknownNode(n)) if n == "narnia"));
    }

    #[test]
    fn default_node_and_metadata() {
        let text = "# workflow: Demo\n# nodes: atlantis x8\n# region: DE\n\
                    task_id\tstart\trealtime\t%cpu\tcpus\tmemory\n\
                    1\t2024-01-08 09:00:00\t60s\t10%\t1\t1 GB\n";
        assert!(matches!(parse(text), Err(Error::MissingColumn { column }) if column == "node"));
        let opts = ParseOptions {
            default_node: Some("atlantis".into()),
            ..Default::default()
        };
        let trace = read_trace(text.as_bytes(), &NodeCatalog::builtin(), &opts)
            .unwrap()
            .value;
        assert_eq!(trace.workflow_name, "Demo");
        assert_eq!(trace.node_assignment, vec![NodeCount::new("atlantis", 8)]);
        assert_eq!(trace.origin_region.as_deref(), Some("DE"));
        assert_eq!(trace.resources_label(), "atlantis x8");
    }

    #[test]
    fn rows_sorted_by_start_then_id() {
        let text = format!(
            "{HEADER}\
             b\tA\t2024-01-08 09:00:00\t2024-01-08 09:05:00\t60s\t10%\t1\t1 GB\tsherwood\n\
             c\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t60s\t10%\t1\t1 GB\tsherwood\n\
             a\tA\t2024-01-08 09:00:00\t2024-01-08 09:05:00\t60s\t10%\t1\t1 GB\tsherwood\n"
        );
        let trace = parse(&text).unwrap().value;
        let ids: Vec<_> = trace.tasks.iter().map(|t| t.task_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(trace.origin_start, trace.tasks[0].start_time);
    }

    #[test]
    fn makespan_examples() {
        let text = format!(
            "{HEADER}\
             1\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t100s\t10%\t1\t1 GB\tsherwood\n\
             2\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:50\t100s\t10%\t1\t1 GB\tsherwood\n"
        );
        assert_eq!(makespan(&parse(&text).unwrap().value), 150.0);
        let single = format!(
            "{HEADER}1\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t60s\t10%\t1\t1 GB\tsherwood\n"
        );
        assert_eq!(makespan(&parse(&single).unwrap().value), 60.0);
    }

    #[test]
    fn start_before_submit_rejected() {
        let text = format!(
            "{HEADER}1\tA\t2024-01-08 09:10:00\t2024-01-08 09:00:00\t60s\t10%\t1\t1 GB\tsherwood\n"
        );
        assert!(matches!(parse(&text), Err(Error::InvalidRecord { row: 1, .. })));
    }

    #[test]
    fn duration_and_memory_parsers() {
        assert_eq!(parse_duration("2d 3h"), Some(183_600.0));
        assert_eq!(parse_duration("1.5s"), Some(1.5));
        assert_eq!(parse_duration("90000"), Some(90.0));
        assert_eq!(parse_duration("3 fortnights"), None);
        assert_eq!(parse_memory("1 KB"), Some(1024));
        assert_eq!(parse_memory("1.5 GB"), Some(1_610_612_736));
        assert_eq!(parse_memory("7"), Some(7));
        assert_eq!(parse_memory("1 PB"), None);
    }

    #[test]
    fn node_count_parsing() {
        assert_eq!(NodeCount::parse("atlantis x8"), Some(NodeCount::new("atlantis", 8)));
        assert_eq!(NodeCount::parse("camelot=2"), Some(NodeCount::new("camelot", 2)));
        assert_eq!(NodeCount::parse("sherwood"), Some(NodeCount::new("sherwood", 1)));
        assert_eq!(
            NodeCount::parse_list("atlantis x2, sherwood"),
            Some(vec![NodeCount::new("atlantis", 2), NodeCount::new("sherwood", 1)])
        );
    }

    #[test]
    fn stretch_scales_schedule() {
        let text = format!(
            "{HEADER}\
             1\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:00\t100s\t10%\t1\t1 GB\tsherwood\n\
             2\tA\t2024-01-08 09:00:00\t2024-01-08 09:00:50\t100s\t10%\t1\t1 GB\tsherwood\n"
        );
        let trace = parse(&text).unwrap().value;
        let s = trace.stretched(2.0);
        assert_eq!(makespan(&s), 300.0);
        assert_eq!(s.origin_start, trace.origin_start);
    }
}
