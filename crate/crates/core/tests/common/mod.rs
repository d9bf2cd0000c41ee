#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use proptest::prelude::*;
use wfcarbon::{CiSeries, NodeCount, SignalKind, TaskRecord, WorkflowTrace};

pub const NODE: &str = "sherwood";

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 11, 9, 0, 0).unwrap()
}

pub fn task(id: usize, offset_ms: i64, duration_ms: i64, cpus: u32, util: f64, mem: u64) -> TaskRecord {
    TaskRecord {
        task_id: id.to_string(),
        process_name: format!("proc_{}", id % 3),
        submit_time: t0() + Duration::milliseconds(offset_ms / 2),
        start_time: t0() + Duration::milliseconds(offset_ms),
        duration_s: duration_ms as f64 / 1000.0,
        cpu_utilization: util,
        cpus_allocated: cpus,
        memory_allocated: mem,
        node_id: NODE.into(),
    }
}

pub fn trace(tasks: Vec<TaskRecord>) -> WorkflowTrace {
    WorkflowTrace::new("synthetic", tasks, vec![NodeCount::new(NODE, 2)], None).unwrap()
}

fn arb_load() -> impl Strategy<Value = (u32, f64, u64)> {
    (1u32..=16).prop_flat_map(|cpus| (Just(cpus), 0.0..=100.0 * cpus as f64, 0u64..(32u64 << 30)))
}

/// Tasks starting anywhere in the first `hours` hours, running up to three hours.
pub fn arb_trace(max_tasks: usize, hours: i64) -> impl Strategy<Value = WorkflowTrace> {
    prop::collection::vec((0..hours * 3_600_000, 1_000i64..3 * 3_600_000, arb_load()), 1..=max_tasks).prop_map(
        |specs| {
            let tasks = specs
                .into_iter()
                .enumerate()
                .map(|(i, (off, dur, (cpus, util, mem)))| task(i, if i == 0 { 0 } else { off }, dur, cpus, util, mem))
                .collect();
            trace(tasks)
        },
    )
}

/// Tasks that each finish inside the hour they start in.
pub fn arb_contained_trace(max_tasks: usize, hours: i64) -> impl Strategy<Value = WorkflowTrace> {
    prop::collection::vec((0..hours, 0i64..3_599_000, 0.0f64..1.0, arb_load()), 1..=max_tasks).prop_map(|specs| {
        let tasks = specs
            .into_iter()
            .enumerate()
            .map(|(i, (h, s, f, (cpus, util, mem)))| {
                let (h, s) = if i == 0 { (0, 0) } else { (h, s) };
                let room = 3_600_000 - s;
                let dur = 1 + (f * (room - 1) as f64) as i64;
                task(i, h * 3_600_000 + s, dur, cpus, util, mem)
            })
            .collect();
        trace(tasks)
    })
}

pub fn arb_ci_values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..900.0, len)
}

pub fn hourly(values: Vec<f64>) -> CiSeries {
    CiSeries::from_values("GB", SignalKind::Average, t0(), 3600, values).unwrap()
}
