//! Synthetic inputs for the benchmarks.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wfcarbon::{CiSeries, NodeCount, SignalKind, TaskRecord, WorkflowTrace};

pub const NODE: &str = "atlantis";

pub fn year_start(year: i32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap()
}

/// A workflow of `tasks` tasks spread over `hours` hours on four nodes,
/// starting on 11 March.
pub fn workflow(tasks: usize, hours: i64, seed: u64) -> WorkflowTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = year_start(2024) + Duration::days(70) + Duration::hours(9);
    let span_ms = hours * 3_600_000;
    let records = (0..tasks)
        .map(|i| {
            let off = if i == 0 { 0 } else { rng.gen_range(0..span_ms) };
            let dur = rng.gen_range(1_000..=(span_ms - off).clamp(1_000, 2 * 3_600_000));
            let cpus = rng.gen_range(1..=16);
            let start = origin + Duration::milliseconds(off);
            TaskRecord {
                task_id: i.to_string(),
                process_name: format!("WF:STEP_{}", i % 7),
                submit_time: start,
                start_time: start,
                duration_s: dur as f64 / 1000.0,
                cpu_utilization: rng.gen_range(10.0..=100.0 * cpus as f64),
                cpus_allocated: cpus,
                memory_allocated: rng.gen_range(1u64..64) << 30,
                node_id: NODE.into(),
            }
        })
        .collect();
    WorkflowTrace::new("bench", records, vec![NodeCount::new(NODE, 4)], None).unwrap()
}

/// One year of intensity at `resolution_s` with a daily cycle and noise.
pub fn year_series(year: i32, resolution_s: i64, seed: u64) -> CiSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (366 * 86_400 / resolution_s) as usize;
    let values: Vec<f64> = (0..steps)
        .map(|i| {
            let h = (i as i64 * resolution_s / 3600 % 24) as f64;
            200.0 + 80.0 * (h * std::f64::consts::TAU / 24.0).cos() + rng.gen_range(-20.0..20.0)
        })
        .collect();
    CiSeries::from_values("GB", SignalKind::Average, year_start(year), resolution_s, values).unwrap()
}
