use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "wfcarbon",
    version,
    about = "Estimate and reduce the carbon footprint of workflow executions",
    long_about = "Estimate the operational and embodied carbon footprint of scientific-workflow \
                  executions from their traces, and evaluate temporal shifting and resource \
                  scaling what-ifs against carbon-intensity time series."
)]
pub struct Cli {
    #[arg(long, global = true, value_name = "PATH", help = "JSON config file; flags given on the command line win [default: none]")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy, operational and embodied emissions of each trace
    Footprint(FootprintArgs),
    /// Move the whole workflow to the lowest-emission start in a window
    ShiftEntire(ShiftArgs),
    /// Split the workflow into hourly windows and pause between them
    ShiftInterrupt(ShiftArgs),
    /// Reduction grid over months and window lengths for both shifting modes
    Sweep(SweepArgs),
    /// Compare running a task or workflow on different node types
    ScaleNodes(ScaleNodesArgs),
    /// Compare processor governors on the same resources
    ScaleGovernors(ScaleGovernorsArgs),
    /// Compare cluster sizes, one trace per size
    ScaleCluster(ScaleClusterArgs),
    /// Parse a trace and print it as normalised JSON
    InspectTrace(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    OrderPreserving,
    LowestN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Original,
    Fixed,
    MonthlyMedian,
}

#[derive(Debug, Clone, Args)]
pub struct TraceInput {
    #[arg(long = "trace", value_name = "PATH", help = "Trace file, repeatable [default: none]")]
    pub trace: Vec<PathBuf>,

    #[arg(long, value_name = "PATH", default_value = "builtin", help = "Node catalog JSON, or `builtin` for the shipped catalog")]
    pub catalog: String,

    #[arg(long, value_name = "NODE", help = "Node for traces without a node column [default: none]")]
    pub default_node: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CiInput {
    #[arg(long, value_name = "DIR", default_value = "ci", help = "Directory with {REGION}_{average|marginal}_{YEAR}.csv files")]
    pub ci_dir: PathBuf,

    #[arg(long, value_name = "CODE", default_value = "auto", help = "Grid region code; `auto` uses the trace's region metadata")]
    pub region: String,

    #[arg(long, default_value_t = 2024, help = "Year of carbon-intensity data used for calendar anchors")]
    pub year: i32,

    #[arg(long, default_value_t = false, help = "Fill gaps in carbon-intensity data with the preceding value [default: false]")]
    pub forward_fill: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputOpts {
    #[arg(long, value_name = "DIR", default_value = "out", help = "Directory for result files")]
    pub out_dir: PathBuf,

    #[arg(long, value_enum, default_value = "csv", help = "Result file format")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ShiftOpts {
    #[arg(long, default_value = "average", help = "Carbon-intensity signal: average or marginal")]
    pub signal: String,

    #[arg(long, default_value = "performance", help = "Processor governor used for power")]
    pub governor: String,

    #[arg(long, default_value_t = false, help = "Bound pause overhead by the run-over past the window end instead of the full task duration [default: false]")]
    pub overhead_spillover: bool,

    #[arg(long, default_value_t = false, help = "Do not charge cluster idle power during pause overhead [default: false]")]
    pub no_idle_charge: bool,

    #[arg(long, value_enum, default_value = "order-preserving", help = "How interrupted shifting picks intervals")]
    pub selection: Selection,
}

#[derive(Debug, Clone, Args)]
pub struct FootprintArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[command(flatten)]
    pub ci: CiInput,
    #[command(flatten)]
    pub out: OutputOpts,

    #[arg(long, default_value = "performance", help = "Processor governor used for power")]
    pub governor: String,
}

#[derive(Debug, Clone, Args)]
pub struct ShiftArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[command(flatten)]
    pub ci: CiInput,
    #[command(flatten)]
    pub out: OutputOpts,
    #[command(flatten)]
    pub shift: ShiftOpts,

    #[arg(long, value_name = "TIME", default_value = "trace", help = "Window start (UTC timestamp); `trace` uses the trace start rounded down to the hour")]
    pub anchor: String,

    #[arg(long, value_name = "HOURS", default_value_t = 24, help = "Flexibility window length in hours")]
    pub window: u32,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[command(flatten)]
    pub ci: CiInput,
    #[command(flatten)]
    pub out: OutputOpts,
    #[command(flatten)]
    pub shift: ShiftOpts,

    #[arg(long, value_name = "HOURS", value_delimiter = ',', default_value = "6,12,24,48,96", help = "Flexibility window lengths in hours")]
    pub windows: Vec<u32>,

    #[arg(long, value_name = "HOUR", default_value_t = 9, help = "Local start hour on the second Monday of each month")]
    pub local_hour: u32,

    #[arg(long, default_value_t = false, help = "Evaluate cells on one thread [default: false]")]
    pub serial: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StartOpts {
    #[arg(long, value_enum, default_value = "monthly-median", help = "When variants start: trace timestamps, a fixed time, or the middle day of every month")]
    pub start_policy: Policy,

    #[arg(long, value_name = "TIME", help = "Start time for the fixed policy (UTC) [default: none]")]
    pub start_at: Option<String>,

    #[arg(long, value_name = "HOUR", default_value = "auto", help = "Local start hour for the monthly policy; `auto` picks it from the first task's process")]
    pub start_hour: String,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleNodesArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[command(flatten)]
    pub ci: CiInput,
    #[command(flatten)]
    pub out: OutputOpts,
    #[command(flatten)]
    pub start: StartOpts,

    #[arg(long, value_name = "NODE=PATH|NODE=xF", help = "Runtime source per candidate node, a trace or a runtime multiplier; repeatable [default: none]")]
    pub variant: Vec<String>,

    #[arg(long, value_name = "NODES", value_delimiter = ',', help = "Candidate nodes in output order [default: trace node followed by every --variant]")]
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleGovernorsArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[command(flatten)]
    pub ci: CiInput,
    #[command(flatten)]
    pub out: OutputOpts,
    #[command(flatten)]
    pub start: StartOpts,

    #[arg(long, value_name = "GOV=PATH|GOV=xF", help = "Runtime source per governor; falls back to catalog multipliers; repeatable [default: none]")]
    pub variant: Vec<String>,

    #[arg(long, value_delimiter = ',', default_value = "performance,powersave", help = "Governors to compare")]
    pub governors: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleClusterArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[command(flatten)]
    pub ci: CiInput,
    #[command(flatten)]
    pub out: OutputOpts,
    #[command(flatten)]
    pub start: StartOpts,

    #[arg(long, default_value = "performance", help = "Processor governor used for power")]
    pub governor: String,
}

#[derive(Debug, Clone, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub input: TraceInput,
}
