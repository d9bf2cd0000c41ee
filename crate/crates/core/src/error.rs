use std::path::PathBuf;

use chrono::{DateTime, Utc};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    UnparseableValue {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },

    #[error("trace contains no tasks")]
    EmptyTrace,

    #[error("trace has zero makespan")]
    ZeroMakespan,

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node `{node}` has no governor `{governor}`")]
    UnknownGovernor { node: String, governor: String },

    #[error("invalid node spec `{node}`: {reason}")]
    InvalidNode { node: String, reason: String },

    #[error("{t} is outside the carbon-intensity span [{start}, {end})")]
    OutOfRange {
        t: DateTime<Utc>,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },

    #[error("carbon-intensity gap: {}", format_gaps(missing))]
    GapDetected {
        missing: Vec<(DateTime<Utc>, DateTime<Utc>)>,
    },

    #[error("negative carbon intensity {value} at {at}")]
    NegativeIntensity { at: DateTime<Utc>, value: f64 },

    #[error("duplicate carbon-intensity timestamp {0}")]
    DuplicateTimestamp(DateTime<Utc>),

    #[error("sample at {at} is not aligned to the {resolution_s}s series resolution")]
    Misaligned {
        at: DateTime<Utc>,
        resolution_s: i64,
    },

    #[error("carbon-intensity series is empty")]
    EmptySeries,

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("{windows} execution windows do not fit a {length_h}h flexibility window")]
    InfeasibleWindow { windows: usize, length_h: u32 },

    #[error("no runtime source for variant `{0}`")]
    MissingVariantTrace(String),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_gaps(missing: &[(DateTime<Utc>, DateTime<Utc>)]) -> String {
    let shown: Vec<String> = missing
        .iter()
        .take(5)
        .map(|(a, b)| format!("{}..{}", a.to_rfc3339(), b.to_rfc3339()))
        .collect();
    let more = missing.len().saturating_sub(shown.len());
    if more > 0 {
        format!("{} (+{more} more)", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

impl Error {
    /// Stable machine-readable code, grouped by the module that raises it.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingColumn { .. } => "TRACE_MISSING_COLUMN",
            Error::UnparseableValue { .. } => "TRACE_UNPARSEABLE_VALUE",
            Error::InvalidRecord { .. } => "TRACE_INVALID_RECORD",
            Error::EmptyTrace => "TRACE_EMPTY",
            Error::ZeroMakespan => "TRACE_ZERO_MAKESPAN",
            Error::UnknownNode(_) => "POWER_UNKNOWN_NODE",
            Error::UnknownGovernor { .. } => "POWER_UNKNOWN_GOVERNOR",
            Error::InvalidNode { .. } => "POWER_INVALID_NODE",
            Error::OutOfRange { .. } => "CI_OUT_OF_RANGE",
            Error::GapDetected { .. } => "CI_GAP_DETECTED",
            Error::NegativeIntensity { .. } => "CI_NEGATIVE_INTENSITY",
            Error::DuplicateTimestamp(_) => "CI_DUPLICATE_TIMESTAMP",
            Error::Misaligned { .. } => "CI_MISALIGNED",
            Error::EmptySeries => "CI_EMPTY_SERIES",
            Error::InvalidInterval(_) => "CI_INVALID_INTERVAL",
            Error::InfeasibleWindow { .. } => "SHIFT_INFEASIBLE_WINDOW",
            Error::MissingVariantTrace(_) => "SCALE_MISSING_VARIANT",
            Error::UnknownRegion(_) => "CONFIG_UNKNOWN_REGION",
            Error::Io { .. } => "IO",
            Error::Csv { .. } => "IO_CSV",
            Error::Json(_) => "IO_JSON",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
