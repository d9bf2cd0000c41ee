//! Fixed UTC offsets for the regions the simulator knows about.
//!
//! Local wall-clock anchors ("9AM on the second Monday") are converted with
//! these standard-time offsets. Daylight saving time is ignored so that runs
//! are reproducible regardless of the year's DST calendar.

use crate::error::{Error, Result};

/// `(code, utc_offset_hours, description)`
pub const REGIONS: &[(&str, i32, &str)] = &[
    ("GB", 0, "Great Britain"),
    ("DE", 1, "Germany"),
    ("CAISO_NORTH", -8, "California"),
    ("ERCOT", -6, "Texas"),
    ("ZA", 2, "South Africa"),
    ("JP_TK", 9, "Tokyo"),
    ("AU_NSW", 10, "New South Wales"),
];

pub fn utc_offset(code: &str) -> Result<i32> {
    REGIONS
        .iter()
        .find(|(c, _, _)| c.eq_ignore_ascii_case(code))
        .map(|(_, off, _)| *off)
        .ok_or_else(|| Error::UnknownRegion(code.to_string()))
}
