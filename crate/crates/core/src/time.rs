//! Timestamp helpers. All instants are UTC with millisecond precision.

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc, Weekday};

pub const SECOND_MS: i64 = 1_000;
pub const HOUR_MS: i64 = 3_600_000;
pub const MS_PER_HOUR: f64 = 3_600_000.0;

pub fn to_ms(t: DateTime<Utc>) -> i64 {
    t.timestamp_millis()
}

pub fn from_ms(ms: i64) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(ms)
        .single()
        .expect("timestamp within chrono range")
}

/// Converts a non-negative duration in seconds to whole milliseconds.
pub fn secs_to_ms(secs: f64) -> i64 {
    (secs * 1000.0).round() as i64
}

/// Accepts RFC 3339, `YYYY-MM-DD HH:MM:SS[.fff]` (Nextflow), the same with a
/// `T` separator and no offset, or an integer count of epoch milliseconds.
/// Naive forms are read as UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if raw.bytes().all(|b| b.is_ascii_digit()) {
        return raw.parse::<i64>().ok().and_then(|ms| Utc.timestamp_millis_opt(ms).single());
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(n) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(Utc.from_utc_datetime(&n));
        }
    }
    None
}

/// Nextflow-style rendering used when writing traces back out.
pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%d %H:%M:%S%.3f").to_string()
}

pub fn second_monday(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_weekday_of_month_opt(year, month, Weekday::Mon, 2).expect("valid month")
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month");
    (next - first).num_days() as u32
}

/// The day in the middle of the month: 16th for 31-day months, 15th otherwise.
pub fn median_day(year: i32, month: u32) -> NaiveDate {
    let day = days_in_month(year, month).div_ceil(2);
    NaiveDate::from_ymd_opt(year, month, day).expect("valid day")
}

/// Local wall-clock `hour:00` on `date`, converted to UTC with a fixed offset.
pub fn local_hour_to_utc(date: NaiveDate, hour: u32, utc_offset_h: i32) -> DateTime<Utc> {
    let local = date.and_hms_opt(hour, 0, 0).expect("valid hour");
    Utc.from_utc_datetime(&local) - chrono::Duration::hours(utc_offset_h as i64)
}

pub fn year_of(t: DateTime<Utc>) -> i32 {
    t.year()
}
