//! Carbon-intensity time series.
//!
//! A series is a step function: each sample holds for `[start, start +
//! resolution)`. Missing intervals are allowed in a loaded series but any
//! query that touches one fails with [`Error::GapDetected`] unless the series
//! was forward-filled at load time.
//!
//! CSV files carry `timestamp_utc,ci_g_per_kwh` with ISO-8601 timestamps, one
//! file per region, signal and year.

use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{from_ms, parse_timestamp, to_ms, HOUR_MS, MS_PER_HOUR, SECOND_MS};
use crate::Loaded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Average,
    Marginal,
}

impl SignalKind {
    /// Publication interval of the usual data providers.
    pub fn native_resolution_s(self) -> i64 {
        match self {
            SignalKind::Average => 3600,
            SignalKind::Marginal => 300,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Average => "average",
            SignalKind::Marginal => "marginal",
        }
    }
}

impl std::fmt::Display for SignalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "avg" => Ok(SignalKind::Average),
            "marginal" | "marg" => Ok(SignalKind::Marginal),
            other => Err(format!("unknown signal kind `{other}` (expected average or marginal)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiSample {
    pub start: DateTime<Utc>,
    /// gCO2e per kWh.
    pub ci: f64,
}

/// Duration-weighted mean intensity over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub mean_ci: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiSeries {
    region: String,
    kind: SignalKind,
    resolution_ms: i64,
    starts: Vec<i64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadCiOptions {
    /// Fill missing intervals with the preceding value instead of leaving a gap.
    pub forward_fill: bool,
}

impl CiSeries {
    /// Builds a series from samples that must be strictly increasing, aligned
    /// to `resolution_s` relative to the first sample, and non-negative.
    pub fn new(
        region: impl Into<String>,
        kind: SignalKind,
        resolution_s: i64,
        samples: impl IntoIterator<Item = CiSample>,
    ) -> Result<Self> {
        if resolution_s <= 0 {
            return Err(Error::InvalidInterval(format!("resolution {resolution_s}s")));
        }
        let resolution_ms = resolution_s * SECOND_MS;
        let mut starts = Vec::new();
        let mut values = Vec::new();
        for s in samples {
            let t = to_ms(s.start);
            if !s.ci.is_finite() || s.ci < 0.0 {
                return Err(Error::NegativeIntensity { at: s.start, value: s.ci });
            }
            if let Some(&prev) = starts.last() {
                if t == prev {
                    return Err(Error::DuplicateTimestamp(s.start));
                }
                if t < prev {
                    return Err(Error::InvalidInterval(format!("samples out of order at {}", s.start)));
                }
                if (t - prev) % resolution_ms != 0 {
                    return Err(Error::Misaligned { at: s.start, resolution_s });
                }
            }
            starts.push(t);
            values.push(s.ci);
        }
        if starts.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self {
            region: region.into(),
            kind,
            resolution_ms,
            starts,
            values,
        })
    }

    /// Contiguous series starting at `start` with one value per interval.
    pub fn from_values(
        region: impl Into<String>,
        kind: SignalKind,
        start: DateTime<Utc>,
        resolution_s: i64,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        let t0 = to_ms(start);
        let samples = values.into_iter().enumerate().map(|(i, ci)| CiSample {
            start: from_ms(t0 + i as i64 * resolution_s * SECOND_MS),
            ci,
        });
        Self::new(region, kind, resolution_s, samples)
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn resolution_s(&self) -> i64 {
        self.resolution_ms / SECOND_MS
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = CiSample> + '_ {
        self.starts
            .iter()
            .zip(&self.values)
            .map(|(&t, &ci)| CiSample { start: from_ms(t), ci })
    }

    /// `[first sample start, last sample end)`.
    pub fn span(&self) -> (DateTime<Utc>, DateTime<Utc>) {
        let (a, b) = self.span_ms();
        (from_ms(a), from_ms(b))
    }

    fn span_ms(&self) -> (i64, i64) {
        (self.starts[0], self.starts[self.starts.len() - 1] + self.resolution_ms)
    }

    /// Missing `[from, to)` intervals between consecutive samples.
    pub fn gaps(&self) -> Vec<(DateTime<Utc>, DateTime<Utc>)> {
        self.starts
            .windows(2)
            .filter(|w| w[1] - w[0] > self.resolution_ms)
            .map(|w| (from_ms(w[0] + self.resolution_ms), from_ms(w[1])))
            .collect()
    }

    pub fn ensure_contiguous(&self) -> Result<()> {
        let missing = self.gaps();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::GapDetected { missing })
        }
    }

    /// Fills every gap with the value preceding it.
    pub fn forward_filled(&self) -> Self {
        let mut starts = Vec::with_capacity(self.starts.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.starts.len() {
            if let (Some(&prev), Some(&v)) = (starts.last(), values.last()) {
                let mut t = prev + self.resolution_ms;
                while t < self.starts[i] {
                    starts.push(t);
                    values.push(v);
                    t += self.resolution_ms;
                }
            }
            starts.push(self.starts[i]);
            values.push(self.values[i]);
        }
        Self {
            starts,
            values,
            ..self.clone()
        }
    }

    /// Every value multiplied by `factor` (which must be non-negative).
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0, "intensity scale must be non-negative");
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Concatenates series of the same region, kind and resolution, e.g. one
    /// file per year.
    pub fn concat(parts: Vec<CiSeries>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(Error::EmptySeries)?;
        let (region, kind, res) = (first.region.clone(), first.kind, first.resolution_s());
        let mut samples: Vec<CiSample> = first.samples().collect();
        for part in iter {
            if part.resolution_ms != first.resolution_ms {
                return Err(Error::InvalidInterval(format!(
                    "cannot join {}s and {}s series",
                    res,
                    part.resolution_s()
                )));
            }
            samples.extend(part.samples());
        }
        samples.sort_by_key(|s| s.start);
        Self::new(region, kind, res, samples)
    }

    fn out_of_range(&self, t: i64) -> Error {
        let (start, end) = self.span();
        Error::OutOfRange { t: from_ms(t), start, end }
    }

    /// Index of the last sample starting at or before `t`.
    fn floor_index(&self, t: i64) -> Option<usize> {
        self.starts.partition_point(|&s| s <= t).checked_sub(1)
    }

    /// Intensity in effect at `t` (step semantics).
    pub fn ci_at(&self, t: DateTime<Utc>) -> Result<f64> {
        let t = to_ms(t);
        let (lo, hi) = self.span_ms();
        if t < lo || t >= hi {
            return Err(self.out_of_range(t));
        }
        let i = self.floor_index(t).expect("t >= first start");
        if t >= self.starts[i] + self.resolution_ms {
            return Err(Error::GapDetected {
                missing: vec![(from_ms(self.starts[i] + self.resolution_ms), from_ms(self.starts[i + 1]))],
            });
        }
        Ok(self.values[i])
    }

    /// `Σ ci × overlap_ms` over `[start, end)`, the raw integral in
    /// g/kWh·ms. Accumulating before dividing keeps integer-valued inputs
    /// exact.
    fn weighted_sum_ms(&self, start: i64, end: i64) -> Result<f64> {
        if start > end {
            return Err(Error::InvalidInterval(format!(
                "{} is after {}",
                from_ms(start),
                from_ms(end)
            )));
        }
        let (lo, hi) = self.span_ms();
        if start < lo {
            return Err(self.out_of_range(start));
        }
        if end > hi {
            return Err(self.out_of_range(end));
        }
        let mut i = match self.floor_index(start) {
            Some(i) => i,
            None => return Err(self.out_of_range(start)),
        };
        let mut cursor = start;
        let mut acc = 0.0;
        while cursor < end {
            let a = self.starts[i];
            let b = a + self.resolution_ms;
            if a > cursor {
                return Err(Error::GapDetected {
                    missing: vec![(from_ms(cursor), from_ms(a))],
                });
            }
            if b > cursor {
                let hi = b.min(end);
                acc += self.values[i] * (hi - cursor) as f64;
                cursor = hi;
            }
            i += 1;
        }
        Ok(acc)
    }

    /// Emissions in grams of drawing `power_kw` over `[start, end)`.
    pub fn integrate_emissions(&self, start: DateTime<Utc>, end: DateTime<Utc>, power_kw: f64) -> Result<f64> {
        self.integrate_ms(to_ms(start), to_ms(end), power_kw)
    }

    pub(crate) fn integrate_ms(&self, start: i64, end: i64, power_kw: f64) -> Result<f64> {
        if power_kw.is_nan() || power_kw < 0.0 {
            return Err(Error::InvalidInterval(format!("negative power {power_kw} kW")));
        }
        Ok(self.weighted_sum_ms(start, end)? * power_kw / MS_PER_HOUR)
    }

    /// Duration-weighted mean intensity over `[start, end)`.
    pub fn mean_ci(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> Result<f64> {
        self.window_ms(to_ms(start), to_ms(end)).map(|w| w.mean_ci)
    }

    fn window_ms(&self, start: i64, end: i64) -> Result<CiWindow> {
        if end <= start {
            return Err(Error::InvalidInterval("window must have positive length".into()));
        }
        let sum = self.weighted_sum_ms(start, end)?;
        Ok(CiWindow {
            start: from_ms(start),
            end: from_ms(end),
            mean_ci: sum / (end - start) as f64,
        })
    }

    /// `count` consecutive one-hour windows beginning at `anchor`.
    pub fn hourly_windows(&self, anchor: DateTime<Utc>, count: usize) -> Result<Vec<CiWindow>> {
        let a = to_ms(anchor);
        (0..count as i64)
            .map(|k| self.window_ms(a + k * HOUR_MS, a + (k + 1) * HOUR_MS))
            .collect()
    }

    /// Resamples to a coarser resolution by averaging. Output intervals are
    /// aligned to multiples of `resolution_s` since the epoch; partially
    /// covered intervals at the edges or around gaps are dropped.
    pub fn resample(&self, resolution_s: i64) -> Result<Self> {
        let new_ms = resolution_s * SECOND_MS;
        if new_ms <= 0 || new_ms % self.resolution_ms != 0 {
            return Err(Error::InvalidInterval(format!(
                "cannot resample {}s to {resolution_s}s",
                self.resolution_s()
            )));
        }
        if new_ms == self.resolution_ms {
            return Ok(self.clone());
        }
        let (lo, hi) = self.span_ms();
        let mut bin = lo.div_euclid(new_ms) * new_ms;
        let mut samples = Vec::new();
        while bin < hi {
            if bin >= lo && bin + new_ms <= hi {
                if let Ok(w) = self.window_ms(bin, bin + new_ms) {
                    samples.push(CiSample { start: from_ms(bin), ci: w.mean_ci });
                }
            }
            bin += new_ms;
        }
        Self::new(self.region.clone(), self.kind, resolution_s, samples)
    }

    /// Hourly view used by shifting; a no-op for hourly series.
    pub fn hourly(&self) -> Result<Self> {
        self.resample(3600)
    }
}

/// Reads a `timestamp_utc,ci_g_per_kwh` file.
///
/// Unsorted rows are sorted with a warning. Gaps are reported as warnings and
/// either kept (queries over them fail) or forward-filled.
pub fn load_ci(
    path: impl AsRef<Path>,
    region: &str,
    kind: SignalKind,
    options: LoadCiOptions,
) -> Result<Loaded<CiSeries>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ci(file, region, kind, options).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

pub fn read_ci(
    reader: impl std::io::Read,
    region: &str,
    kind: SignalKind,
    options: LoadCiOptions,
) -> Result<Loaded<CiSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv("<ci>", e))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
        })
    };
    let c_t = find("timestamp_utc")?;
    let c_v = find("ci_g_per_kwh")?;

    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv("<ci>", e))?;
        let bad = |c: usize| Error::UnparseableValue {
            row: i + 1,
            column: headers.get(c).unwrap_or("?").to_string(),
            value: rec.get(c).unwrap_or("").to_string(),
        };
        let start = rec.get(c_t).and_then(parse_timestamp).ok_or_else(|| bad(c_t))?;
        let ci: f64 = rec.get(c_v).and_then(|v| v.parse().ok()).ok_or_else(|| bad(c_v))?;
        if ci < 0.0 {
            return Err(Error::NegativeIntensity { at: start, value: ci });
        }
        samples.push(CiSample { start, ci });
    }
    if samples.is_empty() {
        return Err(Error::EmptySeries);
    }

    let mut warnings = Vec::new();
    if samples.windows(2).any(|w| w[1].start < w[0].start) {
        let msg = format!("{region}/{kind}: input rows not in time order, sorted");
        log::warn!("{msg}");
        warnings.push(msg);
        samples.sort_by_key(|s| s.start);
    }
    let resolution_s = samples
        .windows(2)
        .map(|w| (to_ms(w[1].start) - to_ms(w[0].start)) / SECOND_MS)
        .filter(|&d| d > 0)
        .min()
        .unwrap_or_else(|| kind.native_resolution_s());

    let mut series = CiSeries::new(region, kind, resolution_s, samples)?;
    let gaps = series.gaps();
    if !gaps.is_empty() {
        let (a, b) = gaps[0];
        let action = if options.forward_fill { "forward-filled" } else { "left unfilled" };
        let msg = format!(
            "{region}/{kind}: {} gap(s), first {}..{}, {action}",
            gaps.len(),
            a.to_rfc3339(),
            b.to_rfc3339()
        );
        log::warn!("{msg}");
        warnings.push(msg);
        if options.forward_fill {
            series = series.forward_filled();
        }
    }
    Ok(Loaded { value: series, warnings })
}

pub fn write_ci_csv(series: &CiSeries, mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "timestamp_utc,ci_g_per_kwh")?;
    for s in series.samples() {
        writeln!(out, "{},{}", s.start.format("%Y-%m-%dT%H:%M:%SZ"), s.ci)?;
    }
    Ok(())
}
