//! Parsing, alignment, smoothing, and windowing of raw metric exports.
//!
//! Two text formats are accepted: a three-column CSV (`metric,timestamp,value`)
//! and the line-oriented exposition format emitted by common scrapers
//! (`name{labels} value timestamp_ms`). Records are bucketed onto a uniform
//! grid, smoothed with a centered moving average, and sliced into the paired
//! faulty/normal windows the analysis operates on.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{MetricCatalog, MetricId, PairedWindow, WindowViolation};
use crate::scalar::Scalar;

/// One raw observation: metric name, seconds-since-epoch timestamp, value.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub metric: String,
    pub timestamp: f64,
    pub value: f64,
}

/// An unordered, possibly ragged pile of raw observations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawExport {
    pub records: Vec<RawRecord>,
}

/// Faulty and normal collection intervals of equal duration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowBounds {
    pub faulty_start: f64,
    pub faulty_end: f64,
    pub normal_start: f64,
    pub normal_end: f64,
}

impl WindowBounds {
    pub fn new(
        faulty_start: f64,
        faulty_end: f64,
        normal_start: f64,
        normal_end: f64,
    ) -> Result<Self, IngestError> {
        let faulty = faulty_end - faulty_start;
        let normal = normal_end - normal_start;
        if faulty <= 0.0 || normal <= 0.0 {
            return Err(IngestError::EmptyInterval);
        }
        if (faulty - normal).abs() > 1e-9 * faulty.max(normal) {
            return Err(IngestError::UnequalDurations { faulty, normal });
        }
        let overlap = faulty_start < normal_end && normal_start < faulty_end;
        if overlap {
            return Err(IngestError::OverlappingIntervals);
        }
        Ok(WindowBounds {
            faulty_start,
            faulty_end,
            normal_start,
            normal_end,
        })
    }

    pub fn duration(&self) -> f64 {
        self.faulty_end - self.faulty_start
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IngestError {
    #[error("malformed CSV row at line {0}")]
    MalformedRow(usize),
    #[error("malformed exposition line at line {0}")]
    MalformedLine(usize),
    #[error("no data for metric `{0}` in the requested range")]
    NoData(MetricId),
    #[error("moving-average window must be odd, got {0}")]
    EvenWindow(usize),
    #[error("faulty and normal durations differ: {faulty} vs {normal}")]
    UnequalDurations { faulty: f64, normal: f64 },
    #[error("faulty and normal intervals overlap")]
    OverlappingIntervals,
    #[error("window bounds fall outside the aligned timeline")]
    OutOfRange,
    #[error("interval is empty")]
    EmptyInterval,
    #[error("bad resampling grid: start {start}, end {end}, step {step}")]
    BadGrid { start: f64, end: f64, step: f64 },
    #[error("window assembly failed: {0:?}")]
    InvalidWindow(Vec<WindowViolation>),
}

/// Parses `metric,timestamp,value` rows. A leading header row with exactly
/// those column names is skipped. Line numbers are 1-based.
pub fn parse_metrics_csv(text: &str) -> Result<RawExport, IngestError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed == "metric,timestamp,value" {
            continue;
        }
        let mut parts = trimmed.split(',');
        let (metric, ts, value) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(m), Some(t), Some(v), None) => (m, t, v),
            _ => return Err(IngestError::MalformedRow(line_no)),
        };
        let timestamp: f64 = ts
            .trim()
            .parse()
            .map_err(|_| IngestError::MalformedRow(line_no))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| IngestError::MalformedRow(line_no))?;
        if !timestamp.is_finite() || !value.is_finite() {
            return Err(IngestError::MalformedRow(line_no));
        }
        records.push(RawRecord {
            metric: metric.trim().to_string(),
            timestamp,
            value,
        });
    }
    Ok(RawExport { records })
}

/// Parses the line-oriented exposition format: `name value timestamp_ms` or
/// `name{labels} value timestamp_ms`. Comment lines starting with `#` are
/// ignored. Label sets are folded into the metric name as a deterministic
/// `name|k=v|k=v` suffix with keys sorted.
pub fn parse_exposition_text(text: &str) -> Result<RawExport, IngestError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name_part, rest) = split_name(trimmed).ok_or(IngestError::MalformedLine(line_no))?;
        let metric = fold_labels(name_part).ok_or(IngestError::MalformedLine(line_no))?;
        let mut fields = rest.split_whitespace();
        let (value, ts_ms) = match (fields.next(), fields.next(), fields.next()) {
            (Some(v), Some(t), None) => (v, t),
            _ => return Err(IngestError::MalformedLine(line_no)),
        };
        let value: f64 = value
            .parse()
            .map_err(|_| IngestError::MalformedLine(line_no))?;
        let ts_ms: f64 = ts_ms
            .parse()
            .map_err(|_| IngestError::MalformedLine(line_no))?;
        if !ts_ms.is_finite() || !value.is_finite() {
            return Err(IngestError::MalformedLine(line_no));
        }
        records.push(RawRecord {
            metric,
            timestamp: ts_ms / 1000.0,
            value,
        });
    }
    Ok(RawExport { records })
}

/// Splits an exposition line into the name (with optional `{...}` label
/// block) and the remaining fields.
fn split_name(line: &str) -> Option<(&str, &str)> {
    if let Some(open) = line.find('{') {
        let close = line[open..].find('}')? + open;
        let name_part = &line[..=close];
        let rest = line[close + 1..].trim_start();
        Some((name_part, rest))
    } else {
        let space = line.find(char::is_whitespace)?;
        Some((&line[..space], line[space..].trim_start()))
    }
}

/// Folds `name{k="a",j="b"}` into `name|j=b|k=a` (keys sorted); bare names
/// pass through unchanged.
fn fold_labels(name_part: &str) -> Option<String> {
    let Some(open) = name_part.find('{') else {
        return Some(name_part.to_string());
    };
    let name = &name_part[..open];
    if name.is_empty() || !name_part.ends_with('}') {
        return None;
    }
    let body = &name_part[open + 1..name_part.len() - 1];
    let mut labels = Vec::new();
    for pair in body.split(',') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (key, value) = pair.split_once('=')?;
        let value = value.trim().trim_matches('"');
        labels.push((key.trim().to_string(), value.to_string()));
    }
    labels.sort();
    let mut folded = name.to_string();
    for (key, value) in labels {
        write!(folded, "|{key}={value}").ok()?;
    }
    Some(folded)
}

/// Buckets every catalog metric onto the uniform grid `[start, end)` with the
/// given step. Bucket values are means of the records that fall inside;
/// interior gaps are filled by linear interpolation between the nearest
/// populated buckets and leading/trailing gaps hold the nearest value.
pub fn resample_align(
    raw: &RawExport,
    catalog: &MetricCatalog,
    start: f64,
    end: f64,
    step_seconds: f64,
) -> Result<BTreeMap<MetricId, Vec<f64>>, IngestError> {
    if !end.is_finite()
        || !start.is_finite()
        || end <= start
        || step_seconds.is_nan()
        || step_seconds <= 0.0
    {
        return Err(IngestError::BadGrid {
            start,
            end,
            step: step_seconds,
        });
    }
    let buckets = ((end - start) / step_seconds).floor() as usize;
    if buckets == 0 {
        return Err(IngestError::BadGrid {
            start,
            end,
            step: step_seconds,
        });
    }

    let mut sums: BTreeMap<&MetricId, Vec<(f64, usize)>> = BTreeMap::new();
    for id in catalog.ids() {
        sums.insert(id, vec![(0.0, 0); buckets]);
    }
    for record in &raw.records {
        if record.timestamp < start || record.timestamp >= end {
            continue;
        }
        let id = MetricId::new(record.metric.clone());
        let Some(slots) = sums.get_mut(&id) else {
            continue;
        };
        let mut bucket = ((record.timestamp - start) / step_seconds) as usize;
        if bucket >= buckets {
            bucket = buckets - 1;
        }
        slots[bucket].0 += record.value;
        slots[bucket].1 += 1;
    }

    let mut aligned = BTreeMap::new();
    for (id, slots) in sums {
        let filled: Vec<Option<f64>> = slots
            .iter()
            .map(|(sum, count)| (*count > 0).then(|| sum / *count as f64))
            .collect();
        if filled.iter().all(Option::is_none) {
            return Err(IngestError::NoData(id.clone()));
        }
        aligned.insert(id.clone(), fill_gaps(&filled));
    }
    Ok(aligned)
}

/// Interpolates interior `None` runs linearly and holds the nearest value at
/// the edges. At least one slot must be populated.
fn fill_gaps(slots: &[Option<f64>]) -> Vec<f64> {
    let n = slots.len();
    let mut out = vec![0.0; n];
    let known: Vec<usize> = (0..n).filter(|&i| slots[i].is_some()).collect();
    let first = known[0];
    let last = *known.last().unwrap();
    for i in 0..n {
        out[i] = match slots[i] {
            Some(v) => v,
            None if i < first => slots[first].unwrap(),
            None if i > last => slots[last].unwrap(),
            None => {
                let left = *known.iter().rev().find(|&&k| k < i).unwrap();
                let right = *known.iter().find(|&&k| k > i).unwrap();
                let frac = (i - left) as f64 / (right - left) as f64;
                let a = slots[left].unwrap();
                let b = slots[right].unwrap();
                a + (b - a) * frac
            }
        };
    }
    out
}

/// Centered moving average with an odd window; at the edges the window
/// truncates to whatever points exist. Output length equals input length.
pub fn smooth_moving_average<T: Scalar>(
    values: &[T],
    window: usize,
) -> Result<Vec<T>, IngestError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(IngestError::EvenWindow(window));
    }
    if window == 1 || values.len() <= 1 {
        return Ok(values.to_vec());
    }
    let half = window / 2;
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let sum: T = values[lo..hi].iter().copied().sum();
        out.push(sum / T::from_usize(hi - lo).unwrap());
    }
    Ok(out)
}

/// Slices an aligned timeline into the paired faulty/normal window described
/// by `bounds`. `timeline_start` is the timestamp of index 0 in the aligned
/// vectors.
pub fn split_windows(
    aligned: &BTreeMap<MetricId, Vec<f64>>,
    timeline_start: f64,
    bounds: &WindowBounds,
    catalog: &MetricCatalog,
    step_seconds: f64,
) -> Result<PairedWindow<f64>, IngestError> {
    if step_seconds.is_nan() || step_seconds <= 0.0 {
        return Err(IngestError::BadGrid {
            start: timeline_start,
            end: timeline_start,
            step: step_seconds,
        });
    }
    let index_of = |ts: f64| -> Result<usize, IngestError> {
        let raw = (ts - timeline_start) / step_seconds;
        if raw < -1e-9 {
            return Err(IngestError::OutOfRange);
        }
        Ok(raw.round() as usize)
    };
    let faulty_start = index_of(bounds.faulty_start)?;
    let faulty_end = index_of(bounds.faulty_end)?;
    let normal_start = index_of(bounds.normal_start)?;
    let normal_end = index_of(bounds.normal_end)?;
    if faulty_end <= faulty_start || normal_end <= normal_start {
        return Err(IngestError::EmptyInterval);
    }
    let period_len = faulty_end - faulty_start;
    if normal_end - normal_start != period_len {
        return Err(IngestError::UnequalDurations {
            faulty: (faulty_end - faulty_start) as f64 * step_seconds,
            normal: (normal_end - normal_start) as f64 * step_seconds,
        });
    }

    let mut faulty = BTreeMap::new();
    let mut normal = BTreeMap::new();
    for id in catalog.ids() {
        let series = aligned
            .get(id)
            .ok_or_else(|| IngestError::NoData(id.clone()))?;
        if faulty_end > series.len() || normal_end > series.len() {
            return Err(IngestError::OutOfRange);
        }
        faulty.insert(id.clone(), series[faulty_start..faulty_end].to_vec());
        normal.insert(id.clone(), series[normal_start..normal_end].to_vec());
    }
    PairedWindow::new(catalog.clone(), faulty, normal, step_seconds, period_len)
        .map_err(IngestError::InvalidWindow)
}

/// Reassembles a paired window from two period CSVs, the inverse of
/// [`window_period_to_csv`]: records are grouped per catalog metric, ordered
/// by timestamp, and must form equal-length vectors.
pub fn window_from_period_csv(
    faulty_csv: &str,
    normal_csv: &str,
    catalog: &MetricCatalog,
    step_seconds: f64,
) -> Result<PairedWindow<f64>, IngestError> {
    let faulty = period_vectors(faulty_csv, catalog)?;
    let normal = period_vectors(normal_csv, catalog)?;
    let period_len = faulty.values().next().map_or(0, Vec::len);
    PairedWindow::new(catalog.clone(), faulty, normal, step_seconds, period_len)
        .map_err(IngestError::InvalidWindow)
}

fn period_vectors(
    csv: &str,
    catalog: &MetricCatalog,
) -> Result<BTreeMap<MetricId, Vec<f64>>, IngestError> {
    let raw = parse_metrics_csv(csv)?;
    let mut grouped: BTreeMap<MetricId, Vec<(f64, f64)>> =
        catalog.ids().map(|id| (id.clone(), Vec::new())).collect();
    for record in raw.records {
        let id = MetricId::new(record.metric);
        if let Some(slot) = grouped.get_mut(&id) {
            slot.push((record.timestamp, record.value));
        }
    }
    let mut out = BTreeMap::new();
    for (id, mut pairs) in grouped {
        if pairs.is_empty() {
            return Err(IngestError::NoData(id));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite timestamps"));
        out.insert(id, pairs.into_iter().map(|(_, v)| v).collect());
    }
    Ok(out)
}

/// Renders one period of a window in the CSV ingestion format, metrics in
/// catalog order, timestamps starting at `base_ts` on the window's step.
pub fn window_period_to_csv<T: Scalar>(
    window: &PairedWindow<T>,
    period: crate::model::Period,
    base_ts: f64,
) -> String {
    let mut out = String::from("metric,timestamp,value\n");
    for id in window.catalog().ids() {
        let values = match period {
            crate::model::Period::Faulty => window.faulty(id).unwrap(),
            crate::model::Period::Normal => window.normal(id).unwrap(),
        };
        for (i, value) in values.iter().enumerate() {
            let ts = base_ts + i as f64 * window.step_seconds();
            let v = value.to_f64().unwrap();
            let _ = writeln!(out, "{},{},{}", id, ts, v);
        }
    }
    out
}
