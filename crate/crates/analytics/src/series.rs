//! Per-parameter value series read from `*`-delimited machining CSV files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::{AnalyticsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MachiningSeries {
    pub log: String,
    /// Data rows in the file, parsable or not.
    pub rows: usize,
    /// Parameter id to values ordered by `(Id, ServerTimestamp, timestamp)`.
    pub series: BTreeMap<String, Vec<f64>>,
}

impl MachiningSeries {
    pub fn len_of(&self, parameter: &str) -> usize {
        self.series.get(parameter).map_or(0, Vec::len)
    }
}

/// Log id of `log<id>.csv`; other names are used as they are, minus extension.
pub fn log_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match stem.strip_prefix("log") {
        Some(id) if !id.is_empty() => id.to_string(),
        _ => stem,
    }
}

/// Reads one machining CSV. Rows whose value does not parse as a finite
/// number are skipped with a warning but still count towards `rows`.
pub fn load_series(path: &Path) -> Result<MachiningSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| AnalyticsError::io(path, e))?;
    parse_series(&log_id(path), &text).map_err(|m| AnalyticsError::format(path, m))
}

pub(crate) fn parse_series(log: &str, text: &str) -> std::result::Result<MachiningSeries, String> {
    let mut reader = csv::ReaderBuilder::new().delimiter(b'*').quoting(false).flexible(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or(format!("missing column `{name}`"));
    let (id, value, ts, server_ts) = (col("Id")?, col("value")?, col("timestamp")?, col("ServerTimestamp")?);

    let mut records: Vec<(String, String, String, String)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        records.push((get(id), get(server_ts), get(ts), get(value)));
    }
    let rows = records.len();
    // Stable, so equal keys keep file order.
    records.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut skipped = 0usize;
    for (id, _, _, value) in records {
        match value.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => series.entry(id).or_default().push(v),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("log {log}: {skipped} rows without a numeric value skipped");
    }
    Ok(MachiningSeries { log: log.to_string(), rows, series })
}

/// Loads files concurrently; output order follows `paths`.
pub fn load_series_files(paths: &[PathBuf]) -> Result<Vec<MachiningSeries>> {
    paths.par_iter().map(|p| load_series(p)).collect()
}

/// Indices of logs with at least `min_points` rows (more than, when not
/// `inclusive`).
pub fn filter_logs(logs: &[MachiningSeries], min_points: usize, inclusive: bool) -> Vec<usize> {
    logs.iter()
        .enumerate()
        .filter(|(_, s)| if inclusive { s.rows >= min_points } else { s.rows > min_points })
        .map(|(i, _)| i)
        .collect()
}

/// Parameters present in every log with at least `min_occurrence` values in
/// each, sorted.
pub fn select_parameters(logs: &[&MachiningSeries], min_occurrence: usize) -> Result<Vec<String>> {
    let Some((first, rest)) = logs.split_first() else {
        return Err(AnalyticsError::NoParameters { threshold: min_occurrence });
    };
    let mut common: BTreeSet<&String> = first.series.keys().collect();
    for log in rest {
        common.retain(|p| log.series.contains_key(*p));
    }
    let chosen: Vec<String> = common
        .into_iter()
        .filter(|p| logs.iter().all(|l| l.len_of(p) >= min_occurrence))
        .cloned()
        .collect();
    if chosen.is_empty() {
        return Err(AnalyticsError::NoParameters { threshold: min_occurrence });
    }
    Ok(chosen)
}
