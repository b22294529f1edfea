//! Fixed-width windows over parameter series and the feature matrices built
//! from them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::series::MachiningSeries;
use crate::{AnalyticsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowPosition {
    First,
    Middle,
    Last,
}

impl FromStr for WindowPosition {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "middle" => Ok(Self::Middle),
            "last" => Ok(Self::Last),
            _ => Err(AnalyticsError::InvalidArgument(format!("window position `{s}`"))),
        }
    }
}

impl fmt::Display for WindowPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::First => "first",
            Self::Middle => "middle",
            Self::Last => "last",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub position: WindowPosition,
    pub k: usize,
}

impl FromStr for WindowSpec {
    type Err = AnalyticsError;

    /// `last-10`, `middle-5`, ...
    fn from_str(s: &str) -> Result<Self> {
        let bad = || AnalyticsError::InvalidArgument(format!("window `{s}`, expected <first|middle|last>-<k>"));
        let (pos, k) = s.split_once('-').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(Self { position: pos.parse()?, k })
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.position, self.k)
    }
}

/// Rounds half to even, like R's `round`.
fn round_half_even(x: f64) -> i64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 && r % 2.0 != 0.0 {
        (r - x.signum()) as i64
    } else {
        r as i64
    }
}

/// 1-based inclusive positions of the window in a series of length `n`; the
/// bounds may fall outside `1..=n`.
pub fn window_indices(n: usize, spec: WindowSpec) -> (i64, i64) {
    let (n, k) = (n as i64, spec.k as i64);
    match spec.position {
        WindowPosition::First => (1, k),
        WindowPosition::Last => (n - k + 1, n),
        // round(n/2) - 3 + j for k = 5.
        WindowPosition::Middle => {
            let first = round_half_even(n as f64 / 2.0) - k / 2;
            (first, first + k - 1)
        }
    }
}

pub fn window_values(log: &str, parameter: &str, values: &[f64], spec: WindowSpec) -> Result<Vec<f64>> {
    let (first, last) = window_indices(values.len(), spec);
    if first < 1 || last > values.len() as i64 {
        return Err(AnalyticsError::Window {
            log: log.into(),
            parameter: parameter.into(),
            first,
            last,
            len: values.len(),
        });
    }
    Ok(values[(first - 1) as usize..last as usize].to_vec())
}

/// Rows are logs; columns are `<parameter><j>` with `j = 1` the earliest slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            columns: self.columns.clone(),
            values: idx.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: self.rows.clone(),
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            values: self.values.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
        }
    }

    /// Comma-separated with a `log` key column; floats in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("log").chain(self.columns.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for (name, row) in self.rows.iter().zip(&self.values) {
            let cells = std::iter::once(name.clone()).chain(row.iter().map(|v| v.to_string()));
            w.write_record(cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 input")
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| e.to_string())?.clone();
        if header.get(0) != Some("log") {
            return Err("first column must be `log`".into());
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let (mut rows, mut values) = (Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            rows.push(rec[0].to_string());
            let row: std::result::Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
            let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
            if row.len() != columns.len() {
                return Err(format!("row {} has {} values, expected {}", i + 1, row.len(), columns.len()));
            }
            values.push(row);
        }
        Ok(FeatureMatrix { rows, columns, values })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AnalyticsError::io(path, e))?;
        Self::from_csv(&text).map_err(|m| AnalyticsError::format(path, m))
    }
}

pub fn build_feature_matrix(logs: &[&MachiningSeries], params: &[String], spec: WindowSpec) -> Result<FeatureMatrix> {
    let columns = params.iter().flat_map(|p| (1..=spec.k).map(move |j| format!("{p}{j}"))).collect();
    let mut values = Vec::with_capacity(logs.len());
    for log in logs {
        let mut row = Vec::with_capacity(params.len() * spec.k);
        for p in params {
            let series = log
                .series
                .get(p)
                .ok_or_else(|| AnalyticsError::MissingParameter { log: log.log.clone(), parameter: p.clone() })?;
            row.extend(window_values(&log.log, p, series, spec)?);
        }
        values.push(row);
    }
    Ok(FeatureMatrix { rows: logs.iter().map(|l| l.log.clone()).collect(), columns, values })
}
