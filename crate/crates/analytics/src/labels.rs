//! Boolean labels keyed by log id, and seeded train/test splits.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;
use crate::{AnalyticsError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector {
    pub logs: Vec<String>,
    pub values: Vec<bool>,
}

impl LabelVector {
    pub fn push(&mut self, log: impl Into<String>, value: bool) {
        self.logs.push(log.into());
        self.values.push(value);
    }

    pub fn counts(&self) -> (usize, usize) {
        let t = self.values.iter().filter(|&&v| v).count();
        (t, self.values.len() - t)
    }

    /// `log,label` with `true`/`false`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("log,label\n");
        for (l, v) in self.logs.iter().zip(&self.values) {
            out.push_str(&format!("{l},{v}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut out = LabelVector::default();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let (Some(log), Some(v)) = (rec.get(0), rec.get(1)) else {
                return Err(format!("row {}: expected `log,label`", i + 1));
            };
            let v = match v.trim() {
                "true" | "TRUE" | "True" | "T" | "1" => true,
                "false" | "FALSE" | "False" | "F" | "0" => false,
                other => return Err(format!("row {}: `{other}` is not a boolean", i + 1)),
            };
            out.push(log.trim(), v);
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AnalyticsError::io(path, e))?;
        Self::from_csv(&text).map_err(|m| AnalyticsError::format(path, m))
    }

    /// Matrix rows that have a label, with their labels in row order. Rows
    /// without one are dropped with a warning.
    pub fn align(&self, matrix: &FeatureMatrix) -> (FeatureMatrix, Vec<bool>) {
        let by_log: HashMap<&str, bool> = self.logs.iter().map(String::as_str).zip(self.values.iter().copied()).collect();
        let mut keep = Vec::new();
        let mut labels = Vec::new();
        for (i, log) in matrix.rows.iter().enumerate() {
            match by_log.get(log.as_str()) {
                Some(&v) => {
                    keep.push(i);
                    labels.push(v);
                }
                None => log::warn!("log {log} has no label and is left out"),
            }
        }
        (matrix.select_rows(&keep), labels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Ascending row indices.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Samples `round(ratio * n)` training rows uniformly without replacement.
pub fn split_train_test(n: usize, ratio: f64, seed: u64) -> Result<Split> {
    if n < 2 {
        return Err(AnalyticsError::InvalidArgument(format!("cannot split {n} rows")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(AnalyticsError::InvalidArgument(format!("split ratio {ratio} outside (0, 1)")));
    }
    let size = (ratio * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; n];
    for i in sample(&mut rng, n, size).into_iter() {
        in_train[i] = true;
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_train[i]);
    Ok(Split { train, test })
}
