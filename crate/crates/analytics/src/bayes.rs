//! Gaussian naive Bayes for two classes.

use crate::{AnalyticsError, Result};

/// Variances are floored at this fraction of the largest feature variance.
const VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    /// Index 0 for `false`, 1 for `true`.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn train_naive_bayes(x: &[Vec<f64>], labels: &[bool]) -> Result<NaiveBayes> {
    if x.len() != labels.len() {
        return Err(AnalyticsError::InvalidArgument(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    let count = [labels.iter().filter(|&&l| !l).count(), labels.iter().filter(|&&l| l).count()];
    if count.contains(&0) {
        return Err(AnalyticsError::SingleClass);
    }
    let width = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != width) {
        return Err(AnalyticsError::WidthMismatch { expected: width, got: r.len() });
    }
    let stats = |class: bool| {
        let rows: Vec<&Vec<f64>> = x.iter().zip(labels).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..width).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let var: Vec<f64> = (0..width)
            .map(|j| {
                if rows.len() < 2 {
                    return 0.0;
                }
                rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)
            })
            .collect();
        (mean, var)
    };
    let (m0, mut v0) = stats(false);
    let (m1, mut v1) = stats(true);
    let top = v0.iter().chain(&v1).fold(0.0f64, |a, &b| a.max(b));
    let floor = if top > 0.0 { VAR_FLOOR * top } else { VAR_FLOOR };
    for v in v0.iter_mut().chain(v1.iter_mut()) {
        *v = v.max(floor);
    }
    let n = labels.len() as f64;
    Ok(NaiveBayes {
        priors: [count[0] as f64 / n, count[1] as f64 / n],
        means: [m0, m1],
        variances: [v0, v1],
    })
}

impl NaiveBayes {
    pub fn width(&self) -> usize {
        self.means[0].len()
    }

    /// Unnormalized log posterior of each class.
    pub fn log_posterior(&self, row: &[f64]) -> [f64; 2] {
        let score = |c: usize| {
            let ll: f64 = row
                .iter()
                .zip(self.means[c].iter().zip(&self.variances[c]))
                .map(|(x, (m, v))| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
                .sum();
            self.priors[c].ln() + ll
        };
        [score(0), score(1)]
    }

    /// Ties go to `true`.
    pub fn predict_row(&self, row: &[f64]) -> bool {
        let [f, t] = self.log_posterior(row);
        t >= f
    }
}
