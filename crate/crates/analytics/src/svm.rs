//! Soft-margin support vector classification solved by sequential minimal
//! optimization with second-order working-set selection.
//!
//! Dual: `min ½ αᵀQα − Σα` subject to `0 ≤ α ≤ C`, `yᵀα = 0`, where
//! `Q_ij = y_i y_j K(x_i, x_j)`. The solver stops when the maximal KKT
//! violation `max_{I_up} −y∇ − min_{I_low} −y∇` drops below the tolerance.

use std::fmt;
use std::str::FromStr;

use crate::{dist2, AnalyticsError, Result};

const TAU: f64 = 1e-12;

/// Relative margin under which working-set candidates count as tied; ties go
/// to the lowest index so that rounding noise cannot change the path.
const TIE: f64 = 1e-9;

fn beats(v: f64, best: f64) -> bool {
    v > best + TIE * best.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Linear,
    Radial,
    Polynomial,
    Sigmoid,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [Kernel::Linear, Kernel::Polynomial, Kernel::Radial, Kernel::Sigmoid];
}

impl FromStr for Kernel {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "radial" => Ok(Self::Radial),
            "polynomial" => Ok(Self::Polynomial),
            "sigmoid" => Ok(Self::Sigmoid),
            _ => Err(AnalyticsError::InvalidArgument(format!("kernel `{s}`"))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Radial => "radial",
            Self::Polynomial => "polynomial",
            Self::Sigmoid => "sigmoid",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub cost: f64,
    /// Defaults to `1 / features`.
    pub gamma: Option<f64>,
    pub degree: u32,
    pub coef0: f64,
    /// Standardize features with training means and standard deviations.
    pub scale: bool,
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { kernel: Kernel::Radial, cost: 1.0, gamma: None, degree: 3, coef0: 0.0, scale: true, tolerance: 1e-3 }
    }
}

/// Centering and unit-variance scaling; constant columns are only centered.
#[derive(Debug, Clone, PartialEq)]
struct Scaler {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Scaler {
    fn fit(x: &[Vec<f64>]) -> Self {
        let (n, d) = (x.len() as f64, x[0].len());
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let sd = (0..d)
            .map(|j| {
                if x.len() < 2 {
                    return 0.0;
                }
                let ss: f64 = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            })
            .collect();
        Self { mean, sd }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { v - m })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Svm {
    pub kernel: Kernel,
    pub cost: f64,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
    scaler: Option<Scaler>,
    support: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    coef: Vec<f64>,
    rho: f64,
    width: usize,
    /// Maximal KKT violation at termination.
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn kernel_value(kind: Kernel, gamma: f64, degree: u32, coef0: f64, a: &[f64], b: &[f64]) -> f64 {
    let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    match kind {
        Kernel::Linear => dot(),
        Kernel::Polynomial => (gamma * dot() + coef0).powi(degree as i32),
        Kernel::Radial => (-gamma * dist2(a, b)).exp(),
        Kernel::Sigmoid => (gamma * dot() + coef0).tanh(),
    }
}

impl Svm {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn support_count(&self) -> usize {
        self.support.len()
    }

    /// Positive values predict `true`.
    pub fn decision(&self, row: &[f64]) -> f64 {
        let row = match &self.scaler {
            Some(s) => s.apply(row),
            None => row.to_vec(),
        };
        let sum: f64 = self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * kernel_value(self.kernel, self.gamma, self.degree, self.coef0, sv, &row))
            .sum();
        sum - self.rho
    }

    pub fn predict_row(&self, row: &[f64]) -> bool {
        self.decision(row) > 0.0
    }
}

/// Trains a C-SVC with `true` as the positive class.
pub fn train_svm(x: &[Vec<f64>], labels: &[bool], params: &SvmParams) -> Result<Svm> {
    if x.len() != labels.len() {
        return Err(AnalyticsError::InvalidArgument(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(AnalyticsError::SingleClass);
    }
    let width = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != width) {
        return Err(AnalyticsError::WidthMismatch { expected: width, got: r.len() });
    }
    if params.cost.is_nan() || params.cost <= 0.0 {
        return Err(AnalyticsError::InvalidArgument(format!("cost {} must be positive", params.cost)));
    }
    let gamma = params.gamma.unwrap_or(1.0 / width.max(1) as f64);
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(AnalyticsError::InvalidArgument(format!("gamma {gamma} must be positive")));
    }
    let scaler = params.scale.then(|| Scaler::fit(x));
    let data: Vec<Vec<f64>> = match &scaler {
        Some(s) => x.iter().map(|r| s.apply(r)).collect(),
        None => x.to_vec(),
    };
    let n = data.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let k = |i: usize, j: usize| kernel_value(params.kernel, gamma, params.degree, params.coef0, &data[i], &data[j]);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = y[i] * y[j] * k(i, j);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let qd: Vec<f64> = (0..n).map(|i| q[i * n + i]).collect();
    let c = params.cost;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;
    let residual;

    loop {
        // First index: maximal violation in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && (i_sel.is_none() || beats(v, gmax)) {
                gmax = v;
                i_sel = Some(t);
            }
        }
        // Second index: largest objective decrease in I_low.
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
                if !low {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = qd[i] + qd[t] - 2.0 * y[i] * y[t] * q[i * n + t];
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if j_sel.is_none() || beats(-obj, -best) {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            residual = (gmax + gmax2).max(0.0);
            break;
        };
        if gmax + gmax2 < params.tolerance || iterations >= max_iter {
            residual = gmax + gmax2;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q[i * n + j];
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        // Values within rounding of a bound sit on it, so bound status does
        // not depend on the last ulp.
        for t in [i, j] {
            if alpha[t] <= c * TAU {
                alpha[t] = 0.0;
            } else if alpha[t] >= c * (1.0 - TAU) {
                alpha[t] = c;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[i * n + t] * di + q[j * n + t] * dj;
        }
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb, mut free, mut sum_free) = (f64::INFINITY, f64::NEG_INFINITY, 0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(Svm {
        kernel: params.kernel,
        cost: c,
        gamma,
        degree: params.degree,
        coef0: params.coef0,
        scaler,
        support: sv.iter().map(|&t| data[t].clone()).collect(),
        coef: sv.iter().map(|&t| alpha[t] * y[t]).collect(),
        rho,
        width,
        kkt_residual: residual,
        iterations,
    })
}
