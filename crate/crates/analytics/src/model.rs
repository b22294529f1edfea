//! Trained classifiers behind one prediction interface.

use crate::bayes::NaiveBayes;
use crate::svm::Svm;
use crate::{AnalyticsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Svm(Svm),
    NaiveBayes(NaiveBayes),
}

impl ClassifierModel {
    pub fn width(&self) -> usize {
        match self {
            Self::Svm(m) => m.width(),
            Self::NaiveBayes(m) => m.width(),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> bool {
        match self {
            Self::Svm(m) => m.predict_row(row),
            Self::NaiveBayes(m) => m.predict_row(row),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub predictions: Vec<bool>,
    /// Fraction correct, when labels were given and rows exist.
    pub accuracy: Option<f64>,
}

pub fn predict(model: &ClassifierModel, rows: &[Vec<f64>], labels: Option<&[bool]>) -> Result<Prediction> {
    if let Some(r) = rows.iter().find(|r| r.len() != model.width()) {
        return Err(AnalyticsError::WidthMismatch { expected: model.width(), got: r.len() });
    }
    if let Some(l) = labels.filter(|l| l.len() != rows.len()) {
        return Err(AnalyticsError::InvalidArgument(format!("{} rows but {} labels", rows.len(), l.len())));
    }
    let predictions: Vec<bool> = rows.iter().map(|r| model.predict_row(r)).collect();
    let accuracy = labels.filter(|l| !l.is_empty()).map(|l| {
        l.iter().zip(&predictions).filter(|(a, b)| a == b).count() as f64 / l.len() as f64
    });
    Ok(Prediction { predictions, accuracy })
}
