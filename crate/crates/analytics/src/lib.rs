//! Statistics over machining data: series loading and windowing, feature
//! matrices, measurement tables and labels, support vector machines, naive
//! Bayes, clustering, and random-forest feature selection.
//!
//! Everything randomized takes an explicit seed; equal inputs and seeds give
//! bit-identical results regardless of thread count.

pub mod bayes;
pub mod cluster;
pub mod features;
pub mod forest;
pub mod labels;
pub mod measurement;
pub mod model;
pub mod series;
pub mod svm;

pub use bayes::{train_naive_bayes, NaiveBayes};
pub use cluster::{
    cluster_accuracy, hierarchical_cluster, kmeans_cluster, scree, silhouette, wss, ClusterAccuracy, ClusterMethod,
    ClusteringResult, Linkage, Silhouette,
};
pub use features::{build_feature_matrix, window_indices, window_values, FeatureMatrix, WindowPosition, WindowSpec};
pub use forest::{rfe_select, ForestParams, RandomForest, RfeParams, RfeResult, RfeRow};
pub use labels::{split_train_test, LabelVector, Split};
pub use measurement::{apply_measurement_shift, measurement_stats, LabelSource, MeasurementStats, MeasurementTable};
pub use model::{predict, ClassifierModel, Prediction};
pub use series::{filter_logs, load_series, load_series_files, select_parameters, MachiningSeries};
pub use svm::{train_svm, Kernel, Svm, SvmParams};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("no parameter occurs at least {threshold} times in every log; lower the threshold")]
    NoParameters { threshold: usize },
    #[error("log {log}, parameter {parameter}: window needs positions {first}..={last} of {len}")]
    Window { log: String, parameter: String, first: i64, last: i64, len: usize },
    #[error("log {log} has no values for parameter {parameter}")]
    MissingParameter { log: String, parameter: String },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("row has {got} features, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl AnalyticsError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AnalyticsError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn format(path: &Path, message: impl ToString) -> Self {
        AnalyticsError::Format { path: path.display().to_string(), message: message.to_string() }
    }
}

pub type Result<T, E = AnalyticsError> = std::result::Result<T, E>;

/// Squared Euclidean distance.
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
