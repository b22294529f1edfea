use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shopfloor_analytics::*;

const HEADER: &str = "Id*source*name*description*path*value*timestamp*StatusCode*ServerTimestamp*VariantType*ClientHandle";

/// One log with `points` rows per parameter; values encode `(log, slot)`.
fn write_log(dir: &std::path::Path, id: usize, params: &[&str], points: usize) -> PathBuf {
    let mut text = String::from(HEADER);
    for p in params {
        for j in 0..points {
            let ts = format!("2020-01-01T00:{:02}:{:02}", j / 60, j % 60);
            text.push_str(&format!("\n{p}*src*n*d*path*{}*{ts}*0*{ts}*Double*1", id as f64 * 1000.0 + j as f64));
        }
    }
    let path = dir.join(format!("log{id}.csv"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn files_to_feature_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let paths = vec![
        write_log(dir.path(), 1, &["p/a", "p/b"], 60),
        write_log(dir.path(), 2, &["p/a", "p/b"], 50),
        write_log(dir.path(), 3, &["p/a"], 20),
    ];
    let logs = load_series_files(&paths).unwrap();
    assert_eq!(logs.iter().map(|l| l.log.as_str()).collect::<Vec<_>>(), ["1", "2", "3"]);
    let kept = filter_logs(&logs, 100, true);
    assert_eq!(kept, [0, 1]);
    assert_eq!(filter_logs(&logs, 100, false), [0]);
    let chosen: Vec<&MachiningSeries> = kept.iter().map(|&i| &logs[i]).collect();
    let params = select_parameters(&chosen, 10).unwrap();
    assert_eq!(params, ["p/a", "p/b"]);
    assert!(matches!(select_parameters(&chosen, 61), Err(AnalyticsError::NoParameters { threshold: 61 })));

    let spec: WindowSpec = "last-3".parse().unwrap();
    let m = build_feature_matrix(&chosen, &params, spec).unwrap();
    assert_eq!(m.columns, ["p/a1", "p/a2", "p/a3", "p/b1", "p/b2", "p/b3"]);
    assert_eq!(m.values[1], [2047.0, 2048.0, 2049.0, 2047.0, 2048.0, 2049.0]);
    let again = build_feature_matrix(&chosen, &params, spec).unwrap();
    assert_eq!(m.to_csv(), again.to_csv());

    let mid = build_feature_matrix(&chosen, &params, "middle-5".parse().unwrap()).unwrap();
    // n = 60: round(30) - 2 = 28, so slots 28..=32.
    assert_eq!(mid.values[0][..5], [1027.0, 1028.0, 1029.0, 1030.0, 1031.0]);
}

#[test]
fn rfe_ranks_the_deciding_feature_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100;
    let values: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let labels: Vec<bool> = values.iter().map(|r| r[0] > 0.4).collect();
    let m = FeatureMatrix {
        rows: (0..n).map(|i| i.to_string()).collect(),
        columns: (1..=6).map(|j| format!("x{j}")).collect(),
        values,
    };
    let params = RfeParams {
        sizes: vec![1, 2, 4, 6],
        resamples: 4,
        forest: ForestParams { trees: 80, seed: 3, ..ForestParams::default() },
    };
    let r = rfe_select(&m, &labels, &params).unwrap();
    assert_eq!(r.ranking[0], "x1");
    assert!(r.importance.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(r, rfe_select(&m, &labels, &params).unwrap());
}

#[test]
fn rfe_on_random_labels_reports_a_profile() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 60;
    let m = FeatureMatrix {
        rows: (0..n).map(|i| i.to_string()).collect(),
        columns: (1..=4).map(|j| format!("x{j}")).collect(),
        values: (0..n).map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
    };
    let labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let params = RfeParams {
        sizes: vec![1, 2, 3, 4],
        resamples: 4,
        forest: ForestParams { trees: 50, seed: 1, ..ForestParams::default() },
    };
    let r = rfe_select(&m, &labels, &params).unwrap();
    // Uninformative features: every size sits near the coin-flip RMSE.
    assert!(r.profile.iter().all(|p| p.rmse > 0.4 && p.rmse < 0.7), "{:?}", r.profile);
}
