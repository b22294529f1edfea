//! Clustering, classification, feature selection and measurement statistics,
//! shared by the single-step subcommands and the scenario reports.

use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;
use serde_json::{json, Value};
use shopfloor_analytics::{
    apply_measurement_shift, cluster_accuracy, hierarchical_cluster, kmeans_cluster, measurement_stats, predict,
    rfe_select, scree, silhouette, split_train_test, train_naive_bayes, train_svm, ClassifierModel,
    ClusteringResult, FeatureMatrix, ForestParams, Kernel, LabelSource, LabelVector, Linkage, MeasurementTable,
    RfeParams, RfeResult, Silhouette, Split, SvmParams,
};

use crate::ctx::{csv_text, input, manifest_for, sibling, Ctx, Res};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Hclust,
    Kmeans,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Hclust => "hclust",
            Method::Kmeans => "kmeans",
        }
    }
}

pub struct ClusterRun {
    pub method: Method,
    pub result: ClusteringResult,
    /// `None` for a single cluster.
    pub silhouette: Option<Silhouette>,
}

/// Every method at every `k`; values of `k` above the row count are skipped.
pub fn run_clustering(
    values: &[Vec<f64>],
    methods: &[Method],
    ks: &[usize],
    linkage: Linkage,
    seed: u64,
    restarts: usize,
) -> Res<Vec<ClusterRun>> {
    let ks: Vec<usize> = ks
        .iter()
        .copied()
        .filter(|&k| {
            let ok = k >= 1 && k <= values.len();
            if !ok {
                log::warn!("k = {k} skipped for {} rows", values.len());
            }
            ok
        })
        .collect();
    let jobs: Vec<(Method, usize)> = methods.iter().flat_map(|&m| ks.iter().map(move |&k| (m, k))).collect();
    jobs.par_iter()
        .map(|&(method, k)| {
            let result = match method {
                Method::Hclust => hierarchical_cluster(values, k, linkage)?,
                Method::Kmeans => kmeans_cluster(values, k, seed, restarts)?,
            };
            let silhouette = (k > 1).then(|| silhouette(values, &result.assignments)).transpose()?;
            Ok(ClusterRun { method, result, silhouette })
        })
        .collect()
}

pub fn assignments_csv(runs: &[ClusterRun], logs: &[String]) -> Res<String> {
    let mut rows = Vec::new();
    for run in runs {
        for (i, log) in logs.iter().enumerate() {
            rows.push(vec![
                run.method.name().to_string(),
                run.result.k.to_string(),
                log.clone(),
                (run.result.assignments[i] + 1).to_string(),
                run.silhouette.as_ref().map(|s| s.widths[i].to_string()).unwrap_or_default(),
            ]);
        }
    }
    csv_text(&["method", "k", "log", "cluster", "silhouette"], rows)
}

/// Per run: WSS, average silhouette, and majority-label accuracy for each
/// label set (`true` wins ties).
pub fn clustering_summary(runs: &[ClusterRun], targets: &[(String, Vec<Option<bool>>)]) -> Res<String> {
    let mut header = vec!["method".to_string(), "k".into(), "wss".into(), "average_silhouette".into()];
    for (t, _) in targets {
        header.push(format!("accuracy_{t}"));
        header.push(format!("ties_{t}"));
    }
    let mut rows = Vec::new();
    for run in runs {
        let mut row = vec![
            run.method.name().to_string(),
            run.result.k.to_string(),
            run.result.wss.to_string(),
            run.silhouette.as_ref().map(|s| s.average.to_string()).unwrap_or_default(),
        ];
        for (_, labels) in targets {
            let (a, l): (Vec<usize>, Vec<bool>) =
                run.result.assignments.iter().zip(labels).filter_map(|(&a, l)| l.map(|l| (a, l))).unzip();
            match cluster_accuracy(&a, &l) {
                Ok(acc) => {
                    row.push(acc.accuracy.to_string());
                    row.push(acc.ties.len().to_string());
                }
                Err(_) => row.extend([String::new(), String::new()]),
            }
        }
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_text(&header, rows)
}

pub fn scree_csv(values: &[Vec<f64>], k_max: usize, seed: u64, restarts: usize) -> Res<String> {
    let curve = scree(values, k_max.min(values.len()), seed, restarts)?;
    csv_text(&["k", "wss"], curve.iter().map(|r| [r.k.to_string(), r.wss.to_string()]))
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Svm(SvmParams),
    NaiveBayes,
}

impl ModelSpec {
    fn describe(&self) -> [String; 6] {
        match self {
            ModelSpec::Svm(p) => [
                "svm".into(),
                p.kernel.to_string(),
                p.cost.to_string(),
                p.gamma.map(|g| g.to_string()).unwrap_or_default(),
                p.degree.to_string(),
                p.coef0.to_string(),
            ],
            ModelSpec::NaiveBayes => ["naive_bayes".into(), String::new(), String::new(), String::new(), String::new(), String::new()],
        }
    }
}

pub const METRIC_COLUMNS: [&str; 14] = [
    "model",
    "kernel",
    "cost",
    "gamma",
    "degree",
    "coef0",
    "support_vectors",
    "kkt_residual",
    "train_n",
    "test_n",
    "train_accuracy",
    "test_accuracy",
    "test_majority_rate",
    "test_predicted_true",
];

pub const PREDICTION_COLUMNS: [&str; 6] = ["model", "kernel", "log", "set", "label", "prediction"];

type Row = Vec<String>;

/// Metric rows and prediction rows, each prefixed with `prefix`.
pub fn run_classification(
    m: &FeatureMatrix,
    y: &[bool],
    split: &Split,
    specs: &[ModelSpec],
    prefix: &[String],
) -> Res<(Vec<Row>, Vec<Row>)> {
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<bool>) {
        (idx.iter().map(|&i| m.values[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (train_x, train_y) = pick(&split.train);
    let (test_x, test_y) = pick(&split.test);
    let fitted: Vec<(ClassifierModel, [String; 2])> = specs
        .par_iter()
        .map(|spec| -> Res<_> {
            Ok(match spec {
                ModelSpec::Svm(p) => {
                    let svm = train_svm(&train_x, &train_y, p)?;
                    let extra = [svm.support_count().to_string(), svm.kkt_residual.to_string()];
                    (ClassifierModel::Svm(svm), extra)
                }
                ModelSpec::NaiveBayes => {
                    (ClassifierModel::NaiveBayes(train_naive_bayes(&train_x, &train_y)?), [String::new(), String::new()])
                }
            })
        })
        .collect::<Res<_>>()?;
    let true_rate = |v: &[bool]| v.iter().filter(|&&b| b).count() as f64 / v.len().max(1) as f64;
    let mut metrics = Vec::new();
    let mut predictions = Vec::new();
    for (spec, (model, extra)) in specs.iter().zip(fitted) {
        let mut d = spec.describe();
        if let ClassifierModel::Svm(svm) = &model {
            d[3] = svm.gamma.to_string();
        }
        let train = predict(&model, &train_x, Some(&train_y))?;
        let test = predict(&model, &test_x, Some(&test_y))?;
        let acc = |p: &shopfloor_analytics::Prediction| p.accuracy.map(|a| a.to_string()).unwrap_or_default();
        let rate = true_rate(&test_y);
        let mut row = prefix.to_vec();
        row.extend(d.iter().cloned());
        row.extend(extra);
        row.extend([
            train_x.len().to_string(),
            test_x.len().to_string(),
            acc(&train),
            acc(&test),
            if test_y.is_empty() { String::new() } else { rate.max(1.0 - rate).to_string() },
            test.predictions.iter().filter(|&&p| p).count().to_string(),
        ]);
        metrics.push(row);
        for (set, idx, p) in [("train", &split.train, &train), ("test", &split.test, &test)] {
            for (&i, &pred) in idx.iter().zip(&p.predictions) {
                let mut row = prefix.to_vec();
                row.extend([d[0].clone(), d[1].clone(), m.rows[i].clone(), set.into(), y[i].to_string(), pred.to_string()]);
                predictions.push(row);
            }
        }
    }
    Ok((metrics, predictions))
}

pub fn rfe_csvs(result: &RfeResult) -> Res<(String, String)> {
    let profile = csv_text(
        &["size", "rmse", "rmse_sd", "best"],
        result.profile.iter().map(|r| {
            [r.size.to_string(), r.rmse.to_string(), r.rmse_sd.to_string(), (r.size == result.best_size).to_string()]
        }),
    )?;
    let ranking = csv_text(
        &["rank", "feature", "importance", "selected"],
        result.ranking.iter().zip(&result.importance).enumerate().map(|(i, (f, imp))| {
            [(i + 1).to_string(), f.clone(), imp.to_string(), (i < result.best_size).to_string()]
        }),
    )?;
    Ok((profile, ranking))
}

/// Column indices of `names` in `m`, in the order given.
pub fn column_indices(m: &FeatureMatrix, names: &[String]) -> Vec<usize> {
    names.iter().filter_map(|n| m.columns.iter().position(|c| c == n)).collect()
}

pub fn stats_csvs(table: &MeasurementTable) -> Res<(String, String)> {
    let s = measurement_stats(table);
    let n = table.rows.len();
    let mut rows: Vec<[String; 3]> = s.tests.iter().map(|(t, p, f)| [t.clone(), p.to_string(), f.to_string()]).collect();
    rows.push(["automatic_acceptance".into(), s.automatic_pass.to_string(), (n - s.automatic_pass).to_string()]);
    rows.push(["manual_acceptance".into(), s.manual_pass.to_string(), (n - s.manual_pass).to_string()]);
    let stats = csv_text(&["test", "pass", "fail"], rows)?;
    let mut cells = Vec::new();
    for auto in [true, false] {
        for manual in [true, false] {
            cells.push([auto.to_string(), manual.to_string(), s.confusion[usize::from(auto)][usize::from(manual)].to_string()]);
        }
    }
    Ok((stats, csv_text(&["automatic", "manual", "count"], cells)?))
}

/// Measurement rows of numbered logs: log `i` is row `i` (1-based). Logs
/// without a row or without a manual result are left out with a warning.
pub fn match_measurements(table: &MeasurementTable, logs: &[String]) -> (Vec<usize>, MeasurementTable) {
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        match log.parse::<usize>() {
            Ok(id) if id >= 1 && id <= table.rows.len() && table.has_manual(id - 1) => {
                kept.push(i);
                rows.push(table.rows[id - 1].clone());
            }
            Ok(id) if id >= 1 && id <= table.rows.len() => log::warn!("log {log}: no manual measurement, left out"),
            _ => log::warn!("log {log}: no measurement row, left out"),
        }
    }
    (kept, MeasurementTable { names: table.names.clone(), rows })
}

pub fn read_shift(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else { return Err(format!("shift `{s}`, expected from:to:offset")) };
    let n = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("shift `{s}`, expected from:to:offset"));
    Ok((n(a)?, n(b)?, n(c)?))
}

fn read_matrix(ctx: &mut Ctx, path: &Path) -> Res<FeatureMatrix> {
    let text = ctx.read_text(path)?;
    FeatureMatrix::from_csv(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_labels(ctx: &mut Ctx, path: &Path) -> Res<LabelVector> {
    let text = ctx.read_text(path)?;
    LabelVector::from_csv(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

pub struct ClusterArgs<'a> {
    pub features: &'a Path,
    pub methods: &'a [Method],
    pub ks: &'a [usize],
    pub linkage: Linkage,
    pub restarts: usize,
    pub labels: Option<&'a Path>,
    pub scree: Option<usize>,
    pub out: &'a Path,
}

pub fn cluster(ctx: &mut Ctx, a: ClusterArgs<'_>) -> Res<()> {
    let m = read_matrix(ctx, a.features)?;
    if m.values.is_empty() {
        return Err(input(format!("{}: no rows", a.features.display())));
    }
    let runs = run_clustering(&m.values, a.methods, a.ks, a.linkage, ctx.seed, a.restarts)?;
    let targets = match a.labels {
        Some(p) => {
            let l = read_labels(ctx, p)?;
            let by: std::collections::HashMap<&str, bool> =
                l.logs.iter().map(String::as_str).zip(l.values.iter().copied()).collect();
            vec![("label".to_string(), m.rows.iter().map(|r| by.get(r.as_str()).copied()).collect())]
        }
        None => Vec::new(),
    };
    ctx.write(&sibling(a.out, ".csv"), assignments_csv(&runs, &m.rows)?.as_bytes())?;
    ctx.write(&sibling(a.out, "_summary.csv"), clustering_summary(&runs, &targets)?.as_bytes())?;
    let scree_rows = match a.scree {
        Some(k) => {
            let text = scree_csv(&m.values, k, ctx.seed, a.restarts)?;
            ctx.write(&sibling(a.out, "_scree.csv"), text.as_bytes())?;
            Some(text)
        }
        None => None,
    };
    let json_runs: Vec<Value> = runs
        .iter()
        .map(|r| {
            let mut sizes = vec![0usize; r.result.k];
            r.result.assignments.iter().for_each(|&c| sizes[c] += 1);
            let mut v = json!({
                "method": r.method.name(),
                "k": r.result.k,
                "wss": r.result.wss,
                "average_silhouette": r.silhouette.as_ref().map(|s| s.average),
                "cluster_sizes": sizes,
                "assignments": r.result.assignments.iter().map(|c| c + 1).collect::<Vec<_>>(),
            });
            if let Some((_, labels)) = targets.first() {
                let (asg, l): (Vec<usize>, Vec<bool>) =
                    r.result.assignments.iter().zip(labels).filter_map(|(&c, l)| l.map(|l| (c, l))).unzip();
                if let Ok(acc) = cluster_accuracy(&asg, &l) {
                    v["accuracy"] = json!(acc.accuracy);
                    v["cluster_labels"] = json!(acc.cluster_labels);
                    v["tied_clusters"] = json!(acc.ties.iter().map(|c| c + 1).collect::<Vec<_>>());
                }
            }
            v
        })
        .collect();
    let doc = json!({ "logs": m.rows, "seed": ctx.seed, "linkage": a.linkage.to_string(), "runs": json_runs });
    let mut text = serde_json::to_string_pretty(&doc).map_err(crate::ctx::internal)?;
    text.push('\n');
    let written = ctx.write(a.out, text.as_bytes())?;
    eprintln!("{}: {} runs{}", written.display(), runs.len(), if scree_rows.is_some() { " plus scree" } else { "" });
    ctx.set("ks", a.ks.to_vec());
    ctx.set("methods", a.methods.iter().map(|m| m.name()).collect::<Vec<_>>());
    ctx.set("restarts", a.restarts);
    ctx.finish(&manifest_for(a.out))
}

pub struct ClassifyArgs<'a> {
    pub features: &'a Path,
    pub labels: &'a Path,
    pub specs: Vec<ModelSpec>,
    pub split: f64,
    pub out: &'a Path,
}

pub fn classify(ctx: &mut Ctx, a: ClassifyArgs<'_>) -> Res<()> {
    let m = read_matrix(ctx, a.features)?;
    let labels = read_labels(ctx, a.labels)?;
    let (m, y) = labels.align(&m);
    let split = split_train_test(m.values.len(), a.split, ctx.seed)?;
    let (metrics, predictions) = run_classification(&m, &y, &split, &a.specs, &[])?;
    let written = ctx.write(a.out, csv_text(&METRIC_COLUMNS, &metrics)?.as_bytes())?;
    ctx.write(&sibling(a.out, "_predictions.csv"), csv_text(&PREDICTION_COLUMNS, &predictions)?.as_bytes())?;
    eprintln!("{}: {} models, {}/{} train/test rows", written.display(), metrics.len(), split.train.len(), split.test.len());
    ctx.set("split", a.split);
    ctx.finish(&manifest_for(a.out))
}

pub struct RfeArgs<'a> {
    pub features: &'a Path,
    pub labels: &'a Path,
    pub sizes: Option<Vec<usize>>,
    pub resamples: usize,
    pub trees: usize,
    pub out: &'a Path,
    pub selected_out: Option<&'a Path>,
}

pub fn rfe(ctx: &mut Ctx, a: RfeArgs<'_>) -> Res<()> {
    let m = read_matrix(ctx, a.features)?;
    let labels = read_labels(ctx, a.labels)?;
    let (m, y) = labels.align(&m);
    let params = RfeParams {
        sizes: a.sizes.clone().unwrap_or_default(),
        resamples: a.resamples,
        forest: ForestParams { trees: a.trees, seed: ctx.seed, ..ForestParams::default() },
    };
    let result = rfe_select(&m, &y, &params)?;
    let (profile, ranking) = rfe_csvs(&result)?;
    let written = ctx.write(a.out, profile.as_bytes())?;
    ctx.write(&sibling(a.out, "_ranking.csv"), ranking.as_bytes())?;
    if let Some(p) = a.selected_out {
        let cols = column_indices(&m, &result.selected);
        ctx.write(p, m.select_columns(&cols).to_csv().as_bytes())?;
    }
    eprintln!("{}: best size {} of {}", written.display(), result.best_size, m.width());
    ctx.set("resamples", a.resamples);
    ctx.set("trees", a.trees);
    ctx.finish(&manifest_for(a.out))
}

pub struct StatsArgs<'a> {
    pub measurements: &'a Path,
    pub shift: Option<(usize, usize, usize)>,
    pub features: Option<&'a Path>,
    pub label: Option<LabelSource>,
    pub labels_out: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn stats(ctx: &mut Ctx, a: StatsArgs<'_>) -> Res<()> {
    let text = ctx.read_text(a.measurements)?;
    let mut table = MeasurementTable::parse(&text).map_err(|e| input(format!("{}: {e}", a.measurements.display())))?;
    if let Some((from, to, offset)) = a.shift {
        table = apply_measurement_shift(&table, from, to, offset)?;
    }
    let logs: Vec<String> = match a.features {
        Some(p) => read_matrix(ctx, p)?.rows,
        None => (1..=table.rows.len()).map(|i| i.to_string()).collect(),
    };
    let (kept, matched) = match_measurements(&table, &logs);
    let (stats, confusion) = stats_csvs(&matched)?;
    let written = ctx.write(a.out, stats.as_bytes())?;
    ctx.write(&sibling(a.out, "_confusion.csv"), confusion.as_bytes())?;
    if let (Some(source), Some(out)) = (&a.label, a.labels_out) {
        let mut lv = LabelVector::default();
        for (r, &i) in kept.iter().enumerate() {
            match matched.label(r, source) {
                Some(v) => lv.push(logs[i].clone(), v),
                None => log::warn!("log {}: no value for the label, left out", logs[i]),
            }
        }
        ctx.write(out, lv.to_csv().as_bytes())?;
    } else if a.label.is_some() != a.labels_out.is_some() {
        return Err(input("--label and --labels-out go together"));
    }
    eprintln!("{}: {} parts", written.display(), matched.rows.len());
    if let Some((f, t, o)) = a.shift {
        ctx.set("shift", format!("{f}:{t}:{o}"));
    }
    ctx.finish(&manifest_for(a.out))
}

/// One SVM per kernel with shared hyperparameters.
pub fn svm_specs(kernels: &[Kernel], base: &SvmParams) -> Vec<ModelSpec> {
    kernels.iter().map(|&k| ModelSpec::Svm(SvmParams { kernel: k, ..base.clone() })).collect()
}
