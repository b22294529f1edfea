//! Scenario presets and the full analysis pipeline behind `report`.

use std::path::{Path, PathBuf};

use shopfloor_analytics::{
    apply_measurement_shift, build_feature_matrix, filter_logs, load_series_files, rfe_select, select_parameters,
    split_train_test, ForestParams, Kernel, LabelSource, LabelVector, Linkage, MachiningSeries,
    MeasurementTable, RfeParams, SvmParams, WindowSpec,
};

use crate::analysis::{
    assignments_csv, clustering_summary, column_indices, match_measurements, run_classification, run_clustering,
    scree_csv, stats_csvs, svm_specs, Method, ModelSpec, METRIC_COLUMNS, PREDICTION_COLUMNS,
};
use crate::ctx::{csv_text, input, Ctx, Res};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub min_points: usize,
    /// `rows >= min_points` rather than `>`.
    pub inclusive: bool,
    pub windows: Vec<WindowSpec>,
    /// Minimum values per parameter in every log.
    pub threshold: usize,
    pub shift: Option<(usize, usize, usize)>,
    /// Measurement label sources; empty when labels come from a file.
    pub targets: Vec<String>,
    pub ks: Vec<usize>,
    pub scree_max: usize,
    /// Classify on the features selected by recursive elimination.
    pub rfe: bool,
    pub rfe_sizes: Option<Vec<usize>>,
    pub resamples: usize,
    pub trees: usize,
    pub restarts: usize,
    pub split: f64,
    pub expected_parameters: Option<usize>,
}

pub fn scenario_preset(name: &str) -> Result<Preset, String> {
    let w = |s: &str| s.parse::<WindowSpec>().expect("static window");
    let base = Preset {
        name: name.to_string(),
        min_points: 100,
        inclusive: true,
        windows: vec![],
        threshold: 10,
        shift: None,
        targets: vec![],
        ks: vec![],
        scree_max: 20,
        rfe: false,
        rfe_sizes: None,
        resamples: 10,
        trees: 500,
        restarts: 20,
        split: 0.75,
        expected_parameters: None,
    };
    match name {
        "scenario1" => Ok(Preset {
            windows: vec![w("last-10")],
            ks: vec![2, 7, 18],
            rfe: true,
            expected_parameters: Some(7),
            ..base
        }),
        "scenario2" => Ok(Preset {
            windows: vec![w("first-5"), w("middle-5"), w("last-5")],
            shift: Some((129, 180, 2)),
            targets: ["MM1", "Kreis.19.2.1.Konzentrizitaet", "Kreis.19.2.2.Konzentrizitaet", "Zylinder.4.5.B.Durchmesser"]
                .map(String::from)
                .to_vec(),
            ks: vec![2],
            expected_parameters: Some(14),
            ..base
        }),
        other => Err(format!("unknown preset `{other}` (expected scenario1 or scenario2)")),
    }
}

/// Numeric ids first, in numeric order, then the rest by name.
fn log_order(a: &Path, b: &Path) -> std::cmp::Ordering {
    let id = |p: &Path| shopfloor_analytics::series::log_id(p);
    let (ia, ib) = (id(a), id(b));
    match (ia.parse::<u64>(), ib.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then(ia.cmp(&ib)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        _ => ia.cmp(&ib),
    }
}

/// A directory yields its `*.csv` files; a file is a path list.
fn log_files(ctx: &mut Ctx, logs: &Path) -> Res<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = if logs.is_dir() {
        std::fs::read_dir(logs)
            .map_err(|e| input(format!("{}: {e}", logs.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect()
    } else {
        let text = ctx.read_text(logs)?;
        text.lines().map(str::trim).filter(|l| !l.is_empty()).map(PathBuf::from).collect()
    };
    files.sort_by(|a, b| log_order(a, b));
    if files.is_empty() {
        return Err(input(format!("{}: no machining logs", logs.display())));
    }
    Ok(files)
}

pub struct ReportInputs<'a> {
    pub logs: &'a Path,
    pub labels: Option<&'a Path>,
    pub measurements: Option<&'a Path>,
    pub out: &'a Path,
}

fn kernels() -> Vec<Kernel> {
    vec![Kernel::Linear, Kernel::Radial, Kernel::Sigmoid, Kernel::Polynomial]
}

pub fn report(ctx: &mut Ctx, preset: &Preset, inp: ReportInputs<'_>) -> Res<()> {
    let out = |name: &str| inp.out.join(name);
    let files = log_files(ctx, inp.logs)?;
    for f in &files {
        ctx.note_input(f)?;
    }
    let all = load_series_files(&files)?;
    let kept_idx = filter_logs(&all, preset.min_points, preset.inclusive);
    let kept: Vec<&MachiningSeries> = kept_idx.iter().map(|&i| &all[i]).collect();
    let logs_csv = csv_text(
        &["log", "rows", "kept"],
        all.iter().enumerate().map(|(i, s)| [s.log.clone(), s.rows.to_string(), kept_idx.contains(&i).to_string()]),
    )?;
    ctx.write(&out("logs.csv"), logs_csv.as_bytes())?;
    eprintln!("{} of {} logs kept", kept.len(), all.len());

    let params = select_parameters(&kept, preset.threshold)?;
    if let Some(e) = preset.expected_parameters.filter(|&e| e != params.len()) {
        log::warn!("{} parameters selected, the {} preset expects {e}", params.len(), preset.name);
    }
    let params_csv = csv_text(
        &["parameter", "min_count"],
        params.iter().map(|p| [p.clone(), kept.iter().map(|l| l.len_of(p)).min().unwrap_or(0).to_string()]),
    )?;
    ctx.write(&out("parameters.csv"), params_csv.as_bytes())?;

    let log_names: Vec<String> = kept.iter().map(|l| l.log.clone()).collect();
    let targets = labels_for(ctx, preset, &inp, &log_names)?;
    let mut label_rows = Vec::new();
    for (i, log) in log_names.iter().enumerate() {
        let mut row = vec![log.clone()];
        row.extend(targets.iter().map(|(_, v)| v[i].map(|b| b.to_string()).unwrap_or_default()));
        label_rows.push(row);
    }
    let mut header = vec!["log"];
    header.extend(targets.iter().map(|(t, _)| t.as_str()));
    ctx.write(&out("labels.csv"), csv_text(&header, label_rows)?.as_bytes())?;

    let mut specs = svm_specs(&kernels(), &SvmParams::default());
    specs.push(ModelSpec::NaiveBayes);
    for &window in &preset.windows {
        let tag = window.to_string();
        let m = build_feature_matrix(&kept, &params, window)?;
        ctx.write(&out(&format!("features_{tag}.csv")), m.to_csv().as_bytes())?;

        let runs =
            run_clustering(&m.values, &[Method::Hclust, Method::Kmeans], &preset.ks, Linkage::Complete, ctx.seed, preset.restarts)?;
        ctx.write(&out(&format!("clusters_{tag}.csv")), assignments_csv(&runs, &m.rows)?.as_bytes())?;
        ctx.write(&out(&format!("clustering_{tag}.csv")), clustering_summary(&runs, &targets)?.as_bytes())?;
        let scree = scree_csv(&m.values, preset.scree_max, ctx.seed, preset.restarts)?;
        ctx.write(&out(&format!("scree_{tag}.csv")), scree.as_bytes())?;

        let mut metrics = Vec::new();
        let mut predictions = Vec::new();
        let mut rfe_profile = Vec::new();
        let mut rfe_ranking = Vec::new();
        for (target, labels) in &targets {
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
            let sub = m.select_rows(&rows);
            let y: Vec<bool> = rows.iter().map(|&i| labels[i].expect("filtered")).collect();
            let sub = if preset.rfe {
                let params = RfeParams {
                    sizes: preset.rfe_sizes.clone().unwrap_or_default(),
                    resamples: preset.resamples,
                    forest: ForestParams { trees: preset.trees, seed: ctx.seed, ..ForestParams::default() },
                };
                let r = rfe_select(&sub, &y, &params)?;
                for p in &r.profile {
                    rfe_profile.push([
                        target.clone(),
                        p.size.to_string(),
                        p.rmse.to_string(),
                        p.rmse_sd.to_string(),
                        (p.size == r.best_size).to_string(),
                    ]);
                }
                for (i, (f, imp)) in r.ranking.iter().zip(&r.importance).enumerate() {
                    rfe_ranking.push([target.clone(), (i + 1).to_string(), f.clone(), imp.to_string(), (i < r.best_size).to_string()]);
                }
                sub.select_columns(&column_indices(&sub, &r.selected))
            } else {
                sub
            };
            let split = split_train_test(sub.values.len(), preset.split, ctx.seed)?;
            let (mt, pr) = run_classification(&sub, &y, &split, &specs, std::slice::from_ref(target))?;
            metrics.extend(mt);
            predictions.extend(pr);
        }
        let with_target = |cols: &[&'static str]| -> Vec<&'static str> { std::iter::once("target").chain(cols.iter().copied()).collect() };
        ctx.write(&out(&format!("classification_{tag}.csv")), csv_text(&with_target(&METRIC_COLUMNS), metrics)?.as_bytes())?;
        ctx.write(
            &out(&format!("predictions_{tag}.csv")),
            csv_text(&with_target(&PREDICTION_COLUMNS), predictions)?.as_bytes(),
        )?;
        if preset.rfe {
            ctx.write(
                &out(&format!("rfe_{tag}.csv")),
                csv_text(&["target", "size", "rmse", "rmse_sd", "best"], rfe_profile)?.as_bytes(),
            )?;
            ctx.write(
                &out(&format!("rfe_ranking_{tag}.csv")),
                csv_text(&["target", "rank", "feature", "importance", "selected"], rfe_ranking)?.as_bytes(),
            )?;
        }
        eprintln!("window {tag}: {} x {} features", m.values.len(), m.width());
    }

    ctx.set("preset", preset.name.clone());
    ctx.set("min_points", preset.min_points);
    ctx.set("inclusive", preset.inclusive);
    ctx.set("windows", preset.windows.iter().map(ToString::to_string).collect::<Vec<_>>());
    ctx.set("threshold", preset.threshold);
    ctx.set("shift", preset.shift.map(|(a, b, c)| format!("{a}:{b}:{c}")));
    ctx.set("ks", preset.ks.clone());
    ctx.set("scree_max", preset.scree_max);
    ctx.set("rfe", preset.rfe);
    ctx.set("resamples", preset.resamples);
    ctx.set("trees", preset.trees);
    ctx.set("restarts", preset.restarts);
    ctx.set("split", preset.split);
    Ok(())
}

type Targets = Vec<(String, Vec<Option<bool>>)>;

/// Label columns aligned with `logs`: the spawn-derived label file, or the
/// preset's measurement targets.
fn labels_for(ctx: &mut Ctx, preset: &Preset, inp: &ReportInputs<'_>, logs: &[String]) -> Res<Targets> {
    if preset.targets.is_empty() {
        let path = inp.labels.ok_or_else(|| input(format!("preset {} needs --labels", preset.name)))?;
        let text = ctx.read_text(path)?;
        let lv = LabelVector::from_csv(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let by: std::collections::HashMap<&str, bool> =
            lv.logs.iter().map(String::as_str).zip(lv.values.iter().copied()).collect();
        let col: Vec<Option<bool>> = logs.iter().map(|l| by.get(l.as_str()).copied()).collect();
        for (l, v) in logs.iter().zip(&col) {
            if v.is_none() {
                log::warn!("log {l} has no label and is left out of classification");
            }
        }
        return Ok(vec![("label".into(), col)]);
    }
    let path = inp.measurements.ok_or_else(|| input(format!("preset {} needs --measurements", preset.name)))?;
    let text = ctx.read_text(path)?;
    let mut table = MeasurementTable::parse(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if let Some((from, to, offset)) = preset.shift {
        table = apply_measurement_shift(&table, from, to, offset)?;
    }
    let (kept, matched) = match_measurements(&table, logs);
    let (stats, confusion) = stats_csvs(&matched)?;
    ctx.write(&inp.out.join("stats.csv"), stats.as_bytes())?;
    ctx.write(&inp.out.join("confusion.csv"), confusion.as_bytes())?;
    eprintln!("{} of {} logs matched to measured parts", kept.len(), logs.len());
    let mut out = Vec::new();
    for t in &preset.targets {
        let source: LabelSource = t.parse()?;
        if let LabelSource::Test(name) = &source {
            if matched.column(name).is_none() {
                return Err(input(format!("{}: no measurement column `{name}`", path.display())));
            }
        }
        let mut col = vec![None; logs.len()];
        for (r, &i) in kept.iter().enumerate() {
            col[i] = matched.label(r, &source);
        }
        out.push((t.clone(), col));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let s1 = scenario_preset("scenario1").unwrap();
        assert_eq!(s1.windows, ["last-10".parse::<WindowSpec>().unwrap()]);
        assert_eq!((s1.min_points, s1.inclusive), (100, true));
        let s2 = scenario_preset("scenario2").unwrap();
        assert_eq!(s2.threshold, 10);
        assert_eq!(s2.shift, Some((129, 180, 2)));
        assert_eq!(s2.windows.len(), 3);
        assert!(scenario_preset("scenario3").is_err());
    }

    #[test]
    fn numeric_log_order() {
        let mut v: Vec<PathBuf> = ["log10.csv", "log2.csv", "logx.csv", "log1.csv"].iter().map(PathBuf::from).collect();
        v.sort_by(|a, b| log_order(a, b));
        assert_eq!(v, ["log1.csv", "log2.csv", "log10.csv", "logx.csv"].map(PathBuf::from));
    }
}
