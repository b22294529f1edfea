//! Synthetic shop-floor inputs shared by the CLI test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LOG_HEADER: &str =
    "Id*source*name*description*path*value*timestamp*StatusCode*ServerTimestamp*VariantType*ClientHandle";

pub const MEASUREMENT_HEADER: &str = "Teil*Datum*MM1*MM2*MM3*Flaeche.1*Flaeche.2*Flaeche.3*\
    Kreis.19.2.1.Konzentrizitaet*Kreis.19.2.2.Konzentrizitaet*Zylinder.4.5.B.Durchmesser*\
    T4*T5*T6*T7*T8*T9*Bemerkung";

/// Runs the built binary with `SHOPFLOOR_OUT_DIR` cleared.
pub fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shopfloor"))
        .args(args)
        .env_remove("SHOPFLOOR_OUT_DIR")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

/// `log<id>.csv` with `points` readings for each parameter. Logs with
/// `shifted` set read about one unit higher on the first parameter.
pub fn write_log(dir: &Path, id: usize, params: &[&str], points: usize, shifted: bool, rng: &mut ChaCha8Rng) -> PathBuf {
    let mut text = String::from(LOG_HEADER);
    for (k, param) in params.iter().enumerate() {
        for j in 0..points {
            let ts = format!("2021-03-01T10:{:02}:{:02}.{:03}", j / 60, j % 60, id);
            let base = if k == 0 && shifted { 1.0 } else { 0.0 };
            let v = base + rng.gen_range(-0.3..0.3) + k as f64;
            text.push_str(&format!("\n{param}*plc*{param}*d*ns=2;s={param}*{v:.6}*{ts}*Good*{ts}*Double*{k}"));
        }
    }
    let path = dir.join(format!("log{id}.csv"));
    std::fs::write(&path, text).unwrap();
    path
}

/// `count` logs in `dir/logs`, every third one under the filter threshold,
/// and a `log,label` file whose labels follow the shifted parameter.
pub fn scenario1_inputs(dir: &Path, count: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logs = dir.join("logs");
    std::fs::create_dir_all(&logs).unwrap();
    let params = ["aaLoad/u1,1", "aaLoad/u1,2", "aaTorque/u1,1", "driveLoad"];
    let mut labels = String::from("log,label\n");
    for id in 1..=count {
        let label = rng.gen_bool(0.4);
        let points = if id % 3 == 0 { 20 } else { 100 + rng.gen_range(0..20) };
        write_log(&logs, id, &params, points, label, &mut rng);
        labels.push_str(&format!("{id},{}\n", if label { "TRUE" } else { "FALSE" }));
    }
    let labels_path = dir.join("labels.csv");
    std::fs::write(&labels_path, labels).unwrap();
    (logs, labels_path)
}

/// A measuring file with `rows` parts; result columns pass with the given
/// probability, MM1 missing for every tenth part.
pub fn measurement_text(rows: usize, pass: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from(MEASUREMENT_HEADER);
    for r in 1..=rows {
        text.push_str(&format!("\n{r}*2021-03-{:02}", 1 + r % 28));
        for c in 0..15 {
            let cell = if c == 0 && r % 10 == 0 {
                "NA"
            } else if rng.gen_bool(pass) {
                "TRUE"
            } else {
                "FALSE"
            };
            text.push('*');
            text.push_str(cell);
        }
        text.push_str("*-");
    }
    text.push('\n');
    text
}

/// Logs plus a measuring file long enough for the scenario-2 shift.
pub fn scenario2_inputs(dir: &Path, count: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logs = dir.join("logs");
    std::fs::create_dir_all(&logs).unwrap();
    let params = ["aaLoad/u1,1", "aaTorque/u1,1", "driveLoad"];
    for id in 1..=count {
        let points = if id % 7 == 0 { 20 } else { 100 + rng.gen_range(0..30) };
        write_log(&logs, id, &params, points, rng.gen_bool(0.5), &mut rng);
    }
    let meas = dir.join("measurements.csv");
    std::fs::write(&meas, measurement_text(190, 0.75, seed)).unwrap();
    (logs, meas)
}
