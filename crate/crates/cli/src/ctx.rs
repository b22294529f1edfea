//! Run context: output placement, atomic writes, and the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use shopfloor_core::fsutil::write_atomic;

/// Exit code 1 for bad input, 2 for everything else.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

pub type Res<T> = Result<T, Failure>;

pub fn input(e: impl fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

pub fn internal(e: impl fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

impl From<shopfloor_analytics::AnalyticsError> for Failure {
    fn from(e: shopfloor_analytics::AnalyticsError) -> Self {
        Failure::Input(e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Tracks what a run reads and writes. Relative output paths resolve against
/// `out_dir`; relative input paths are taken as given.
pub struct Ctx {
    pub out_dir: PathBuf,
    pub seed: u64,
    command: String,
    args: Vec<String>,
    config: Map<String, Value>,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(PathBuf, String)>,
}

impl Ctx {
    pub fn new(out_dir: PathBuf, seed: u64, command: &str, args: Vec<String>) -> Self {
        Self { out_dir, seed, command: command.into(), args, config: Map::new(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn out(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.into(), value.into());
    }

    /// Reads an input and records its digest.
    pub fn read(&mut self, path: &Path) -> Res<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        if !self.inputs.iter().any(|(p, _)| p == path) {
            self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        }
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> Res<String> {
        String::from_utf8(self.read(path)?).map_err(|_| input(format!("{}: not UTF-8", path.display())))
    }

    /// Records an input read elsewhere.
    pub fn note_input(&mut self, path: &Path) -> Res<()> {
        self.read(path).map(|_| ())
    }

    /// Writes atomically, creating parent directories.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Res<PathBuf> {
        let path = self.out(path);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))?;
        }
        write_atomic(&path, bytes).map_err(|e| internal(format!("{}: {e}", path.display())))?;
        self.outputs.retain(|(p, _)| *p != path);
        self.outputs.push((path.clone(), sha256_hex(bytes)));
        Ok(path)
    }

    /// Writes the manifest at `path` (resolved like outputs). Output paths in
    /// it are relative to the manifest's directory when possible, so the
    /// manifest does not change with the output location.
    pub fn finish(&mut self, path: &Path) -> Res<()> {
        let path = self.out(path);
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let entry = |p: &Path, digest: &str, rel: bool| {
            let shown = if rel { p.strip_prefix(&base).unwrap_or(p) } else { p };
            json!({ "path": shown.display().to_string(), "sha256": digest })
        };
        let manifest = json!({
            "tool": concat!("shopfloor ", env!("CARGO_PKG_VERSION")),
            "command": self.command.clone(),
            "args": self.args.clone(),
            "seed": self.seed,
            "config": Value::Object(self.config.clone()),
            "inputs": self.inputs.iter().map(|(p, d)| entry(p, d, false)).collect::<Vec<_>>(),
            "outputs": self.outputs.iter().map(|(p, d)| entry(p, d, true)).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(internal)?;
        text.push('\n');
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))?;
        }
        write_atomic(&path, text.as_bytes()).map_err(|e| internal(format!("{}: {e}", path.display())))
    }
}

/// `<path>.manifest.json`.
pub fn manifest_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// `dir/<stem><suffix>`, e.g. `out/result_scree.csv` for `out/result.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// CSV text from a header and rows of cells.
pub fn csv_text<I, R, S>(header: &[&str], rows: I) -> Res<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(r).map_err(internal)?;
    }
    String::from_utf8(w.into_inner().map_err(internal)?).map_err(internal)
}

/// Integers from `1..70`, `2,7,18` or a mix such as `1..5,10`.
pub fn parse_int_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| format!("bad range `{part}`"))?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range `{part}`"))?;
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad integer `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
