//! Per-part quality measurements: three manual checks and a row of automatic
//! tests, with the derived acceptance flags.

use std::path::Path;
use std::str::FromStr;

use crate::{AnalyticsError, Result};

/// Columns of the measuring file that hold results (1-based, inclusive).
pub const RESULT_COLUMNS: (usize, usize) = (3, 17);

/// Leading automatic tests left out of automatic acceptance.
pub const SKIPPED_AUTOMATIC: usize = 3;

pub const MANUAL_COLUMNS: [&str; 3] = ["MM1", "MM2", "MM3"];

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTable {
    /// Names of the manual columns followed by the automatic tests.
    pub names: Vec<String>,
    /// One row per part; `None` where the result is missing or not boolean.
    pub rows: Vec<Vec<Option<bool>>>,
}

/// Parses like R's `as.logical` on text, plus `1`/`0`.
fn logical(s: &str) -> Option<bool> {
    match s.trim().trim_matches('"') {
        "TRUE" | "true" | "True" | "T" | "1" => Some(true),
        "FALSE" | "false" | "False" | "F" | "0" => Some(false),
        _ => None,
    }
}

/// Letters and digits kept, every other run of characters becomes one `.`,
/// so `Kreis 19,2-1` and `Kreis.19.2.1` compare equal.
fn normalize(name: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for c in name.trim().chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('.');
            }
            gap = false;
            out.push(c);
        } else {
            gap = true;
        }
    }
    out
}

impl MeasurementTable {
    /// Reads a `*`-delimited measuring file. Result columns are those in
    /// [`RESULT_COLUMNS`]; the manual ones are found by name, the rest are
    /// automatic tests in file order.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AnalyticsError::io(path, e))?;
        Self::parse(&text).map_err(|m| AnalyticsError::format(path, m))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut reader =
            csv::ReaderBuilder::new().delimiter(b'*').quoting(false).flexible(true).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let (lo, hi) = RESULT_COLUMNS;
        if header.len() < hi {
            return Err(format!("expected at least {hi} columns, found {}", header.len()));
        }
        let block: Vec<usize> = (lo - 1..hi).collect();
        let mut manual = Vec::new();
        for m in MANUAL_COLUMNS {
            let at = block.iter().copied().find(|&c| header[c].trim() == m).ok_or(format!("missing column `{m}`"))?;
            manual.push(at);
        }
        let order: Vec<usize> = manual.iter().copied().chain(block.into_iter().filter(|c| !manual.contains(c))).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            rows.push(order.iter().map(|&c| rec.get(c).and_then(logical)).collect());
        }
        Ok(Self { names: order.iter().map(|&c| header[c].trim().to_string()).collect(), rows })
    }

    pub fn manual(&self, row: usize) -> &[Option<bool>] {
        &self.rows[row][..MANUAL_COLUMNS.len()]
    }

    pub fn automatic(&self, row: usize) -> &[Option<bool>] {
        &self.rows[row][MANUAL_COLUMNS.len()..]
    }

    pub fn automatic_names(&self) -> &[String] {
        &self.names[MANUAL_COLUMNS.len()..]
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        let want = normalize(name);
        self.names.iter().position(|n| normalize(n) == want)
    }

    /// All automatic tests but the leading [`SKIPPED_AUTOMATIC`] pass; a
    /// missing result counts as a failure.
    pub fn automatic_acceptance(&self, row: usize) -> bool {
        self.automatic(row).iter().skip(SKIPPED_AUTOMATIC).all(|v| *v == Some(true))
    }

    pub fn manual_acceptance(&self, row: usize) -> bool {
        self.manual(row).iter().all(|v| *v == Some(true))
    }

    pub fn label(&self, row: usize, source: &LabelSource) -> Option<bool> {
        match source {
            LabelSource::Manual => Some(self.manual_acceptance(row)),
            LabelSource::Automatic => Some(self.automatic_acceptance(row)),
            LabelSource::Test(name) => self.column(name).and_then(|c| self.rows[row][c]),
        }
    }

    /// Parts with a recorded first manual measurement.
    pub fn has_manual(&self, row: usize) -> bool {
        self.rows[row][0].is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    /// All manual measurements pass.
    Manual,
    /// All automatic tests except the leading ones pass.
    Automatic,
    /// One named column.
    Test(String),
}

impl FromStr for LabelSource {
    type Err = AnalyticsError;

    /// `manual`, `automatic`, or a column name.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "manual" => Self::Manual,
            "automatic" => Self::Automatic,
            "" => return Err(AnalyticsError::InvalidArgument("empty label source".into())),
            name => Self::Test(name.to_string()),
        })
    }
}

/// Moves the manual results of rows `from..=to` (1-based) down by `offset`:
/// row `r` takes the values of row `r - offset`, and the values pushed past
/// `to` wrap to rows `from - offset .. from`.
pub fn apply_measurement_shift(
    table: &MeasurementTable,
    from: usize,
    to: usize,
    offset: usize,
) -> Result<MeasurementTable> {
    let mut out = table.clone();
    if offset == 0 {
        return Ok(out);
    }
    if from <= offset || from > to || to > table.rows.len() {
        return Err(AnalyticsError::InvalidArgument(format!(
            "shift {from}:{to}:{offset} does not fit a table of {} rows",
            table.rows.len()
        )));
    }
    let block = from - offset - 1..to;
    let mut manual: Vec<Vec<Option<bool>>> = table.rows[block.clone()].iter().map(|r| r[..3].to_vec()).collect();
    manual.rotate_right(offset);
    for (row, m) in out.rows[block].iter_mut().zip(manual) {
        row[..3].copy_from_slice(&m);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementStats {
    /// `(name, pass, fail)` per column; missing results are in neither count.
    pub tests: Vec<(String, usize, usize)>,
    pub automatic_pass: usize,
    pub manual_pass: usize,
    /// `[automatic][manual]`, index 1 for pass.
    pub confusion: [[usize; 2]; 2],
}

pub fn measurement_stats(table: &MeasurementTable) -> MeasurementStats {
    let tests = table
        .names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let pass = table.rows.iter().filter(|r| r[c] == Some(true)).count();
            let fail = table.rows.iter().filter(|r| r[c] == Some(false)).count();
            (name.clone(), pass, fail)
        })
        .collect();
    let mut confusion = [[0; 2]; 2];
    for r in 0..table.rows.len() {
        confusion[usize::from(table.automatic_acceptance(r))][usize::from(table.manual_acceptance(r))] += 1;
    }
    MeasurementStats {
        tests,
        automatic_pass: confusion[1][0] + confusion[1][1],
        manual_pass: confusion[0][1] + confusion[1][1],
        confusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: usize) -> MeasurementTable {
        MeasurementTable {
            names: (0..15).map(|i| format!("c{i}")).collect(),
            rows: (0..rows).map(|r| (0..15).map(|c| Some((r + c) % 3 != 0)).collect()).collect(),
        }
    }

    fn manual_column(t: &MeasurementTable) -> Vec<Option<bool>> {
        t.rows.iter().map(|r| r[0]).collect()
    }

    #[test]
    fn parses_layout_and_logicals() {
        let text = "part*date*A1*MM2*MM1*MM3*A2*A3*A4*A5*A6*A7*A8*A9*A10*A11*A12*note\n\
                    1*d*TRUE*T*FALSE*true*1*0*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*x\n\
                    2*d*FALSE**NA*TRUE*TRUE*TRUE*FALSE*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*TRUE*x\n";
        let t = MeasurementTable::parse(text).unwrap();
        assert_eq!(&t.names[..4], ["MM1", "MM2", "MM3", "A1"]);
        assert_eq!(t.manual(0), [Some(false), Some(true), Some(true)]);
        assert_eq!(t.manual(1), [None, None, Some(true)]);
        assert!(!t.has_manual(1));
        assert_eq!(t.automatic(0).len(), 12);
        assert!(t.automatic_acceptance(0));
        // A4 fails on row 2 and is the first test after the skipped three.
        assert!(!t.automatic_acceptance(1));
        assert_eq!(t.label(0, &LabelSource::Test("A2".into())), Some(true));
    }

    #[test]
    fn names_compare_by_normalized_form() {
        assert_eq!(normalize("Kreis 19,2-1 Konzentrizitaet"), "Kreis.19.2.1.Konzentrizitaet");
        assert_eq!(normalize("Zylinder 4,5-B Durchmesser"), "Zylinder.4.5.B.Durchmesser");
    }

    #[test]
    fn shift_moves_block_and_wraps_displaced_values() {
        let t = table(190);
        let s = apply_measurement_shift(&t, 129, 180, 2).unwrap();
        let (old, new) = (manual_column(&t), manual_column(&s));
        for r in 129..=180 {
            assert_eq!(new[r - 1], old[r - 3], "row {r}");
        }
        assert_eq!(new[126], old[178]);
        assert_eq!(new[127], old[179]);
        assert_eq!(new[..126], old[..126]);
        assert_eq!(new[180..], old[180..]);
        // Automatic columns are untouched.
        assert!(s.rows.iter().zip(&t.rows).all(|(a, b)| a[3..] == b[3..]));
    }

    #[test]
    fn shift_identity_composition_and_range() {
        let t = table(60);
        assert_eq!(apply_measurement_shift(&t, 10, 50, 0).unwrap(), t);
        let twice = apply_measurement_shift(&apply_measurement_shift(&t, 20, 50, 1).unwrap(), 20, 50, 1).unwrap();
        let once = apply_measurement_shift(&t, 20, 50, 2).unwrap();
        for r in 21..50 {
            assert_eq!(twice.rows[r][..3], once.rows[r][..3]);
        }
        assert!(apply_measurement_shift(&t, 10, 61, 2).is_err());
        assert!(apply_measurement_shift(&t, 2, 10, 2).is_err());
    }

    #[test]
    fn all_pass_stats() {
        let t = MeasurementTable { names: (0..15).map(|i| i.to_string()).collect(), rows: vec![vec![Some(true); 15]; 7] };
        let s = measurement_stats(&t);
        assert!(s.tests.iter().all(|&(_, p, f)| p == 7 && f == 0));
        assert_eq!(s.confusion, [[0, 0], [0, 7]]);
    }
}
