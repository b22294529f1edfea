//! Machining data carried by `Fetch` receiving events, as `*`-delimited CSV.

use std::path::{Path, PathBuf};

use serde_yaml::Value;

use super::yaml::{py_str, TraceRecord};
use super::LogError;
use crate::fsutil::write_atomic;

pub const MACHINING_HEADER: [&str; 11] = [
    "Id",
    "source",
    "name",
    "description",
    "path",
    "value",
    "timestamp",
    "StatusCode",
    "ServerTimestamp",
    "VariantType",
    "ClientHandle",
];

const FETCH_TASK: &str = "Fetch";
const RECEIVING: &str = "activity/receiving";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MachiningRow {
    pub id: String,
    pub source: String,
    pub name: String,
    pub description: String,
    pub path: String,
    /// End-trimmed.
    pub value: String,
    pub timestamp: String,
    pub status_code: String,
    pub server_timestamp: String,
    pub variant_type: String,
    pub client_handle: String,
}

impl MachiningRow {
    /// Fields in header order.
    pub fn fields(&self) -> [&str; 11] {
        [
            &self.id,
            &self.source,
            &self.name,
            &self.description,
            &self.path,
            &self.value,
            &self.timestamp,
            &self.status_code,
            &self.server_timestamp,
            &self.variant_type,
            &self.client_handle,
        ]
    }

    /// Inverse of [`MachiningRow::fields`]; `None` unless exactly 11 fields.
    pub fn from_fields(fields: &[&str]) -> Option<Self> {
        let [id, source, name, description, path, value, timestamp, status_code, server_timestamp, variant_type, client_handle] =
            fields
        else {
            return None;
        };
        Some(Self {
            id: id.to_string(),
            source: source.to_string(),
            name: name.to_string(),
            description: description.to_string(),
            path: path.to_string(),
            value: value.to_string(),
            timestamp: timestamp.to_string(),
            status_code: status_code.to_string(),
            server_timestamp: server_timestamp.to_string(),
            variant_type: variant_type.to_string(),
            client_handle: client_handle.to_string(),
        })
    }
}

fn text(map: &Value, key: &str) -> String {
    map.get(key).map(py_str).unwrap_or_default()
}

fn row_from_item(data: &Value) -> MachiningRow {
    let meta = data.get("meta").cloned().unwrap_or(Value::Null);
    MachiningRow {
        id: text(data, "ID"),
        source: text(data, "source"),
        name: text(data, "name"),
        description: text(data, "description"),
        path: text(data, "path"),
        value: text(data, "value").trim_end().to_string(),
        timestamp: text(data, "timestamp"),
        status_code: text(&meta, "StatusCode"),
        server_timestamp: text(&meta, "ServerTimestamp"),
        variant_type: text(&meta, "VariantType"),
        client_handle: text(&meta, "ClientHandle"),
    }
}

fn sequence(v: Option<&Value>) -> &[Value] {
    v.and_then(Value::as_sequence).map(Vec::as_slice).unwrap_or(&[])
}

/// One row per data item of every `Fetch`/`activity/receiving` event; an event
/// without a `list` yields a single row holding only its timestamp.
pub fn extract_machining_rows(trace: &TraceRecord) -> Vec<MachiningRow> {
    let mut rows = Vec::new();
    for event in &trace.events {
        if event.cpee_lifecycle != RECEIVING || event.concept_name != FETCH_TASK {
            continue;
        }
        match &event.payload {
            Some(list) => {
                for receiver in sequence(list.get("data_receiver")) {
                    rows.extend(sequence(receiver.get("data")).iter().map(row_from_item));
                }
            }
            None => rows.push(MachiningRow { timestamp: event.timestamp.clone(), ..Default::default() }),
        }
    }
    rows
}

pub fn machining_file_name(trace_name: &str) -> String {
    format!("log{trace_name}.csv")
}

/// Renders header plus rows; rows with a field containing `*` or a line break
/// are dropped with a warning.
pub fn machining_csv(rows: &[MachiningRow]) -> String {
    let mut out = MACHINING_HEADER.join("*");
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let fields = row.fields();
        if fields.iter().any(|f| f.contains(['*', '\n', '\r'])) {
            log::warn!("machining row {i} dropped: a field contains `*` or a line break");
            continue;
        }
        out.push_str(&fields.join("*"));
        out.push('\n');
    }
    out
}

/// Writes `log<trace_name>.csv` into `dir`.
pub fn write_machining_csv(rows: &[MachiningRow], trace_name: &str, dir: &Path) -> Result<PathBuf, LogError> {
    let path = dir.join(machining_file_name(trace_name));
    write_atomic(&path, machining_csv(rows).as_bytes())
        .map_err(|source| LogError::Io { path: path.display().to_string(), source })?;
    Ok(path)
}
