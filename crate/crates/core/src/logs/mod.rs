//! Execution-log ingestion: YAML traces, XES documents, machining CSVs and
//! process-instance hierarchies.

mod instances;
mod machining;
pub mod xes;
mod yaml;

pub use instances::{link_subprocesses, InstanceTree, SpawnSource};
pub use machining::{
    extract_machining_rows, machining_csv, machining_file_name, write_machining_csv, MachiningRow, MACHINING_HEADER,
};
pub use xes::{build_xes, parse_xes, serialize_xes, simulated_trace, XesDocument, XesEvent, XesTrace};
pub use yaml::{parse_yaml_trace, EventRecord, LogHeader, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("YAML: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("no `log` document in stream")]
    MissingLogDocument,
    #[error("trace has no concept:name")]
    MissingTraceName,
    #[error("event {event}: missing `{field}`")]
    MissingField { event: usize, field: &'static str },
    #[error("event {event}: timestamp `{value}` is not ISO-8601")]
    BadTimestamp { event: usize, value: String },
    #[error("XES: {0}")]
    Xes(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
