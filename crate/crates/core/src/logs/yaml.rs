//! Multi-document YAML execution logs.
//!
//! A log file holds one `log` document (trace attributes and the XES header
//! data) followed by `event` documents in execution order.

use chrono::{DateTime, FixedOffset};
use serde::Deserialize;
use serde_yaml::Value;

use super::LogError;

/// Extension and global-attribute declarations carried by the `log` document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogHeader {
    /// `(name, prefix, uri)` for Time, Concept, Organizational, Lifecycle.
    pub extensions: Vec<(String, String, String)>,
    pub global_trace: Vec<(String, String)>,
    pub global_event: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub concept_name: String,
    /// Empty for tasks without an endpoint (scripts).
    pub endpoint: String,
    pub id: String,
    pub lifecycle: String,
    pub cpee_lifecycle: String,
    pub timestamp: String,
    /// The event's `list` entry (`data_receiver` items), when present.
    pub payload: Option<Value>,
    /// The whole event mapping.
    pub raw: Value,
}

impl EventRecord {
    pub fn time(&self) -> Option<DateTime<FixedOffset>> {
        DateTime::parse_from_rfc3339(&self.timestamp).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub concept_name: String,
    pub cpee_name: String,
    pub uuid: String,
    pub header: LogHeader,
    pub events: Vec<EventRecord>,
}

/// Text of a YAML scalar as Python's `str()` renders it.
pub(crate) fn py_str(v: &Value) -> String {
    match v {
        Value::Null => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Tagged(t) => py_str(&t.value),
        other => serde_yaml::to_string(other).unwrap_or_default().trim_end().to_string(),
    }
}

fn field(map: &Value, key: &str) -> Option<String> {
    map.get(key).filter(|v| !v.is_null()).map(py_str)
}

fn path<'a>(v: &'a Value, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().try_fold(v, |cur, k| cur.get(*k))
}

const DEFAULT_GLOBAL: &str = "__INVALID__";

fn parse_header(log: &Value) -> LogHeader {
    let ext = |key: &str, default: &str| {
        path(log, &["extension", key]).map(py_str).unwrap_or_else(|| default.to_string())
    };
    let extensions = vec![
        ("Time".into(), "time".into(), ext("time", "http://www.xes-standard.org/time.xesext")),
        ("Concept".into(), "concept".into(), ext("concept", "http://www.xes-standard.org/concept.xesext")),
        ("Organizational".into(), "org".into(), ext("organisational", "http://www.xes-standard.org/org.xesext")),
        ("Lifecycle".into(), "lifecycle".into(), ext("lifecycle", "http://www.xes-standard.org/lifecycle.xesext")),
    ];
    let global = |scope: &str, key: &str| {
        path(log, &["global", scope, key]).map(py_str).unwrap_or_else(|| DEFAULT_GLOBAL.to_string())
    };
    LogHeader {
        extensions,
        global_trace: ["concept:name", "cpee:name"].iter().map(|k| (k.to_string(), global("trace", k))).collect(),
        // The endpoint global is read from `concept:endpoint` but keyed `cpee:endpoint`.
        global_event: vec![
            ("concept:name".into(), global("event", "concept:name")),
            ("cpee:endpoint".into(), global("event", "concept:endpoint")),
            ("id:id".into(), global("event", "id:id")),
            ("lifecycle:transition".into(), global("event", "lifecycle:transition")),
            ("cpee:lifecycle:transition".into(), global("event", "cpee:lifecycle:transition")),
        ],
    }
}

fn parse_event(ev: &Value, index: usize) -> Result<EventRecord, LogError> {
    let cpee_lifecycle = field(ev, "cpee:lifecycle:transition")
        .filter(|s| !s.is_empty())
        .ok_or(LogError::MissingField { event: index, field: "cpee:lifecycle:transition" })?;
    let timestamp = field(ev, "time:timestamp").ok_or(LogError::MissingField { event: index, field: "time:timestamp" })?;
    if DateTime::parse_from_rfc3339(&timestamp).is_err() {
        return Err(LogError::BadTimestamp { event: index, value: timestamp });
    }
    Ok(EventRecord {
        concept_name: field(ev, "concept:name").unwrap_or_default(),
        endpoint: field(ev, "concept:endpoint").unwrap_or_default(),
        id: field(ev, "id:id").unwrap_or_default(),
        lifecycle: field(ev, "lifecycle:transition").unwrap_or_default(),
        cpee_lifecycle,
        timestamp,
        payload: ev.get("list").cloned(),
        raw: ev.clone(),
    })
}

/// Parses one YAML log file.
pub fn parse_yaml_trace(stream: &str) -> Result<TraceRecord, LogError> {
    let mut trace: Option<TraceRecord> = None;
    let mut events = Vec::new();
    for doc in serde_yaml::Deserializer::from_str(stream) {
        let value = Value::deserialize(doc)?;
        if value.is_null() {
            continue;
        }
        if let Some(log) = value.get("log") {
            let concept_name = path(log, &["trace", "concept:name"])
                .map(py_str)
                .filter(|s| !s.is_empty())
                .ok_or(LogError::MissingTraceName)?;
            trace = Some(TraceRecord {
                concept_name,
                cpee_name: path(log, &["trace", "cpee:name"]).map(py_str).unwrap_or_default(),
                uuid: path(log, &["trace", "cpee:uuid"]).map(py_str).unwrap_or_default(),
                header: parse_header(log),
                events: Vec::new(),
            });
        }
        if let Some(ev) = value.get("event") {
            events.push(parse_event(ev, events.len())?);
        }
    }
    let mut trace = trace.ok_or(LogError::MissingLogDocument)?;
    trace.events = events;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG: &str = r#"log:
  extension:
    time: http://www.xes-standard.org/time.xesext
    concept: http://www.xes-standard.org/concept.xesext
    organisational: http://www.xes-standard.org/org.xesext
    lifecycle: http://www.xes-standard.org/lifecycle.xesext
  global:
    trace:
      concept:name: __INVALID__
      cpee:name: __INVALID__
    event:
      concept:name: __INVALID__
      concept:endpoint: ''
      id:id: ''
      lifecycle:transition: complete
      cpee:lifecycle:transition: activity/calling
      time:timestamp: ''
  trace:
    concept:name: 42
    cpee:name: Machining
    cpee:uuid: 0b5c-11
---
event:
  trace:id: '42'
  concept:name: Fetch
  concept:endpoint: https://opcua/
  id:id: a1
  lifecycle:transition: start
  cpee:lifecycle:transition: activity/calling
  time:timestamp: '2019-01-14T10:00:00.000+01:00'
---
event:
  trace:id: '42'
  concept:name: Init
  id:id: a2
  lifecycle:transition: complete
  cpee:lifecycle:transition: activity/done
  time:timestamp: '2019-01-14T10:00:01.000+01:00'
"#;

    #[test]
    fn log_and_events() {
        let t = parse_yaml_trace(LOG).unwrap();
        assert_eq!(t.concept_name, "42");
        assert_eq!(t.cpee_name, "Machining");
        assert_eq!(t.uuid, "0b5c-11");
        assert_eq!(t.events.len(), 2);
        assert_eq!(t.events[0].endpoint, "https://opcua/");
        assert_eq!(t.events[1].endpoint, "");
        assert_eq!(t.header.global_event[1], ("cpee:endpoint".to_string(), String::new()));
    }

    #[test]
    fn events_only_is_an_error() {
        let only_events = LOG.split_once("---\n").unwrap().1;
        assert!(matches!(parse_yaml_trace(only_events), Err(LogError::MissingLogDocument)));
    }

    #[test]
    fn syntax_errors_surface() {
        assert!(matches!(parse_yaml_trace("log: [unclosed"), Err(LogError::Yaml(_))));
    }

    #[test]
    fn timestamps_must_parse() {
        let bad = LOG.replace("2019-01-14T10:00:01.000+01:00", "yesterday");
        assert!(matches!(parse_yaml_trace(&bad), Err(LogError::BadTimestamp { event: 1, .. })));
    }
}
