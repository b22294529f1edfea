//! Parent/child relations between process instances.
//!
//! A parent spawns a child from one of its events; the event carries the
//! child's trace name or uuid somewhere in its data.

use std::collections::HashMap;

use chrono::{DateTime, FixedOffset};
use serde_yaml::Value;

use super::yaml::{py_str, TraceRecord};

/// Where spawn references are looked up inside an event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SpawnSource {
    /// Any scalar anywhere in the event equal to another trace's name or uuid.
    #[default]
    AnyValue,
    /// The scalar (or scalars of a sequence) at this key path.
    Field(Vec<String>),
}

impl SpawnSource {
    /// `a.b.c` selects `Field(["a", "b", "c"])`; empty or `*` selects `AnyValue`.
    pub fn parse(spec: &str) -> Self {
        match spec.trim() {
            "" | "*" => SpawnSource::AnyValue,
            path => SpawnSource::Field(path.split('.').map(str::to_string).collect()),
        }
    }
}

/// Forest over trace indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceTree {
    pub parent: Vec<Option<usize>>,
    /// Ordered by spawn time, then by input index.
    pub children: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
    pub warnings: Vec<String>,
}

impl InstanceTree {
    /// `Some(true)` for the last-spawned child of its parent, `Some(false)` for
    /// earlier siblings, `None` for roots.
    pub fn last_child_labels(&self) -> Vec<Option<bool>> {
        self.parent
            .iter()
            .enumerate()
            .map(|(i, p)| p.map(|p| self.children[p].last() == Some(&i)))
            .collect()
    }

    fn is_ancestor(&self, candidate: usize, mut node: usize) -> bool {
        while let Some(p) = self.parent[node] {
            if p == candidate {
                return true;
            }
            node = p;
        }
        false
    }
}

fn scalars<'a>(v: &'a Value, out: &mut Vec<&'a Value>) {
    match v {
        Value::Sequence(items) => items.iter().for_each(|i| scalars(i, out)),
        Value::Mapping(map) => map.values().for_each(|i| scalars(i, out)),
        Value::Tagged(t) => scalars(&t.value, out),
        Value::Null => {}
        other => out.push(other),
    }
}

fn references<'a>(raw: &'a Value, source: &SpawnSource) -> Vec<&'a Value> {
    let mut out = Vec::new();
    match source {
        SpawnSource::AnyValue => scalars(raw, &mut out),
        SpawnSource::Field(path) => {
            if let Some(v) = path.iter().try_fold(raw, |cur, k| cur.get(k.as_str())) {
                scalars(v, &mut out);
            }
        }
    }
    out
}

/// Links each trace to the trace whose event first references it.
///
/// A reference counts only when it is not later than the referenced trace's
/// first event, so children mentioning their parent do not invert the link.
pub fn link_subprocesses(traces: &[TraceRecord], source: &SpawnSource) -> InstanceTree {
    let n = traces.len();
    let mut by_key: HashMap<&str, usize> = HashMap::new();
    for (i, t) in traces.iter().enumerate() {
        for key in [t.concept_name.as_str(), t.uuid.as_str()] {
            if !key.is_empty() {
                by_key.entry(key).or_insert(i);
            }
        }
    }
    let first_time: Vec<Option<DateTime<FixedOffset>>> =
        traces.iter().map(|t| t.events.iter().filter_map(|e| e.time()).min()).collect();

    let mut tree = InstanceTree { parent: vec![None; n], children: vec![Vec::new(); n], ..Default::default() };
    let mut spawned_at: Vec<Option<DateTime<FixedOffset>>> = vec![None; n];
    for (p, trace) in traces.iter().enumerate() {
        for event in &trace.events {
            let time = event.time();
            for value in references(&event.raw, source) {
                let Some(&c) = by_key.get(py_str(value).as_str()) else { continue };
                if c == p || tree.parent[c] == Some(p) {
                    continue;
                }
                if let (Some(t), Some(start)) = (time, first_time[c]) {
                    if t > start {
                        continue;
                    }
                }
                if let Some(existing) = tree.parent[c] {
                    tree.warnings.push(format!(
                        "trace `{}` referenced by `{}` after `{}`; keeping the first link",
                        traces[c].concept_name, trace.concept_name, traces[existing].concept_name
                    ));
                    continue;
                }
                if tree.is_ancestor(c, p) {
                    tree.warnings.push(format!(
                        "link `{}` -> `{}` would close a cycle; ignored",
                        trace.concept_name, traces[c].concept_name
                    ));
                    continue;
                }
                tree.parent[c] = Some(p);
                spawned_at[c] = time;
            }
        }
    }
    for c in 0..n {
        if let Some(p) = tree.parent[c] {
            tree.children[p].push(c);
        } else {
            tree.roots.push(c);
        }
    }
    for kids in &mut tree.children {
        kids.sort_by_key(|&c| (spawned_at[c], c));
    }
    for w in &tree.warnings {
        log::warn!("{w}");
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::yaml::{EventRecord, LogHeader};

    fn ev(ts: &str, data: &str) -> EventRecord {
        let raw: Value = serde_yaml::from_str(&format!("{{data: '{data}', time:timestamp: '{ts}'}}")).unwrap();
        EventRecord {
            concept_name: "Spawn".into(),
            endpoint: String::new(),
            id: "a1".into(),
            lifecycle: "complete".into(),
            cpee_lifecycle: "activity/done".into(),
            timestamp: ts.into(),
            payload: None,
            raw,
        }
    }

    fn trace(name: &str, events: Vec<EventRecord>) -> TraceRecord {
        TraceRecord {
            concept_name: name.into(),
            cpee_name: String::new(),
            uuid: format!("uuid-{name}"),
            header: LogHeader::default(),
            events,
        }
    }

    const T: [&str; 5] = [
        "2020-01-01T10:00:00+00:00",
        "2020-01-01T10:01:00+00:00",
        "2020-01-01T10:02:00+00:00",
        "2020-01-01T10:03:00+00:00",
        "2020-01-01T10:04:00+00:00",
    ];

    #[test]
    fn children_ordered_by_spawn_time() {
        // c2 is listed first but spawned second.
        let traces = vec![
            trace("c2", vec![ev(T[3], "x")]),
            trace("p", vec![ev(T[0], "c1"), ev(T[2], "uuid-c2")]),
            trace("c1", vec![ev(T[1], "p")]),
        ];
        let tree = link_subprocesses(&traces, &SpawnSource::AnyValue);
        assert_eq!(tree.roots, vec![1]);
        assert_eq!(tree.children[1], vec![2, 0]);
        assert_eq!(tree.last_child_labels(), vec![Some(true), None, Some(false)]);
        assert!(tree.warnings.is_empty());
    }

    #[test]
    fn no_links_gives_singleton_roots() {
        let traces = vec![trace("a", vec![ev(T[0], "z")]), trace("b", vec![])];
        let tree = link_subprocesses(&traces, &SpawnSource::AnyValue);
        assert_eq!(tree.roots, vec![0, 1]);
    }

    #[test]
    fn first_parent_wins() {
        let traces = vec![
            trace("p1", vec![ev(T[0], "c")]),
            trace("p2", vec![ev(T[1], "c")]),
            trace("c", vec![ev(T[2], "")]),
        ];
        let tree = link_subprocesses(&traces, &SpawnSource::AnyValue);
        assert_eq!(tree.parent[2], Some(0));
        assert_eq!(tree.warnings.len(), 1);
        let mut seen: Vec<usize> = tree.roots.clone();
        seen.extend(tree.children.iter().flatten());
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn field_source_restricts_lookup() {
        let traces = vec![trace("p", vec![ev(T[0], "c")]), trace("c", vec![ev(T[1], "")])];
        let tree = link_subprocesses(&traces, &SpawnSource::parse("other"));
        assert_eq!(tree.roots, vec![0, 1]);
        let tree = link_subprocesses(&traces, &SpawnSource::parse("data"));
        assert_eq!(tree.parent[1], Some(0));
    }
}
