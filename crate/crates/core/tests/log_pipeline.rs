use std::path::PathBuf;

use proptest::prelude::*;
use shopfloor_core::logs::{
    build_xes, extract_machining_rows, link_subprocesses, machining_csv, parse_xes, parse_yaml_trace, serialize_xes,
    write_machining_csv, MachiningRow, SpawnSource, TraceRecord, MACHINING_HEADER,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn load(name: &str) -> TraceRecord {
    parse_yaml_trace(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn order() -> Vec<TraceRecord> {
    ["production.yaml", "machining_101.yaml", "machining_102.yaml"].iter().map(|f| load(f)).collect()
}

#[test]
fn xes_keeps_calling_and_done_events() {
    let traces = order();
    let expected: usize = traces
        .iter()
        .flat_map(|t| &t.events)
        .filter(|e| matches!(e.cpee_lifecycle.as_str(), "activity/calling" | "activity/done"))
        .count();
    assert_eq!(expected, 5 + 2 + 2);

    let doc = build_xes(&traces);
    let xml = serialize_xes(&doc);
    assert_eq!(xml.matches("<extension ").count(), 4);
    assert_eq!(xml.matches("<classifier ").count(), 6);
    assert!(xml.contains(r#"<classifier name="CPEE Endpoint" keys="cpee:endpoint cpee:lifecycle:transition"/>"#));
    assert_eq!(xml.matches("<event>").count(), expected);

    let back = parse_xes(&xml).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.global_trace.len(), 2);
    assert_eq!(back.global_event.len(), 6);
    let names: Vec<&str> = back.traces.iter().map(|t| t.name()).collect();
    assert_eq!(names, ["100", "101", "102"]);
    let first = &back.traces[0].events[0];
    assert_eq!(first.get("cpee:endpoint"), Some(""));
    assert_eq!(first.attributes.len(), 6);
}

#[test]
fn machining_rows_from_fetch_events() {
    let t = load("machining_101.yaml");
    let rows = extract_machining_rows(&t);
    // Two receiving events with two items each, one without a payload.
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].id, "ns=2;s=/Channel/Spindle/driveLoad");
    assert_eq!(rows[0].value, "12.5");
    assert_eq!(rows[0].client_handle, "4");
    assert_eq!(rows[1].value, "3 kN");
    assert_eq!(rows[4], MachiningRow { timestamp: "2019-01-14T10:00:06.000+01:00".into(), ..Default::default() });

    let dir = tempfile::tempdir().unwrap();
    let path = write_machining_csv(&rows, &t.concept_name, dir.path()).unwrap();
    assert_eq!(path.file_name().unwrap(), "log101.csv");
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), MACHINING_HEADER.join("*"));
    let second: Vec<&str> = lines.nth(1).unwrap().split('*').collect();
    assert_eq!(second.len(), 11);
    assert_eq!(second[5], "3 kN");
    assert!(extract_machining_rows(&load("production.yaml")).is_empty());
}

#[test]
fn production_spawns_both_machining_runs() {
    let traces = order();
    let tree = link_subprocesses(&traces, &SpawnSource::AnyValue);
    assert_eq!(tree.roots, [0]);
    assert_eq!(tree.children[0], [1, 2]);
    assert_eq!(tree.last_child_labels(), [None, Some(false), Some(true)]);

    // Reversed input order changes indices, not structure.
    let reversed: Vec<TraceRecord> = traces.into_iter().rev().collect();
    let tree = link_subprocesses(&reversed, &SpawnSource::AnyValue);
    assert_eq!(tree.roots, [2]);
    assert_eq!(tree.children[2], [1, 0]);
}

fn field() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,;:=/\\[\\]_-]{0,12}".prop_map(|s| s.trim_end().to_string())
}

proptest! {
    #[test]
    fn star_rows_round_trip(rows in prop::collection::vec(prop::collection::vec(field(), 11), 0..6)) {
        let rows: Vec<MachiningRow> = rows
            .iter()
            .map(|f| MachiningRow::from_fields(&f.iter().map(String::as_str).collect::<Vec<_>>()).unwrap())
            .collect();
        let text = machining_csv(&rows);
        let parsed: Vec<MachiningRow> = text
            .lines()
            .skip(1)
            .map(|l| MachiningRow::from_fields(&l.split('*').collect::<Vec<_>>()).unwrap())
            .collect();
        prop_assert_eq!(parsed, rows);
    }

    #[test]
    fn xes_event_count_matches_lifecycles(lifecycles in prop::collection::vec(0usize..4, 0..20)) {
        const KINDS: [&str; 4] = ["activity/calling", "activity/done", "activity/receiving", "dataelements/change"];
        let mut yaml = String::from("log:\n  trace:\n    concept:name: t\n");
        for (i, &k) in lifecycles.iter().enumerate() {
            yaml.push_str(&format!(
                "---\nevent:\n  concept:name: e{i}\n  cpee:lifecycle:transition: {}\n  time:timestamp: '2020-01-01T00:00:{:02}+00:00'\n",
                KINDS[k],
                i % 60
            ));
        }
        let doc = build_xes(&[parse_yaml_trace(&yaml).unwrap()]);
        let expected = lifecycles.iter().filter(|&&k| k < 2).count();
        prop_assert_eq!(doc.traces[0].events.len(), expected);
        prop_assert_eq!(serialize_xes(&doc).matches("<event>").count(), expected);
    }
}
