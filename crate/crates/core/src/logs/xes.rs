//! XES documents: assembly from YAML traces, XML serialization and parsing.

use std::fmt::Write as _;

use quick_xml::escape::escape;
use roxmltree::{Document, Node as XmlNode};

use super::yaml::TraceRecord;
use crate::model::simulate::SimEvent;
use super::LogError;

/// Value of the `time:timestamp` global event attribute.
pub const GLOBAL_TIMESTAMP_DEFAULT: &str = "1990-02-17T09:45:00.000+01:00";

/// Lifecycle transitions copied into the XES log.
pub const XES_LIFECYCLES: [&str; 2] = ["activity/calling", "activity/done"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrType {
    String,
    Date,
    Int,
    Float,
    Boolean,
    Id,
}

impl AttrType {
    fn tag(self) -> &'static str {
        match self {
            AttrType::String => "string",
            AttrType::Date => "date",
            AttrType::Int => "int",
            AttrType::Float => "float",
            AttrType::Boolean => "boolean",
            AttrType::Id => "id",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "string" => AttrType::String,
            "date" => AttrType::Date,
            "int" => AttrType::Int,
            "float" => AttrType::Float,
            "boolean" => AttrType::Boolean,
            "id" => AttrType::Id,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XesAttribute {
    pub kind: AttrType,
    pub key: String,
    pub value: String,
}

impl XesAttribute {
    pub fn string(key: &str, value: impl Into<String>) -> Self {
        Self { kind: AttrType::String, key: key.into(), value: value.into() }
    }

    pub fn date(key: &str, value: impl Into<String>) -> Self {
        Self { kind: AttrType::Date, key: key.into(), value: value.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XesExtension {
    pub name: String,
    pub prefix: String,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XesClassifier {
    pub name: String,
    /// Space-separated attribute keys.
    pub keys: String,
}

fn lookup<'a>(attrs: &'a [XesAttribute], key: &str) -> Option<&'a str> {
    attrs.iter().find(|a| a.key == key).map(|a| a.value.as_str())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XesEvent {
    pub attributes: Vec<XesAttribute>,
}

impl XesEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        lookup(&self.attributes, key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XesTrace {
    pub attributes: Vec<XesAttribute>,
    pub events: Vec<XesEvent>,
}

impl XesTrace {
    pub fn get(&self, key: &str) -> Option<&str> {
        lookup(&self.attributes, key)
    }

    pub fn name(&self) -> &str {
        self.get("concept:name").unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XesDocument {
    pub extensions: Vec<XesExtension>,
    pub global_trace: Vec<XesAttribute>,
    pub global_event: Vec<XesAttribute>,
    pub classifiers: Vec<XesClassifier>,
    pub traces: Vec<XesTrace>,
}

fn default_classifiers() -> Vec<XesClassifier> {
    [
        ("Event ID Transition Classifier", "id:id lifecycle:transition"),
        ("MXML Legacy Classifier", "concept:name lifecycle:transition"),
        ("Event Name", "concept:name"),
        ("Event ID", "id:id"),
        ("CPEE Classifier", "concept:name cpee:lifecycle:transition"),
        ("CPEE Endpoint", "cpee:endpoint cpee:lifecycle:transition"),
    ]
    .iter()
    .map(|(n, k)| XesClassifier { name: n.to_string(), keys: k.to_string() })
    .collect()
}

/// Assembles one XES trace per input trace, keeping only calling/done events.
/// The header comes from the first trace.
pub fn build_xes(traces: &[TraceRecord]) -> XesDocument {
    let header = traces.first().map(|t| t.header.clone()).unwrap_or_else(|| {
        super::yaml::parse_yaml_trace("log:\n  trace:\n    concept:name: x\n").expect("static header").header
    });
    let mut global_event: Vec<XesAttribute> =
        header.global_event.iter().map(|(k, v)| XesAttribute::string(k, v.clone())).collect();
    global_event.push(XesAttribute::date("time:timestamp", GLOBAL_TIMESTAMP_DEFAULT));
    XesDocument {
        extensions: header
            .extensions
            .iter()
            .map(|(name, prefix, uri)| XesExtension { name: name.clone(), prefix: prefix.clone(), uri: uri.clone() })
            .collect(),
        global_trace: header.global_trace.iter().map(|(k, v)| XesAttribute::string(k, v.clone())).collect(),
        global_event,
        classifiers: default_classifiers(),
        traces: traces
            .iter()
            .map(|t| XesTrace {
                attributes: vec![
                    XesAttribute::string("concept:name", t.concept_name.clone()),
                    XesAttribute::string("cpee:name", t.cpee_name.clone()),
                    XesAttribute::string("cpee:uuid", t.uuid.clone()),
                ],
                events: t
                    .events
                    .iter()
                    .filter(|e| XES_LIFECYCLES.contains(&e.cpee_lifecycle.as_str()))
                    .map(|e| XesEvent {
                        attributes: vec![
                            XesAttribute::string("concept:name", e.concept_name.clone()),
                            XesAttribute::string("cpee:endpoint", e.endpoint.clone()),
                            XesAttribute::string("id:id", e.id.clone()),
                            XesAttribute::string("lifecycle:transition", e.lifecycle.clone()),
                            XesAttribute::string("cpee:lifecycle:transition", e.cpee_lifecycle.clone()),
                            XesAttribute::date("time:timestamp", e.timestamp.clone()),
                        ],
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// XES trace of a simulated run; timestamps are one second apart.
pub fn simulated_trace(name: &str, events: &[SimEvent]) -> XesTrace {
    let base = chrono::DateTime::parse_from_rfc3339("2020-01-01T00:00:00+00:00").expect("static timestamp");
    XesTrace {
        attributes: vec![
            XesAttribute::string("concept:name", name),
            XesAttribute::string("cpee:name", "simulated"),
            XesAttribute::string("cpee:uuid", format!("sim-{name}")),
        ],
        events: events
            .iter()
            .enumerate()
            .map(|(i, e)| XesEvent {
                attributes: vec![
                    XesAttribute::string("concept:name", e.label.clone()),
                    XesAttribute::string("cpee:endpoint", e.endpoint.clone()),
                    XesAttribute::string("id:id", e.id.clone()),
                    XesAttribute::string("lifecycle:transition", e.phase.as_str()),
                    XesAttribute::string("cpee:lifecycle:transition", e.cpee_lifecycle()),
                    XesAttribute::date(
                        "time:timestamp",
                        (base + chrono::Duration::seconds(i as i64)).format("%Y-%m-%dT%H:%M:%S%.3f%:z").to_string(),
                    ),
                ],
            })
            .collect(),
    }
}

fn write_attrs(out: &mut String, attrs: &[XesAttribute], indent: &str) {
    for a in attrs {
        let _ = writeln!(
            out,
            "{indent}<{} key=\"{}\" value=\"{}\"/>",
            a.kind.tag(),
            escape(a.key.as_str()),
            escape(a.value.as_str())
        );
    }
}

/// Renders the document as XES XML.
pub fn serialize_xes(doc: &XesDocument) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n");
    out.push_str(
        "<log xes.version=\"1.0\" xes.features=\"nested-attributes\" openxes.version=\"1.0RC7\" xmlns=\"http://www.xes-standard.org/\">\n",
    );
    for e in &doc.extensions {
        let _ = writeln!(
            out,
            "\t<extension name=\"{}\" prefix=\"{}\" uri=\"{}\"/>",
            escape(e.name.as_str()),
            escape(e.prefix.as_str()),
            escape(e.uri.as_str())
        );
    }
    for (scope, attrs) in [("trace", &doc.global_trace), ("event", &doc.global_event)] {
        let _ = writeln!(out, "\t<global scope=\"{scope}\">");
        write_attrs(&mut out, attrs, "\t\t");
        out.push_str("\t</global>\n");
    }
    for c in &doc.classifiers {
        let _ = writeln!(out, "\t<classifier name=\"{}\" keys=\"{}\"/>", escape(c.name.as_str()), escape(c.keys.as_str()));
    }
    for t in &doc.traces {
        out.push_str("\t<trace>\n");
        write_attrs(&mut out, &t.attributes, "\t\t");
        for e in &t.events {
            out.push_str("\t\t<event>\n");
            write_attrs(&mut out, &e.attributes, "\t\t\t");
            out.push_str("\t\t</event>\n");
        }
        out.push_str("\t</trace>\n");
    }
    out.push_str("</log>\n");
    out
}

fn elements<'a, 'i: 'a>(node: XmlNode<'a, 'i>) -> impl Iterator<Item = XmlNode<'a, 'i>> {
    node.children().filter(XmlNode::is_element)
}

fn read_attrs(node: XmlNode<'_, '_>) -> Vec<XesAttribute> {
    elements(node)
        .filter_map(|c| {
            let kind = AttrType::from_tag(c.tag_name().name())?;
            Some(XesAttribute {
                kind,
                key: c.attribute("key")?.to_string(),
                value: c.attribute("value").unwrap_or("").to_string(),
            })
        })
        .collect()
}

/// Parses XES XML. Nested (list/container) attributes are ignored.
pub fn parse_xes(xml: &str) -> Result<XesDocument, LogError> {
    let doc = Document::parse(xml).map_err(|e| LogError::Xes(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "log" {
        return Err(LogError::Xes(format!("root element is `{}`, expected `log`", root.tag_name().name())));
    }
    let mut out = XesDocument::default();
    for child in elements(root) {
        match child.tag_name().name() {
            "extension" => out.extensions.push(XesExtension {
                name: child.attribute("name").unwrap_or("").into(),
                prefix: child.attribute("prefix").unwrap_or("").into(),
                uri: child.attribute("uri").unwrap_or("").into(),
            }),
            "global" => {
                let attrs = read_attrs(child);
                match child.attribute("scope").unwrap_or("event") {
                    "trace" => out.global_trace = attrs,
                    _ => out.global_event = attrs,
                }
            }
            "classifier" => out.classifiers.push(XesClassifier {
                name: child.attribute("name").unwrap_or("").into(),
                keys: child.attribute("keys").unwrap_or("").into(),
            }),
            "trace" => out.traces.push(XesTrace {
                attributes: read_attrs(child),
                events: elements(child)
                    .filter(|e| e.tag_name().name() == "event")
                    .map(|e| XesEvent { attributes: read_attrs(e) })
                    .collect(),
            }),
            _ => {}
        }
    }
    Ok(out)
}
