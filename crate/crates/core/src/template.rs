//! Workflow-engine process templates (testset XML).
//!
//! Only `/testset/description/description` and `/testset/endpoints` are read.
//! Elements are matched by local name, so namespaced and bare documents parse
//! the same way.

use std::fmt::Write as _;

use quick_xml::escape::escape;
use roxmltree::{Document, Node as XmlNode};
use thiserror::Error;

use crate::model::{Branch, BranchKind, EndpointMap, Node, ParallelBranch, ProcessTree, TreeError};

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("root element is `{0}`, expected `testset`")]
    NotATestset(String),
    #[error("missing /testset/description/description")]
    MissingDescription,
    #[error("missing /testset/endpoints")]
    MissingEndpoints,
    #[error("unknown element `{tag}` at line {line}")]
    UnknownElement { tag: String, line: u32 },
    #[error("`{tag}` at line {line} is missing attribute `{attr}`")]
    MissingAttribute { tag: String, attr: &'static str, line: u32 },
    #[error("call `{id}` at line {line} has no label")]
    MissingLabel { id: String, line: u32 },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A parsed template: control flow plus the endpoint table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TemplateDocument {
    pub tree: ProcessTree,
    pub endpoints: EndpointMap,
    pub source_path: String,
}

/// Removes every space and `?` from a task label.
pub fn clean_label(label: &str) -> String {
    label.chars().filter(|&c| c != ' ' && c != '?').collect()
}

fn child<'a, 'i>(node: XmlNode<'a, 'i>, local: &str) -> Option<XmlNode<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == local)
}

fn line_of(node: XmlNode<'_, '_>) -> u32 {
    node.document().text_pos_at(node.range().start).row
}

fn attr(node: XmlNode<'_, '_>, name: &'static str) -> Result<String, TemplateError> {
    node.attribute(name)
        .map(str::to_string)
        .ok_or_else(|| TemplateError::MissingAttribute {
            tag: node.tag_name().name().to_string(),
            attr: name,
            line: line_of(node),
        })
}

fn unknown(node: XmlNode<'_, '_>) -> TemplateError {
    TemplateError::UnknownElement { tag: node.tag_name().name().to_string(), line: line_of(node) }
}

fn parse_children(node: XmlNode<'_, '_>) -> Result<Vec<Node>, TemplateError> {
    node.children().filter(XmlNode::is_element).map(parse_node).collect()
}

fn parse_node(node: XmlNode<'_, '_>) -> Result<Node, TemplateError> {
    match node.tag_name().name() {
        "call" => {
            let id = attr(node, "id")?;
            let endpoint = attr(node, "endpoint")?;
            let label = node
                .descendants()
                .find(|d| d.is_element() && d.tag_name().name() == "label")
                .map(|l| l.text().unwrap_or("").to_string())
                .ok_or_else(|| TemplateError::MissingLabel { id: id.clone(), line: line_of(node) })?;
            Ok(Node::Call { id, label, endpoint })
        }
        "manipulate" => Ok(Node::Manipulate {
            id: attr(node, "id")?,
            label: node.attribute("label").unwrap_or("").to_string(),
        }),
        "terminate" => Ok(Node::Terminate),
        "loop" => Ok(Node::Loop { children: parse_children(node)? }),
        "choose" => {
            let mut branches = Vec::new();
            for b in node.children().filter(XmlNode::is_element) {
                let kind = match b.tag_name().name() {
                    "alternative" => BranchKind::Alternative,
                    "otherwise" => BranchKind::Otherwise,
                    _ => return Err(unknown(b)),
                };
                branches.push(Branch { kind, children: parse_children(b)? });
            }
            Ok(Node::Choose { branches })
        }
        "parallel" => {
            let mut branches = Vec::new();
            for b in node.children().filter(XmlNode::is_element) {
                if b.tag_name().name() != "parallel_branch" {
                    return Err(unknown(b));
                }
                branches.push(ParallelBranch { children: parse_children(b)? });
            }
            Ok(Node::Parallel { branches })
        }
        _ => Err(unknown(node)),
    }
}

/// Parses a testset document into its process tree and endpoint table.
pub fn parse_template(xml: &str) -> Result<TemplateDocument, TemplateError> {
    let doc = Document::parse(xml)?;
    let root = doc.root_element();
    if root.tag_name().name() != "testset" {
        return Err(TemplateError::NotATestset(root.tag_name().name().to_string()));
    }
    let description = child(root, "description")
        .and_then(|d| child(d, "description"))
        .ok_or(TemplateError::MissingDescription)?;
    let endpoints_el = child(root, "endpoints").ok_or(TemplateError::MissingEndpoints)?;

    let endpoints: EndpointMap = endpoints_el
        .children()
        .filter(XmlNode::is_element)
        .map(|e| (e.tag_name().name().to_string(), e.text().unwrap_or("").trim().to_string()))
        .collect();
    let tree = ProcessTree::new(parse_children(description)?);
    tree.validate()?;
    tree.validate_endpoints(&endpoints)?;
    Ok(TemplateDocument { tree, endpoints, source_path: String::new() })
}

impl TemplateDocument {
    pub fn from_path(path: &std::path::Path) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let text = std::fs::read_to_string(path)?;
        let mut doc = parse_template(&text)?;
        doc.source_path = path.display().to_string();
        Ok(doc)
    }

    /// Canonical testset XML; parsing it again yields an equal document
    /// (apart from `source_path`).
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str("<testset xmlns=\"http://cpee.org/ns/properties/2.0\">\n  <endpoints>\n");
        for (name, url) in &self.endpoints {
            let _ = writeln!(out, "    <{name}>{}</{name}>", escape(url.as_str()));
        }
        out.push_str("  </endpoints>\n  <description>\n");
        out.push_str("    <description xmlns=\"http://cpee.org/ns/description/1.0\">\n");
        write_nodes(&mut out, &self.tree.root, 6);
        out.push_str("    </description>\n  </description>\n</testset>\n");
        out
    }
}

fn write_nodes(out: &mut String, nodes: &[Node], indent: usize) {
    for node in nodes {
        write_node(out, node, indent);
    }
}

fn write_container(out: &mut String, tag: &str, children: &[Node], indent: usize) {
    let pad = " ".repeat(indent);
    if children.is_empty() {
        let _ = writeln!(out, "{pad}<{tag}/>");
    } else {
        let _ = writeln!(out, "{pad}<{tag}>");
        write_nodes(out, children, indent + 2);
        let _ = writeln!(out, "{pad}</{tag}>");
    }
}

fn write_node(out: &mut String, node: &Node, indent: usize) {
    let pad = " ".repeat(indent);
    match node {
        Node::Call { id, label, endpoint } => {
            let _ = writeln!(
                out,
                "{pad}<call id=\"{}\" endpoint=\"{}\"><parameters><label>{}</label></parameters></call>",
                escape(id.as_str()),
                escape(endpoint.as_str()),
                escape(label.as_str())
            );
        }
        Node::Manipulate { id, label } => {
            let _ = writeln!(
                out,
                "{pad}<manipulate id=\"{}\" label=\"{}\"/>",
                escape(id.as_str()),
                escape(label.as_str())
            );
        }
        Node::Terminate => {
            let _ = writeln!(out, "{pad}<terminate/>");
        }
        Node::Loop { children } => write_container(out, "loop", children, indent),
        Node::Choose { branches } => {
            let _ = writeln!(out, "{pad}<choose mode=\"exclusive\">");
            for b in branches {
                let tag = match b.kind {
                    BranchKind::Alternative => "alternative",
                    BranchKind::Otherwise => "otherwise",
                };
                write_container(out, tag, &b.children, indent + 2);
            }
            let _ = writeln!(out, "{pad}</choose>");
        }
        Node::Parallel { branches } => {
            let _ = writeln!(out, "{pad}<parallel>");
            for b in branches {
                write_container(out, "parallel_branch", &b.children, indent + 2);
            }
            let _ = writeln!(out, "{pad}</parallel>");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn testset(body: &str, endpoints: &str) -> String {
        format!(
            r#"<testset xmlns="http://cpee.org/ns/properties/2.0">
  <endpoints>{endpoints}</endpoints>
  <description><description xmlns="http://cpee.org/ns/description/1.0">{body}</description></description>
</testset>"#
        )
    }

    #[test]
    fn clean_label_examples() {
        assert_eq!(clean_label("Fetch Data?"), "FetchData");
        assert_eq!(clean_label(""), "");
        assert_eq!(clean_label("QC Shop Floor"), "QCShopFloor");
        assert_eq!(clean_label("Kreis 19,2-1"), "Kreis19,2-1");
    }

    #[test]
    fn single_manipulate() {
        let doc = parse_template(&testset(r#"<manipulate id="a1" label="Init"/>"#, "")).unwrap();
        assert_eq!(doc.tree.root, vec![Node::Manipulate { id: "a1".into(), label: "Init".into() }]);
        assert!(doc.endpoints.is_empty());
    }

    #[test]
    fn call_with_endpoint() {
        let xml = testset(
            r#"<call id="a2" endpoint="machine"><parameters><label>Fetch Data?</label><method>:post</method></parameters></call>"#,
            "<machine>https://x/y</machine>",
        );
        let doc = parse_template(&xml).unwrap();
        assert_eq!(
            doc.tree.root,
            vec![Node::Call { id: "a2".into(), label: "Fetch Data?".into(), endpoint: "machine".into() }]
        );
        assert_eq!(doc.endpoints.get("machine").map(String::as_str), Some("https://x/y"));
    }

    #[test]
    fn choose_branch_kinds() {
        let xml = testset(
            r#"<choose mode="exclusive"><alternative condition="x"><manipulate id="a1" label="A"/></alternative><otherwise><manipulate id="a2" label="B"/></otherwise></choose>"#,
            "",
        );
        let doc = parse_template(&xml).unwrap();
        match &doc.tree.root[0] {
            Node::Choose { branches } => {
                assert_eq!(branches.len(), 2);
                assert_eq!(branches[0].kind, BranchKind::Alternative);
                assert_eq!(branches[1].kind, BranchKind::Otherwise);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parallel_branch_is_not_mistaken_for_parallel() {
        let xml = testset(r#"<parallel_branch><manipulate id="a1" label="A"/></parallel_branch>"#, "");
        assert!(matches!(parse_template(&xml), Err(TemplateError::UnknownElement { .. })));
    }

    #[test]
    fn error_cases() {
        assert!(matches!(parse_template("<testset><endpoints/></testset>"), Err(TemplateError::MissingDescription)));
        assert!(matches!(parse_template("<testset"), Err(TemplateError::Xml(_))));
        assert!(matches!(
            parse_template(&testset("<stop id=\"a1\"/>", "")),
            Err(TemplateError::UnknownElement { .. })
        ));
        let xml = testset(r#"<call id="a1" endpoint="nope"><parameters><label>x</label></parameters></call>"#, "");
        assert!(matches!(parse_template(&xml), Err(TemplateError::Tree(TreeError::UnknownEndpoint { .. }))));
        assert!(matches!(
            parse_template(&testset("<choose/>", "")),
            Err(TemplateError::Tree(TreeError::EmptyChoose))
        ));
    }

    #[test]
    fn canonical_xml_round_trip() {
        let xml = testset(
            r#"<manipulate id="a1" label="Init &amp; go"/>
            <loop mode="pre_test"><call id="a2" endpoint="e"><parameters><label>Fetch</label></parameters></call></loop>
            <parallel><parallel_branch><manipulate id="a3" label="x"/></parallel_branch><parallel_branch/></parallel>
            <choose><alternative><terminate/></alternative><otherwise/></choose>"#,
            "<e>https://h/a?b=1&amp;c=2</e>",
        );
        let doc = parse_template(&xml).unwrap();
        let again = parse_template(&doc.to_xml()).unwrap();
        assert_eq!(doc, again);
    }
}
