//! Plain-text Petri net (TPN) codec.
//!
//! The format lists every place first, then every transition:
//!
//! ```text
//! place p0 init 1;
//! place p1;
//! trans "Fetch_a2_https://x/y_start"
//!   in p0
//!   out p1;
//! ```
//!
//! Transition names run to the end of their line. Names derived from calls
//! are written in double quotes, all other names bare.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::net::{PetriNet, PlaceId, TransitionOrigin};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TpnError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared place `{place}`")]
    UndeclaredPlace { line: usize, place: String },
    #[error("line {line}: place `{place}` declared twice")]
    DuplicatePlace { line: usize, place: String },
}

fn display_name(name: &str, quoted: bool) -> String {
    if quoted {
        format!("\"{name}\"")
    } else {
        name.to_string()
    }
}

/// Writes `net` as TPN text. Pure: equal nets give equal bytes.
pub fn emit_tpn(net: &PetriNet) -> String {
    let mut out = String::new();
    for (i, place) in net.places.iter().enumerate() {
        let tokens = net.initial_marking[i];
        if tokens > 0 {
            let _ = writeln!(out, "place {place} init {tokens};");
        } else {
            let _ = writeln!(out, "place {place};");
        }
    }
    let join = |ps: &[PlaceId]| ps.iter().map(|p| net.places[p.0].as_str()).collect::<Vec<_>>().join(", ");
    for t in &net.transitions {
        let _ = writeln!(out, "trans {}", display_name(&t.name, t.quoted));
        if !t.inputs.is_empty() {
            let _ = writeln!(out, "  in {}", join(&t.inputs));
        }
        if t.outputs.is_empty() {
            out.push_str("  out;\n");
        } else {
            let _ = writeln!(out, "  out {};", join(&t.outputs));
        }
    }
    out
}

struct PendingTransition {
    line: usize,
    name: String,
    quoted: bool,
    inputs: Vec<(String, usize)>,
    outputs: Vec<(String, usize)>,
    saw_in: bool,
    saw_out: bool,
}

fn syntax(line: usize, message: impl Into<String>) -> TpnError {
    TpnError::Syntax { line, message: message.into() }
}

fn split_list(text: &str, line: usize) -> Vec<(String, usize)> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| (s.to_string(), line))
        .collect()
}

/// Parses TPN text as produced by [`emit_tpn`]. Transition visibility and
/// final markings are not part of the format; see
/// [`crate::transform::finalize_net`].
pub fn parse_tpn(text: &str) -> Result<PetriNet, TpnError> {
    let mut places: Vec<(String, u32)> = Vec::new();
    let mut declared: HashMap<String, usize> = HashMap::new();
    let mut transitions: Vec<PendingTransition> = Vec::new();
    let mut open: Option<PendingTransition> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line.trim_end_matches(';'), if line.ends_with(';') { ";" } else { "" }),
        };
        match keyword {
            "place" => {
                if open.is_some() {
                    return Err(syntax(line_no, "place declared inside an unterminated transition"));
                }
                let body = rest
                    .strip_suffix(';')
                    .ok_or_else(|| syntax(line_no, "place declaration must end with `;`"))?
                    .trim();
                let mut parts = body.split_whitespace();
                let name = parts.next().ok_or_else(|| syntax(line_no, "missing place name"))?;
                let name = name.trim_matches('"').to_string();
                let tokens = match (parts.next(), parts.next(), parts.next()) {
                    (None, _, _) => 0,
                    (Some("init"), Some(n), None) => n
                        .parse::<u32>()
                        .map_err(|_| syntax(line_no, format!("invalid token count `{n}`")))?,
                    _ => return Err(syntax(line_no, format!("unexpected text in place declaration `{body}`"))),
                };
                if declared.insert(name.clone(), places.len()).is_some() {
                    return Err(TpnError::DuplicatePlace { line: line_no, place: name });
                }
                places.push((name, tokens));
            }
            "trans" => {
                if open.is_some() {
                    return Err(syntax(line_no, "previous transition not terminated with `;`"));
                }
                if rest.is_empty() {
                    return Err(syntax(line_no, "missing transition name"));
                }
                let (name, quoted) = match rest.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
                    Some(inner) if rest.len() >= 2 => (inner.to_string(), true),
                    _ => (rest.to_string(), false),
                };
                open = Some(PendingTransition {
                    line: line_no,
                    name,
                    quoted,
                    inputs: Vec::new(),
                    outputs: Vec::new(),
                    saw_in: false,
                    saw_out: false,
                });
            }
            "in" | "out" => {
                let t = open
                    .as_mut()
                    .ok_or_else(|| syntax(line_no, format!("`{keyword}` outside a transition")))?;
                let (list, terminated) = match rest.strip_suffix(';') {
                    Some(l) => (l, true),
                    None => (rest, false),
                };
                if keyword == "in" {
                    if t.saw_in || t.saw_out {
                        return Err(syntax(line_no, "unexpected `in`"));
                    }
                    t.saw_in = true;
                    t.inputs = split_list(list, line_no);
                } else {
                    if t.saw_out {
                        return Err(syntax(line_no, "duplicate `out`"));
                    }
                    t.saw_out = true;
                    t.outputs = split_list(list, line_no);
                }
                if terminated {
                    transitions.push(open.take().expect("open transition"));
                }
            }
            other => return Err(syntax(line_no, format!("unknown keyword `{other}`"))),
        }
    }
    if let Some(t) = open {
        return Err(syntax(t.line, format!("transition `{}` not terminated with `;`", t.name)));
    }

    let mut net = PetriNet::default();
    for (name, tokens) in &places {
        let id = net.add_place(name.clone());
        net.initial_marking[id.0] = *tokens;
    }
    let resolve = |refs: &[(String, usize)]| -> Result<Vec<PlaceId>, TpnError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(refs.len());
        for (name, line) in refs {
            let id = *declared
                .get(name)
                .ok_or_else(|| TpnError::UndeclaredPlace { line: *line, place: name.clone() })?;
            if !seen.insert(id) {
                return Err(syntax(*line, format!("place `{name}` listed twice (arc weights are always 1)")));
            }
            out.push(PlaceId(id));
        }
        Ok(out)
    };
    for t in transitions {
        let inputs = resolve(&t.inputs)?;
        let outputs = resolve(&t.outputs)?;
        let origin = TransitionOrigin::from_name(&t.name, t.quoted);
        net.add_transition(t.name, t.quoted, inputs, outputs, origin);
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_net() {
        let net = parse_tpn("place p0 init 1;\nplace p1;\ntrans t\n  in p0\n  out p1;").unwrap();
        assert_eq!(net.places, vec!["p0", "p1"]);
        assert_eq!(net.initial_marking, vec![1, 0]);
        assert_eq!(net.transitions.len(), 1);
        assert_eq!(net.transitions[0].inputs, vec![PlaceId(0)]);
        assert_eq!(net.transitions[0].outputs, vec![PlaceId(1)]);
    }

    #[test]
    fn emits_the_generator_layout() {
        let mut net = PetriNet::default();
        let p0 = net.add_place("p0");
        let p1 = net.add_place("p1");
        net.initial_marking[0] = 1;
        net.add_transition("Init_a1", false, vec![p0], vec![p1], TransitionOrigin::Unknown);
        assert!(emit_tpn(&net).starts_with("place p0 init 1;\nplace p1;\ntrans Init_a1\n  in p0\n  out p1;"));
    }

    #[test]
    fn single_place_net() {
        let mut net = PetriNet::default();
        net.add_place("p0");
        net.initial_marking[0] = 1;
        assert_eq!(emit_tpn(&net), "place p0 init 1;\n");
    }

    #[test]
    fn undeclared_place_is_an_error() {
        let err = parse_tpn("place p0 init 1;\ntrans t\n  in p0\n  out p9;").unwrap_err();
        assert_eq!(err, TpnError::UndeclaredPlace { line: 4, place: "p9".into() });
    }

    #[test]
    fn quoted_and_multi_place_lists() {
        let text = "place p0 init 1;\nplace p1;\nplace p2;\ntrans \"A_a1_https://h/_start\"\n  in p0\n  out p1, p2;\n";
        let net = parse_tpn(text).unwrap();
        assert!(net.transitions[0].quoted);
        assert_eq!(net.transitions[0].name, "A_a1_https://h/_start");
        assert_eq!(net.transitions[0].outputs.len(), 2);
        assert_eq!(emit_tpn(&net), text);
    }

    #[test]
    fn general_init_counts_are_accepted() {
        let net = parse_tpn("place a init 3;\nplace b;\n").unwrap();
        assert_eq!(net.initial_marking, vec![3, 0]);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_tpn("place p0 init 1;\nbogus p1;\n").unwrap_err();
        assert!(matches!(err, TpnError::Syntax { line: 2, .. }));
        let err = parse_tpn("place p0;\ntrans t\n  in p0\n").unwrap_err();
        assert!(matches!(err, TpnError::Syntax { line: 2, .. }));
        let err = parse_tpn("place p0\n").unwrap_err();
        assert!(matches!(err, TpnError::Syntax { line: 1, .. }));
    }
}
