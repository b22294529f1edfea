//! Event-to-transition mapping.

use std::fmt;
use std::str::FromStr;

use crate::logs::XesTrace;
use crate::model::{Phase, PetriNet, TransitionId, TransitionOrigin};
use crate::template::clean_label;

/// Which event attribute identifies a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MappingSpec {
    /// Cleaned `concept:name` plus start/complete.
    #[default]
    Label,
    /// `cpee:endpoint` plus calling/done as start/complete.
    Endpoint,
}

impl FromStr for MappingSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "label" => Ok(MappingSpec::Label),
            "endpoint" => Ok(MappingSpec::Endpoint),
            other => Err(format!("unknown mapping `{other}` (expected label or endpoint)")),
        }
    }
}

impl fmt::Display for MappingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MappingSpec::Label => "label",
            MappingSpec::Endpoint => "endpoint",
        })
    }
}

/// Identity of an event under a mapping.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventKey {
    pub key: String,
    pub phase: Option<Phase>,
}

impl fmt::Display for EventKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            Some(p) => write!(f, "{}+{}", self.key, p.as_str()),
            None => f.write_str(&self.key),
        }
    }
}

fn phase_from_lifecycle(lifecycle: Option<&str>) -> Option<Phase> {
    match lifecycle? {
        "start" => Some(Phase::Start),
        "complete" => Some(Phase::Complete),
        _ => None,
    }
}

fn phase_from_cpee(lifecycle: Option<&str>) -> Option<Phase> {
    match lifecycle? {
        "activity/calling" => Some(Phase::Start),
        "activity/done" => Some(Phase::Complete),
        _ => None,
    }
}

/// Key of one XES event given its attribute lookup.
pub fn event_key<'a>(get: impl Fn(&str) -> Option<&'a str>, spec: MappingSpec) -> EventKey {
    let lifecycle = phase_from_lifecycle(get("lifecycle:transition"));
    let cpee = phase_from_cpee(get("cpee:lifecycle:transition"));
    match spec {
        MappingSpec::Label => EventKey {
            key: clean_label(get("concept:name").unwrap_or("")),
            phase: lifecycle.or(cpee),
        },
        MappingSpec::Endpoint => EventKey {
            key: get("cpee:endpoint").unwrap_or("").to_string(),
            phase: cpee.or(lifecycle),
        },
    }
}

pub fn trace_keys(trace: &XesTrace, spec: MappingSpec) -> Vec<EventKey> {
    trace.events.iter().map(|e| event_key(|k| e.get(k), spec)).collect()
}

/// Does a visible transition carry this key?
pub fn transition_matches(origin: &TransitionOrigin, name: &str, key: &EventKey, spec: MappingSpec) -> bool {
    match (spec, origin) {
        (MappingSpec::Label, TransitionOrigin::Call { label, phase, .. }) => {
            *label == key.key && Some(*phase) == key.phase
        }
        // Tasks log a single event, so the phase is not compared.
        (MappingSpec::Label, TransitionOrigin::Task { label, .. }) => *label == key.key,
        (MappingSpec::Label, TransitionOrigin::Unknown) => name == key.key,
        (MappingSpec::Endpoint, TransitionOrigin::Call { url, phase, .. }) => {
            !key.key.is_empty() && *url == key.key && Some(*phase) == key.phase
        }
        _ => false,
    }
}

/// A trace with, per event, the transitions it may synchronize with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedTrace {
    pub keys: Vec<EventKey>,
    /// Empty for unmapped events, which can only be log moves.
    pub candidates: Vec<Vec<TransitionId>>,
}

impl MappedTrace {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn unmapped(&self) -> usize {
        self.candidates.iter().filter(|c| c.is_empty()).count()
    }
}

pub fn map_keys(keys: Vec<EventKey>, net: &PetriNet, spec: MappingSpec) -> MappedTrace {
    let candidates = keys
        .iter()
        .map(|k| {
            net.transitions
                .iter()
                .filter(|t| t.visible && transition_matches(&t.origin, &t.name, k, spec))
                .map(|t| t.uid)
                .collect()
        })
        .collect();
    MappedTrace { keys, candidates }
}

pub fn map_trace(trace: &XesTrace, spec: MappingSpec, net: &PetriNet) -> MappedTrace {
    map_keys(trace_keys(trace, spec), net, spec)
}
