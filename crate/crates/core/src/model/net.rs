use std::collections::HashMap;
use std::fmt;

/// Index of a place within its net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub usize);

/// Unique transition identifier; names may repeat, uids never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId(pub usize);

/// Lifecycle half of a call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Start,
    Complete,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Start => "start",
            Phase::Complete => "complete",
        }
    }
}

/// Routing transitions introduced by the template transformation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HelperKind {
    Parallel,
    ParallelBranch,
    ClosingParallel,
    Alternative,
    ClosingDecision,
    Termination,
    Loop,
    ClosingLoop,
    Other(String),
}

impl HelperKind {
    pub fn name(&self) -> &str {
        match self {
            HelperKind::Parallel => "x_parallel",
            HelperKind::ParallelBranch => "x_parallel_branch",
            HelperKind::ClosingParallel => "x_closing_parallel",
            HelperKind::Alternative => "x_alternative",
            HelperKind::ClosingDecision => "x_closing_decision",
            HelperKind::Termination => "x_termination",
            HelperKind::Loop => "x_loop",
            HelperKind::ClosingLoop => "x_closing_loop",
            HelperKind::Other(s) => s,
        }
    }

    fn from_name(name: &str) -> Self {
        match name {
            "x_parallel" => HelperKind::Parallel,
            "x_parallel_branch" => HelperKind::ParallelBranch,
            "x_closing_parallel" => HelperKind::ClosingParallel,
            "x_alternative" => HelperKind::Alternative,
            "x_closing_decision" => HelperKind::ClosingDecision,
            "x_termination" => HelperKind::Termination,
            "x_loop" => HelperKind::Loop,
            "x_closing_loop" => HelperKind::ClosingLoop,
            other => HelperKind::Other(other.to_string()),
        }
    }
}

/// What template element a transition stands for. Used for event mapping.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TransitionOrigin {
    /// One half of a call: cleaned label, task id, endpoint URL.
    Call { label: String, id: String, url: String, phase: Phase },
    /// A manipulate task: cleaned label and task id.
    Task { label: String, id: String },
    Helper(HelperKind),
    /// A name that follows none of the generator's conventions.
    Unknown,
}

/// Is `s` a task identifier as the workflow engine assigns them (`a17`)?
fn looks_like_task_id(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && s.len() > 1
        && s.chars().all(|c| c.is_ascii_alphanumeric())
        && s.chars().any(|c| c.is_ascii_digit())
}

impl TransitionOrigin {
    /// Recovers the origin from a transition name as written by the
    /// transformation (`<label>_<id>_<url>_start`, `<label>_<id>`, `x_*`).
    ///
    /// Labels never contain spaces; when a label itself contains `_`, the
    /// task id is taken to be the last segment that looks like an engine id
    /// and precedes the URL.
    pub fn from_name(name: &str, quoted: bool) -> Self {
        if name.starts_with("x_") {
            return TransitionOrigin::Helper(HelperKind::from_name(name));
        }
        let phase = if let Some(rest) = name.strip_suffix("_start") {
            Some((rest, Phase::Start))
        } else {
            name.strip_suffix("_complete").map(|rest| (rest, Phase::Complete))
        };
        if let Some((rest, phase)) = phase {
            if quoted || rest.contains("://") {
                if let Some((label, id, url)) = split_call_name(rest) {
                    return TransitionOrigin::Call { label, id, url, phase };
                }
            }
        }
        if !quoted {
            if let Some((label, id)) = name.rsplit_once('_') {
                if looks_like_task_id(id) {
                    return TransitionOrigin::Task { label: label.to_string(), id: id.to_string() };
                }
            }
        }
        TransitionOrigin::Unknown
    }

    pub fn is_helper(&self) -> bool {
        matches!(self, TransitionOrigin::Helper(_))
    }
}

/// Splits `<label>_<id>_<url>`.
fn split_call_name(rest: &str) -> Option<(String, String, String)> {
    let segments: Vec<&str> = rest.split('_').collect();
    if segments.len() < 3 {
        return None;
    }
    // Prefer the split where the URL starts with a scheme.
    let url_start = (2..segments.len()).find(|&i| {
        let s = segments[i];
        s.contains("://") && looks_like_task_id(segments[i - 1])
    });
    let id_pos = match url_start {
        Some(i) => i - 1,
        None => (1..segments.len() - 1).find(|&i| looks_like_task_id(segments[i])).unwrap_or(1),
    };
    Some((
        segments[..id_pos].join("_"),
        segments[id_pos].to_string(),
        segments[id_pos + 1..].join("_"),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub uid: TransitionId,
    pub name: String,
    /// Emitted in double quotes in TPN text.
    pub quoted: bool,
    pub visible: bool,
    pub inputs: Vec<PlaceId>,
    pub outputs: Vec<PlaceId>,
    pub origin: TransitionOrigin,
}

/// Token counts per place, dense over the net's places.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(pub Box<[u32]>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![0; places].into_boxed_slice())
    }

    pub fn single(places: usize, place: PlaceId) -> Self {
        let mut m = Self::empty(places);
        m.0[place.0] = 1;
        m
    }

    pub fn tokens(&self, place: PlaceId) -> u32 {
        self.0[place.0]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&t| t as u64).sum()
    }
}

/// A place/transition net with unit arc weights.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial_marking: Vec<u32>,
    pub final_markings: Vec<Marking>,
}

impl PetriNet {
    pub fn add_place(&mut self, name: impl Into<String>) -> PlaceId {
        self.places.push(name.into());
        self.initial_marking.push(0);
        PlaceId(self.places.len() - 1)
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        quoted: bool,
        inputs: Vec<PlaceId>,
        outputs: Vec<PlaceId>,
        origin: TransitionOrigin,
    ) -> TransitionId {
        let uid = TransitionId(self.transitions.len());
        self.transitions.push(Transition {
            uid,
            name: name.into(),
            quoted,
            visible: true,
            inputs,
            outputs,
            origin,
        });
        uid
    }

    pub fn transition(&self, id: TransitionId) -> &Transition {
        &self.transitions[id.0]
    }

    pub fn place_index(&self) -> HashMap<&str, PlaceId> {
        self.places.iter().enumerate().map(|(i, p)| (p.as_str(), PlaceId(i))).collect()
    }

    pub fn initial(&self) -> Marking {
        Marking(self.initial_marking.clone().into_boxed_slice())
    }

    pub fn is_enabled(&self, t: &Transition, marking: &Marking) -> bool {
        t.inputs.iter().all(|p| marking.0[p.0] > 0)
    }

    /// Fires `t`, or returns `None` when it is not enabled.
    pub fn fire(&self, t: &Transition, marking: &Marking) -> Option<Marking> {
        if !self.is_enabled(t, marking) {
            return None;
        }
        let mut next = marking.0.to_vec();
        for p in &t.inputs {
            next[p.0] -= 1;
        }
        for p in &t.outputs {
            next[p.0] += 1;
        }
        Some(Marking(next.into_boxed_slice()))
    }

    pub fn enabled<'a>(&'a self, marking: &'a Marking) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| self.is_enabled(t, marking))
    }

    /// Places without outgoing arcs.
    pub fn sink_places(&self) -> Vec<PlaceId> {
        let mut has_out = vec![false; self.places.len()];
        for t in &self.transitions {
            for p in &t.inputs {
                has_out[p.0] = true;
            }
        }
        (0..self.places.len()).filter(|&i| !has_out[i]).map(PlaceId).collect()
    }

    /// Places without incoming arcs.
    pub fn source_places(&self) -> Vec<PlaceId> {
        let mut has_in = vec![false; self.places.len()];
        for t in &self.transitions {
            for p in &t.outputs {
                has_in[p.0] = true;
            }
        }
        (0..self.places.len()).filter(|&i| !has_in[i]).map(PlaceId).collect()
    }

    pub fn is_final(&self, marking: &Marking) -> bool {
        self.final_markings.iter().any(|m| m == marking)
    }

    pub fn visible_count(&self) -> usize {
        self.transitions.iter().filter(|t| t.visible).count()
    }

    /// Same place names in the same order, same initial marking, and the
    /// same transitions (name and arc sets) in the same order.
    pub fn is_isomorphic_to(&self, other: &PetriNet) -> bool {
        fn arcs(net: &PetriNet, ps: &[PlaceId]) -> Vec<String> {
            let mut v: Vec<String> = ps.iter().map(|p| net.places[p.0].clone()).collect();
            v.sort();
            v
        }
        self.places == other.places
            && self.initial_marking == other.initial_marking
            && self.transitions.len() == other.transitions.len()
            && self.transitions.iter().zip(&other.transitions).all(|(a, b)| {
                a.name == b.name
                    && arcs(self, &a.inputs) == arcs(other, &b.inputs)
                    && arcs(self, &a.outputs) == arcs(other, &b.outputs)
            })
    }

    /// Checks that every arc endpoint is a declared place.
    pub fn check_arcs(&self) -> Result<(), String> {
        for t in &self.transitions {
            for p in t.inputs.iter().chain(&t.outputs) {
                if p.0 >= self.places.len() {
                    return Err(format!("transition `{}` references place #{}", t.name, p.0));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        let mut first = true;
        for (i, &t) in self.0.iter().enumerate() {
            if t > 0 {
                if !first {
                    write!(f, ", ")?;
                }
                first = false;
                write!(f, "p#{i}:{t}")?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_of_call_names() {
        let o = TransitionOrigin::from_name("FetchData_a2_https://x/y_start", true);
        assert_eq!(
            o,
            TransitionOrigin::Call {
                label: "FetchData".into(),
                id: "a2".into(),
                url: "https://x/y".into(),
                phase: Phase::Start
            }
        );
        let o = TransitionOrigin::from_name("Measure_Part_a12_https://h/some_path/_complete", true);
        assert_eq!(
            o,
            TransitionOrigin::Call {
                label: "Measure_Part".into(),
                id: "a12".into(),
                url: "https://h/some_path/".into(),
                phase: Phase::Complete
            }
        );
    }

    #[test]
    fn origin_of_task_and_helper_names() {
        assert_eq!(
            TransitionOrigin::from_name("Init_a1", false),
            TransitionOrigin::Task { label: "Init".into(), id: "a1".into() }
        );
        assert_eq!(
            TransitionOrigin::from_name("x_closing_decision", false),
            TransitionOrigin::Helper(HelperKind::ClosingDecision)
        );
        assert_eq!(TransitionOrigin::from_name("t", false), TransitionOrigin::Unknown);
    }

    #[test]
    fn firing_consumes_and_produces() {
        let mut net = PetriNet::default();
        let p0 = net.add_place("p0");
        let p1 = net.add_place("p1");
        net.initial_marking[0] = 1;
        let t = net.add_transition("t", false, vec![p0], vec![p1], TransitionOrigin::Unknown);
        let m = net.initial();
        let next = net.fire(net.transition(t), &m).unwrap();
        assert_eq!(next.tokens(p0), 0);
        assert_eq!(next.tokens(p1), 1);
        assert!(net.fire(net.transition(t), &next).is_none());
        assert_eq!(net.sink_places(), vec![p1]);
        assert_eq!(net.source_places(), vec![p0]);
    }
}
