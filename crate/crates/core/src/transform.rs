//! Process tree to Petri net transformation.
//!
//! Every construct consumes the current flow place and yields the place the
//! flow continues from:
//!
//! * call: `<label>_<id>_<url>_start` and `..._complete` with a place after each
//! * manipulate: `<label>_<id>` with a place after it
//! * terminate: `x_termination` into a place without outgoing arcs
//! * loop: `x_loop` into the body, `x_closing_loop` from the body end back to
//!   the body start; the flow continues from the body end (do-while)
//! * choose: one `x_alternative` per branch, one `x_closing_decision` per
//!   branch that does not terminate, all converging on a merge place
//! * parallel: `x_parallel` fork, `x_parallel_branch` per branch,
//!   `x_closing_parallel` join

use thiserror::Error;

use crate::model::{
    HelperKind, Marking, Node, PetriNet, Phase, PlaceId, ProcessTree, TransitionId, TransitionOrigin, TreeError,
};
use crate::template::{clean_label, TemplateDocument};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("net has no place without outgoing arcs, so no final marking can be derived")]
    NoSinkPlace,
}

/// A transformed template before finalization.
#[derive(Debug, Clone)]
pub struct TransformResult {
    pub net: PetriNet,
    /// Where the main flow ends; `None` when every path terminates.
    pub end_place: Option<PlaceId>,
    /// Places entered by `x_termination`.
    pub terminate_sinks: Vec<PlaceId>,
}

impl TransformResult {
    /// Transition uid to origin.
    pub fn transition_index(&self) -> impl Iterator<Item = (TransitionId, &TransitionOrigin)> {
        self.net.transitions.iter().map(|t| (t.uid, &t.origin))
    }
}

struct Builder<'a> {
    net: PetriNet,
    doc: &'a TemplateDocument,
    terminate_sinks: Vec<PlaceId>,
}

impl Builder<'_> {
    fn place(&mut self) -> PlaceId {
        let name = format!("p{}", self.net.places.len());
        self.net.add_place(name)
    }

    fn helper(&mut self, kind: HelperKind, inputs: Vec<PlaceId>, outputs: Vec<PlaceId>) {
        let name = kind.name().to_string();
        self.net.add_transition(name, false, inputs, outputs, TransitionOrigin::Helper(kind));
    }

    fn seq(&mut self, nodes: &[Node], mut at: PlaceId) -> Result<Option<PlaceId>, TreeError> {
        for node in nodes {
            match self.node(node, at)? {
                Some(next) => at = next,
                None => return Ok(None),
            }
        }
        Ok(Some(at))
    }

    fn node(&mut self, node: &Node, at: PlaceId) -> Result<Option<PlaceId>, TreeError> {
        match node {
            Node::Call { id, label, endpoint } => {
                let url = self
                    .doc
                    .endpoints
                    .get(endpoint)
                    .ok_or_else(|| TreeError::UnknownEndpoint { id: id.clone(), endpoint: endpoint.clone() })?
                    .clone();
                let label = clean_label(label);
                let mut current = at;
                for phase in [Phase::Start, Phase::Complete] {
                    let next = self.place();
                    let name = format!("{label}_{id}_{url}_{}", phase.as_str());
                    let origin = TransitionOrigin::Call { label: label.clone(), id: id.clone(), url: url.clone(), phase };
                    self.net.add_transition(name, true, vec![current], vec![next], origin);
                    current = next;
                }
                Ok(Some(current))
            }
            Node::Manipulate { id, label } => {
                let next = self.place();
                let label = clean_label(label);
                let origin = TransitionOrigin::Task { label: label.clone(), id: id.clone() };
                self.net.add_transition(format!("{label}_{id}"), false, vec![at], vec![next], origin);
                Ok(Some(next))
            }
            Node::Terminate => {
                let sink = self.place();
                self.helper(HelperKind::Termination, vec![at], vec![sink]);
                self.terminate_sinks.push(sink);
                Ok(None)
            }
            Node::Loop { children } => {
                let body_start = self.place();
                self.helper(HelperKind::Loop, vec![at], vec![body_start]);
                let body_end = self.seq(children, body_start)?.ok_or(TreeError::TerminatingLoopBody)?;
                self.helper(HelperKind::ClosingLoop, vec![body_end], vec![body_start]);
                Ok(Some(body_end))
            }
            Node::Choose { branches } => {
                let mut ends = Vec::new();
                for branch in branches {
                    let start = self.place();
                    self.helper(HelperKind::Alternative, vec![at], vec![start]);
                    if let Some(end) = self.seq(&branch.children, start)? {
                        ends.push(end);
                    }
                }
                if ends.is_empty() {
                    return Ok(None);
                }
                let merge = self.place();
                for end in ends {
                    self.helper(HelperKind::ClosingDecision, vec![end], vec![merge]);
                }
                Ok(Some(merge))
            }
            Node::Parallel { branches } => {
                let forks: Vec<PlaceId> = branches.iter().map(|_| self.place()).collect();
                self.helper(HelperKind::Parallel, vec![at], forks.clone());
                let mut ends = Vec::new();
                for (branch, fork) in branches.iter().zip(forks) {
                    let start = self.place();
                    self.helper(HelperKind::ParallelBranch, vec![fork], vec![start]);
                    ends.push(self.seq(&branch.children, start)?.ok_or(TreeError::TerminateInParallel)?);
                }
                let join = self.place();
                self.helper(HelperKind::ClosingParallel, ends, vec![join]);
                Ok(Some(join))
            }
        }
    }
}

/// Builds the Petri net of a parsed template. Place `p0` carries the only
/// initial token.
pub fn transform_to_net(doc: &TemplateDocument) -> Result<TransformResult, TransformError> {
    doc.tree.validate()?;
    let mut b = Builder { net: PetriNet::default(), doc, terminate_sinks: Vec::new() };
    let p0 = b.place();
    b.net.initial_marking[p0.0] = 1;
    let end_place = b.seq(&doc.tree.root, p0)?;
    Ok(TransformResult { net: b.net, end_place, terminate_sinks: b.terminate_sinks })
}

/// Transforms a bare tree; calls resolve their endpoint through `endpoints`.
pub fn transform_tree(
    tree: &ProcessTree,
    endpoints: &crate::model::EndpointMap,
) -> Result<TransformResult, TransformError> {
    let doc = TemplateDocument { tree: tree.clone(), endpoints: endpoints.clone(), source_path: String::new() };
    transform_to_net(&doc)
}

fn hide_helpers(net: &mut PetriNet) {
    for t in &mut net.transitions {
        t.visible = !t.name.starts_with("x_");
    }
}

impl TransformResult {
    /// Hides `x_*` helpers and sets the final markings: one token on the end
    /// of the main flow, or one token on any terminate sink.
    pub fn finalize(self) -> PetriNet {
        let mut net = self.net;
        hide_helpers(&mut net);
        let n = net.places.len();
        let mut finals: Vec<Marking> = self.end_place.iter().chain(&self.terminate_sinks).map(|&p| Marking::single(n, p)).collect();
        finals.dedup();
        net.final_markings = finals;
        net
    }
}

/// Finalizes a net known only from its structure (e.g. parsed TPN text):
/// `x_*` transitions become invisible and every place without outgoing arcs
/// yields one final marking with a single token on it.
pub fn finalize_net(mut net: PetriNet) -> Result<PetriNet, TransformError> {
    hide_helpers(&mut net);
    let sinks = net.sink_places();
    if sinks.is_empty() {
        return Err(TransformError::NoSinkPlace);
    }
    let n = net.places.len();
    net.final_markings = sinks.into_iter().map(|p| Marking::single(n, p)).collect();
    Ok(net)
}
