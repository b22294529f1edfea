//! Optimal alignments by A* over the synchronous product of net and trace.
//!
//! Costs: synchronous 0, invisible model 0, visible model 1, log 1. The search
//! must end with the trace consumed and the net in one of its final markings.
//! Among cost-optimal alignments the one with the fewest log moves is chosen,
//! so fitness values do not depend on expansion order.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use super::heuristic::{Bound, TraceBound};
use super::mapping::MappedTrace;
use crate::model::{Marking, PetriNet, TransitionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Synchronous,
    Model,
    Log,
    Invisible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub transition: Option<TransitionId>,
    pub event: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub raw_cost: u32,
}

impl Alignment {
    pub fn count(&self, kind: MoveKind) -> usize {
        self.moves.iter().filter(|m| m.kind == kind).count()
    }

    /// Model-side firing sequence.
    pub fn model_projection(&self) -> Vec<TransitionId> {
        self.moves.iter().filter_map(|m| if m.kind == MoveKind::Log { None } else { m.transition }).collect()
    }

    /// Consumed event indices in order.
    pub fn log_projection(&self) -> Vec<usize> {
        self.moves.iter().filter_map(|m| m.event).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("no final marking is reachable from the initial marking")]
    ModelInfeasible,
    #[error("alignment search exceeded {0} states")]
    SearchLimit(usize),
}

/// States the search may visit before giving up.
pub const DEFAULT_STATE_BUDGET: usize = 2_000_000;

struct Node {
    marking: Marking,
    pos: usize,
    g: u64,
    parent: Option<(usize, Move)>,
    closed: bool,
    /// Computed when the node is first popped.
    bound: Option<Bound>,
    /// Lower bound on the remaining cost; exact heuristic once `bound` is set.
    h: u64,
}

/// (f, trace position, inexact bound, cost, node), reversed where larger wins.
type QueueKey = (u64, Reverse<usize>, bool, Reverse<u64>, usize);

/// Minimum-cost alignment of `trace` against `net`.
pub fn align(net: &PetriNet, trace: &MappedTrace) -> Result<Alignment, AlignError> {
    align_with_budget(net, trace, DEFAULT_STATE_BUDGET)
}

pub fn align_with_budget(net: &PetriNet, trace: &MappedTrace, budget: usize) -> Result<Alignment, AlignError> {
    if net.final_markings.is_empty() {
        return Err(AlignError::ModelInfeasible);
    }
    let n = trace.len();
    // Lexicographic (cost, log moves) packed into one integer.
    let scale = n as u64 + 1;
    let w_model = scale;
    let w_log = scale + 1;
    let mut bounds = TraceBound::new(net, trace, w_model, w_log);
    let eager = eager_transitions(net);

    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<(Marking, usize), usize> = HashMap::new();
    // Ties on f go to the state deepest into the trace, then to exact
    // estimates over inherited ones, then the costliest; plateaus of equally
    // good interleavings are walked depth-first.
    let mut heap: BinaryHeap<Reverse<QueueKey>> = BinaryHeap::new();

    let start = net.initial();
    let Some(b0) = bounds.solve(&start, 0) else {
        return Err(AlignError::ModelInfeasible);
    };
    let h0 = b0.value;
    nodes.push(Node { marking: start.clone(), pos: 0, g: 0, parent: None, closed: false, bound: Some(b0), h: h0 });
    index.insert((start, 0), 0);
    heap.push(Reverse((h0, Reverse(0), false, Reverse(0), 0)));

    while let Some(Reverse((f, _, _, Reverse(g), id))) = heap.pop() {
        if nodes[id].closed || g > nodes[id].g {
            continue;
        }
        let pos = nodes[id].pos;
        if pos == n && net.is_final(&nodes[id].marking) {
            return Ok(reconstruct(&nodes, id, scale));
        }
        if nodes[id].bound.is_none() {
            // The heuristic is consistent, so the inherited estimate never
            // exceeds the exact one; solve only for states that get popped.
            let Some(bound) = bounds.solve(&nodes[id].marking, pos) else {
                nodes[id].closed = true;
                continue;
            };
            let hv = bound.value.max(nodes[id].h);
            nodes[id].bound = Some(bound);
            nodes[id].h = hv;
            if g + hv > f {
                heap.push(Reverse((g + hv, Reverse(pos), false, Reverse(g), id)));
                continue;
            }
        }
        nodes[id].closed = true;
        let hp = nodes[id].h;
        let marking = nodes[id].marking.clone();
        let mut successors: Vec<(Marking, usize, u64, Move)> = Vec::new();
        if let Some(t) = net.enabled(&marking).find(|t| eager[t.uid.0]) {
            let next = net.fire(t, &marking).expect("enabled");
            successors.push((next, pos, 0, Move { kind: MoveKind::Invisible, transition: Some(t.uid), event: None }));
        } else {
            expand(net, trace, &marking, pos, w_model, w_log, &mut successors);
        }
        for (next, npos, w, mv) in successors {
            let ng = g + w;
            match index.entry((next, npos)) {
                Entry::Occupied(e) => {
                    let nid = *e.get();
                    if !nodes[nid].closed && ng < nodes[nid].g {
                        let hv = nodes[nid].h.max(hp.saturating_sub(w));
                        nodes[nid].g = ng;
                        nodes[nid].h = hv;
                        nodes[nid].parent = Some((id, mv));
                        let inherited = nodes[nid].bound.is_none();
                        heap.push(Reverse((ng + hv, Reverse(npos), inherited, Reverse(ng), nid)));
                    }
                }
                Entry::Vacant(e) => {
                    if nodes.len() >= budget {
                        return Err(AlignError::SearchLimit(budget));
                    }
                    let bound = nodes[id].bound.as_ref().and_then(|b| bounds.derive(npos, b, &mv));
                    let hv = bound.as_ref().map_or(hp.saturating_sub(w), |b| b.value);
                    let nid = nodes.len();
                    let inherited = bound.is_none();
                    nodes.push(Node {
                        marking: e.key().0.clone(),
                        pos: npos,
                        g: ng,
                        parent: Some((id, mv)),
                        closed: false,
                        bound,
                        h: hv,
                    });
                    e.insert(nid);
                    heap.push(Reverse((ng + hv, Reverse(npos), inherited, Reverse(ng), nid)));
                }
            }
        }
    }
    Err(AlignError::ModelInfeasible)
}

/// Invisible transitions that may fire as soon as they are enabled: each
/// input place is consumed by nothing else and empty in every final marking,
/// so any completion fires them eventually and the firing commutes forward.
fn eager_transitions(net: &PetriNet) -> Vec<bool> {
    let mut consumers = vec![0usize; net.places.len()];
    for t in &net.transitions {
        for p in &t.inputs {
            consumers[p.0] += 1;
        }
    }
    net.transitions
        .iter()
        .map(|t| {
            !t.visible
                && !t.inputs.is_empty()
                && t.inputs.iter().all(|p| {
                    consumers[p.0] == 1 && !t.outputs.contains(p) && net.final_markings.iter().all(|f| f.0[p.0] == 0)
                })
        })
        .collect()
}

fn expand(
    net: &PetriNet,
    trace: &MappedTrace,
    marking: &Marking,
    pos: usize,
    w_model: u64,
    w_log: u64,
    successors: &mut Vec<(Marking, usize, u64, Move)>,
) {
    if pos < trace.len() {
        successors.push((marking.clone(), pos + 1, w_log, Move { kind: MoveKind::Log, transition: None, event: Some(pos) }));
        for &t in &trace.candidates[pos] {
            if let Some(next) = net.fire(net.transition(t), marking) {
                successors.push((next, pos + 1, 0, Move { kind: MoveKind::Synchronous, transition: Some(t), event: Some(pos) }));
            }
        }
    }
    for t in net.enabled(marking) {
        let next = net.fire(t, marking).expect("enabled");
        let (kind, w) = if t.visible { (MoveKind::Model, w_model) } else { (MoveKind::Invisible, 0) };
        successors.push((next, pos, w, Move { kind, transition: Some(t.uid), event: None }));
    }
}

fn reconstruct(nodes: &[Node], mut id: usize, scale: u64) -> Alignment {
    let g = nodes[id].g;
    let mut moves = Vec::new();
    while let Some((parent, mv)) = nodes[id].parent {
        moves.push(mv);
        id = parent;
    }
    moves.reverse();
    let logs = moves.iter().filter(|m| m.kind == MoveKind::Log).count() as u64;
    let cost = (g - logs) / scale;
    Alignment { moves, raw_cost: cost as u32 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformance::mapping::EventKey;
    use crate::model::{Phase, PlaceId, TransitionOrigin};

    /// p0 -start-> p1 -complete-> p2, final {p2}.
    fn one_call() -> PetriNet {
        let mut n = PetriNet::default();
        let p: Vec<PlaceId> = (0..3).map(|i| n.add_place(format!("p{i}"))).collect();
        n.initial_marking[0] = 1;
        n.add_transition("A_a1_u_start", true, vec![p[0]], vec![p[1]], TransitionOrigin::Unknown);
        n.add_transition("A_a1_u_complete", true, vec![p[1]], vec![p[2]], TransitionOrigin::Unknown);
        n.final_markings.push(Marking::single(3, p[2]));
        n
    }

    fn trace(events: &[usize]) -> MappedTrace {
        MappedTrace {
            keys: events.iter().map(|_| EventKey { key: String::new(), phase: Some(Phase::Start) }).collect(),
            candidates: events
                .iter()
                .map(|&e| if e < 2 { vec![TransitionId(e)] } else { vec![] })
                .collect(),
        }
    }

    #[test]
    fn perfect_fit() {
        let a = align(&one_call(), &trace(&[0, 1])).unwrap();
        assert_eq!(a.raw_cost, 0);
        assert_eq!(a.count(MoveKind::Synchronous), 2);
        assert_eq!(a.moves.len(), 2);
    }

    #[test]
    fn missing_complete_is_a_model_move() {
        let a = align(&one_call(), &trace(&[0])).unwrap();
        assert_eq!(a.raw_cost, 1);
        assert_eq!(a.moves[0].kind, MoveKind::Synchronous);
        assert_eq!(a.moves[1].kind, MoveKind::Model);
    }

    #[test]
    fn trailing_event_is_a_log_move() {
        let a = align(&one_call(), &trace(&[0, 1, 0])).unwrap();
        assert_eq!(a.raw_cost, 1);
        assert_eq!(a.moves.last().unwrap().kind, MoveKind::Log);
        assert_eq!(a.log_projection(), vec![0, 1, 2]);
    }

    #[test]
    fn unreachable_final_marking() {
        let mut net = one_call();
        net.final_markings = vec![Marking(vec![0, 1, 1].into())];
        assert_eq!(align(&net, &trace(&[])), Err(AlignError::ModelInfeasible));
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(align_with_budget(&one_call(), &trace(&[0, 1]), 1), Err(AlignError::SearchLimit(1)));
    }
}
