//! Tree interpreter producing conforming executions of a process tree.

use rand::seq::SliceRandom;
use rand::Rng;

use super::net::Phase;
use super::tree::{EndpointMap, Node, ProcessTree};

/// One logged task event of a simulated execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    /// Raw (uncleaned) task label.
    pub label: String,
    pub id: String,
    /// Endpoint URL; empty for manipulate tasks.
    pub endpoint: String,
    pub phase: Phase,
}

impl SimEvent {
    /// Engine lifecycle transition matching the phase.
    pub fn cpee_lifecycle(&self) -> &'static str {
        match self.phase {
            Phase::Start => "activity/calling",
            Phase::Complete => "activity/done",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    /// Loop bodies run between 1 and this many times.
    pub max_loop_iterations: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { max_loop_iterations: 3 }
    }
}

/// Runs the tree once: choices are uniform, loops iterate at least once,
/// parallel branches interleave uniformly at random, terminate stops the run.
pub fn simulate<R: Rng + ?Sized>(
    tree: &ProcessTree,
    endpoints: &EndpointMap,
    options: SimulationOptions,
    rng: &mut R,
) -> Vec<SimEvent> {
    let mut out = Vec::new();
    run_seq(&tree.root, endpoints, options, rng, &mut out);
    out
}

/// Returns `false` once a terminate has been executed.
fn run_seq<R: Rng + ?Sized>(
    nodes: &[Node],
    endpoints: &EndpointMap,
    options: SimulationOptions,
    rng: &mut R,
    out: &mut Vec<SimEvent>,
) -> bool {
    for node in nodes {
        if !run_node(node, endpoints, options, rng, out) {
            return false;
        }
    }
    true
}

fn run_node<R: Rng + ?Sized>(
    node: &Node,
    endpoints: &EndpointMap,
    options: SimulationOptions,
    rng: &mut R,
    out: &mut Vec<SimEvent>,
) -> bool {
    match node {
        Node::Call { id, label, endpoint } => {
            let url = endpoints.get(endpoint).cloned().unwrap_or_default();
            for phase in [Phase::Start, Phase::Complete] {
                out.push(SimEvent { label: label.clone(), id: id.clone(), endpoint: url.clone(), phase });
            }
            true
        }
        Node::Manipulate { id, label } => {
            out.push(SimEvent {
                label: label.clone(),
                id: id.clone(),
                endpoint: String::new(),
                phase: Phase::Complete,
            });
            true
        }
        Node::Terminate => false,
        Node::Loop { children } => {
            let iterations = rng.gen_range(1..=options.max_loop_iterations.max(1));
            for _ in 0..iterations {
                if !run_seq(children, endpoints, options, rng, out) {
                    return false;
                }
            }
            true
        }
        Node::Choose { branches } => {
            let branch = branches.choose(rng).expect("validated choose has branches");
            run_seq(&branch.children, endpoints, options, rng, out)
        }
        Node::Parallel { branches } => {
            let mut runs: Vec<std::vec::IntoIter<SimEvent>> = branches
                .iter()
                .map(|b| {
                    let mut v = Vec::new();
                    run_seq(&b.children, endpoints, options, rng, &mut v);
                    v.into_iter()
                })
                .collect();
            // Uniform interleaving: pick the next branch weighted by what it has left.
            let mut remaining: usize = runs.iter().map(ExactSizeIterator::len).sum();
            while remaining > 0 {
                let mut pick = rng.gen_range(0..remaining);
                let chosen = runs
                    .iter()
                    .position(|run| {
                        if pick < run.len() {
                            true
                        } else {
                            pick -= run.len();
                            false
                        }
                    })
                    .expect("pick is below the remaining count");
                out.extend(runs[chosen].next());
                remaining -= 1;
            }
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tree::{Branch, BranchKind, ParallelBranch};
    use rand::SeedableRng;

    fn m(id: &str) -> Node {
        Node::Manipulate { id: id.into(), label: format!("L{id}") }
    }

    #[test]
    fn parallel_interleaving_preserves_branch_order() {
        let tree = ProcessTree::new(vec![Node::Parallel {
            branches: vec![
                ParallelBranch { children: vec![m("a1"), m("a2")] },
                ParallelBranch { children: vec![m("b1"), m("b2")] },
            ],
        }]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let evs = simulate(&tree, &EndpointMap::new(), SimulationOptions::default(), &mut rng);
            let pos = |id: &str| evs.iter().position(|e| e.id == id).unwrap();
            assert_eq!(evs.len(), 4);
            assert!(pos("a1") < pos("a2"));
            assert!(pos("b1") < pos("b2"));
        }
    }

    #[test]
    fn terminate_stops_the_run() {
        let tree = ProcessTree::new(vec![
            Node::Choose {
                branches: vec![Branch { kind: BranchKind::Alternative, children: vec![m("a1"), Node::Terminate] }],
            },
        ]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let evs = simulate(&tree, &EndpointMap::new(), SimulationOptions::default(), &mut rng);
        assert_eq!(evs.len(), 1);
    }
}
