//! Random well-formed process trees, for property tests and synthetic data.

use rand::seq::SliceRandom;
use rand::Rng;

use super::tree::{seq_is_live, Branch, BranchKind, EndpointMap, Node, ParallelBranch, ProcessTree};

#[derive(Debug, Clone, Copy)]
pub struct TreeShape {
    /// Nesting depth of loop/choose/parallel.
    pub max_depth: usize,
    /// Upper bound for sequence length and branch count.
    pub max_width: usize,
    /// Distinct endpoint URLs calls draw from.
    pub endpoints: usize,
}

impl Default for TreeShape {
    fn default() -> Self {
        Self { max_depth: 4, max_width: 3, endpoints: 4 }
    }
}

const WORDS: [&str; 8] = ["Fetch", "Init", "Measure", "Detect Start", "Check?", "Load Part", "Store", "Wait"];

struct Gen<'r, R: Rng + ?Sized> {
    rng: &'r mut R,
    shape: TreeShape,
    next_id: usize,
}

impl<R: Rng + ?Sized> Gen<'_, R> {
    fn leaf(&mut self) -> Node {
        self.next_id += 1;
        let id = format!("a{}", self.next_id);
        let word = WORDS.choose(self.rng).expect("non-empty");
        let label = format!("{word} {}", self.next_id);
        if self.rng.gen_bool(0.6) {
            let endpoint = format!("e{}", self.rng.gen_range(0..self.shape.endpoints.max(1)));
            Node::Call { id, label, endpoint }
        } else {
            Node::Manipulate { id, label }
        }
    }

    fn width(&mut self) -> usize {
        self.rng.gen_range(1..=self.shape.max_width.max(1))
    }

    /// A sequence that stops after its first dead node.
    fn seq(&mut self, depth: usize, in_parallel: bool) -> Vec<Node> {
        let len = self.width();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let node = self.node(depth, in_parallel);
            let dead = !seq_is_live(std::slice::from_ref(&node));
            out.push(node);
            if dead {
                break;
            }
        }
        out
    }

    fn node(&mut self, depth: usize, in_parallel: bool) -> Node {
        let roll = self.rng.gen_range(0..10);
        if depth == 0 || roll < 4 {
            return self.leaf();
        }
        match roll {
            4 if !in_parallel => Node::Terminate,
            4 | 5 => {
                let mut children = self.seq(depth - 1, in_parallel);
                if !seq_is_live(&children) {
                    children.pop();
                    children.push(self.leaf());
                }
                Node::Loop { children }
            }
            6 | 7 => {
                let n = self.width().max(2);
                let otherwise = self.rng.gen_bool(0.5);
                let branches = (0..n)
                    .map(|i| Branch {
                        kind: if otherwise && i == n - 1 { BranchKind::Otherwise } else { BranchKind::Alternative },
                        children: self.seq(depth - 1, in_parallel),
                    })
                    .collect();
                Node::Choose { branches }
            }
            _ => {
                let n = self.width().max(2);
                let branches = (0..n).map(|_| ParallelBranch { children: self.seq(depth - 1, true) }).collect();
                Node::Parallel { branches }
            }
        }
    }
}

/// A valid tree and an endpoint map covering its calls.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, shape: TreeShape) -> (ProcessTree, EndpointMap) {
    let mut g = Gen { rng, shape, next_id: 0 };
    let root = g.seq(shape.max_depth, false);
    let endpoints = (0..shape.endpoints.max(1))
        .map(|k| (format!("e{k}"), format!("https://example.org/service/{k}/")))
        .collect();
    (ProcessTree::new(root), endpoints)
}
