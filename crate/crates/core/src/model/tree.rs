use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

/// Structural problems in a process tree.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("duplicate task id `{0}`")]
    DuplicateId(String),
    #[error("choose has more than one `otherwise` branch")]
    MultipleOtherwise,
    #[error("choose without branches")]
    EmptyChoose,
    #[error("parallel without branches")]
    EmptyParallel,
    #[error("loop without children")]
    EmptyLoop,
    #[error("element follows a terminate in the same sequence")]
    UnreachableAfterTerminate,
    #[error("terminate inside a parallel branch")]
    TerminateInParallel,
    #[error("loop body ends in a terminate")]
    TerminatingLoopBody,
    #[error("call `{id}` references undeclared endpoint `{endpoint}`")]
    UnknownEndpoint { id: String, endpoint: String },
}

/// One element of a process template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Call { id: String, label: String, endpoint: String },
    Manipulate { id: String, label: String },
    Terminate,
    Loop { children: Vec<Node> },
    Choose { branches: Vec<Branch> },
    Parallel { branches: Vec<ParallelBranch> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchKind {
    Alternative,
    Otherwise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub kind: BranchKind,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParallelBranch {
    pub children: Vec<Node>,
}

/// Endpoint name to URL.
pub type EndpointMap = BTreeMap<String, String>;

/// A template's control flow: the top-level sequence of the description.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessTree {
    pub root: Vec<Node>,
}

/// Element counts used to cross-check the size of a transformed net.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounts {
    pub calls: usize,
    pub manipulates: usize,
    pub terminates: usize,
    pub loops: usize,
    pub chooses: usize,
    pub choose_branches: usize,
    /// Branches of a choose that do not end in a terminate.
    pub live_choose_branches: usize,
    pub parallels: usize,
    pub parallel_branches: usize,
}

impl ProcessTree {
    pub fn new(root: Vec<Node>) -> Self {
        Self { root }
    }

    /// Checks every structural invariant the transformation relies on.
    pub fn validate(&self) -> Result<(), TreeError> {
        let mut ids = HashSet::new();
        validate_seq(&self.root, &mut ids, false)?;
        Ok(())
    }

    /// Checks that every call's endpoint resolves.
    pub fn validate_endpoints(&self, endpoints: &EndpointMap) -> Result<(), TreeError> {
        let mut result = Ok(());
        self.visit(&mut |node| {
            if let Node::Call { id, endpoint, .. } = node {
                if result.is_ok() && !endpoints.contains_key(endpoint) {
                    result = Err(TreeError::UnknownEndpoint {
                        id: id.clone(),
                        endpoint: endpoint.clone(),
                    });
                }
            }
        });
        result
    }

    /// Pre-order traversal over every node.
    pub fn visit<F: FnMut(&Node)>(&self, f: &mut F) {
        fn walk<F: FnMut(&Node)>(nodes: &[Node], f: &mut F) {
            for node in nodes {
                f(node);
                match node {
                    Node::Loop { children } => walk(children, f),
                    Node::Choose { branches } => {
                        for b in branches {
                            walk(&b.children, f);
                        }
                    }
                    Node::Parallel { branches } => {
                        for b in branches {
                            walk(&b.children, f);
                        }
                    }
                    _ => {}
                }
            }
        }
        walk(&self.root, f);
    }

    pub fn counts(&self) -> NodeCounts {
        let mut c = NodeCounts::default();
        self.visit(&mut |node| match node {
            Node::Call { .. } => c.calls += 1,
            Node::Manipulate { .. } => c.manipulates += 1,
            Node::Terminate => c.terminates += 1,
            Node::Loop { .. } => c.loops += 1,
            Node::Choose { branches } => {
                c.chooses += 1;
                c.choose_branches += branches.len();
                c.live_choose_branches += branches.iter().filter(|b| seq_is_live(&b.children)).count();
            }
            Node::Parallel { branches } => {
                c.parallels += 1;
                c.parallel_branches += branches.len();
            }
        });
        c
    }
}

/// Whether control can leave the end of this sequence (it does not end in a
/// terminate on every path).
pub(crate) fn seq_is_live(nodes: &[Node]) -> bool {
    nodes.iter().all(node_is_live)
}

fn node_is_live(node: &Node) -> bool {
    match node {
        Node::Terminate => false,
        Node::Choose { branches } => branches.iter().any(|b| seq_is_live(&b.children)),
        _ => true,
    }
}

fn validate_seq(nodes: &[Node], ids: &mut HashSet<String>, in_parallel: bool) -> Result<(), TreeError> {
    let mut live = true;
    for node in nodes {
        if !live {
            return Err(TreeError::UnreachableAfterTerminate);
        }
        validate_node(node, ids, in_parallel)?;
        live = node_is_live(node);
    }
    Ok(())
}

fn validate_node(node: &Node, ids: &mut HashSet<String>, in_parallel: bool) -> Result<(), TreeError> {
    match node {
        Node::Call { id, .. } | Node::Manipulate { id, .. } => {
            if !ids.insert(id.clone()) {
                return Err(TreeError::DuplicateId(id.clone()));
            }
        }
        Node::Terminate => {
            if in_parallel {
                return Err(TreeError::TerminateInParallel);
            }
        }
        Node::Loop { children } => {
            if children.is_empty() {
                return Err(TreeError::EmptyLoop);
            }
            validate_seq(children, ids, in_parallel)?;
            if !seq_is_live(children) {
                return Err(TreeError::TerminatingLoopBody);
            }
        }
        Node::Choose { branches } => {
            if branches.is_empty() {
                return Err(TreeError::EmptyChoose);
            }
            if branches.iter().filter(|b| b.kind == BranchKind::Otherwise).count() > 1 {
                return Err(TreeError::MultipleOtherwise);
            }
            for b in branches {
                validate_seq(&b.children, ids, in_parallel)?;
            }
        }
        Node::Parallel { branches } => {
            if branches.is_empty() {
                return Err(TreeError::EmptyParallel);
            }
            for b in branches {
                validate_seq(&b.children, ids, true)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(id: &str) -> Node {
        Node::Manipulate { id: id.into(), label: id.into() }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let t = ProcessTree::new(vec![m("a1"), Node::Loop { children: vec![m("a1")] }]);
        assert_eq!(t.validate(), Err(TreeError::DuplicateId("a1".into())));
    }

    #[test]
    fn two_otherwise_branches_are_rejected() {
        let b = || Branch { kind: BranchKind::Otherwise, children: vec![] };
        let t = ProcessTree::new(vec![Node::Choose { branches: vec![b(), b()] }]);
        assert_eq!(t.validate(), Err(TreeError::MultipleOtherwise));
    }

    #[test]
    fn terminate_must_end_its_sequence() {
        let t = ProcessTree::new(vec![Node::Terminate, m("a1")]);
        assert_eq!(t.validate(), Err(TreeError::UnreachableAfterTerminate));

        let choose = Node::Choose {
            branches: vec![
                Branch { kind: BranchKind::Alternative, children: vec![Node::Terminate] },
                Branch { kind: BranchKind::Otherwise, children: vec![m("a2")] },
            ],
        };
        assert!(ProcessTree::new(vec![choose, m("a3")]).validate().is_ok());
    }

    #[test]
    fn terminate_in_parallel_is_rejected() {
        let t = ProcessTree::new(vec![Node::Parallel {
            branches: vec![ParallelBranch { children: vec![Node::Terminate] }],
        }]);
        assert_eq!(t.validate(), Err(TreeError::TerminateInParallel));
    }

    #[test]
    fn empty_containers_are_rejected() {
        assert_eq!(
            ProcessTree::new(vec![Node::Loop { children: vec![] }]).validate(),
            Err(TreeError::EmptyLoop)
        );
        assert_eq!(
            ProcessTree::new(vec![Node::Choose { branches: vec![] }]).validate(),
            Err(TreeError::EmptyChoose)
        );
        assert_eq!(
            ProcessTree::new(vec![Node::Parallel { branches: vec![] }]).validate(),
            Err(TreeError::EmptyParallel)
        );
    }

    #[test]
    fn unknown_endpoint_is_reported() {
        let t = ProcessTree::new(vec![Node::Call { id: "a1".into(), label: "x".into(), endpoint: "e".into() }]);
        let err = t.validate_endpoints(&EndpointMap::new()).unwrap_err();
        assert!(matches!(err, TreeError::UnknownEndpoint { .. }));
    }
}
