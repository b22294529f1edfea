//! Process trees, Petri nets and the TPN text format.

mod net;
pub mod random;
pub mod simulate;
pub mod tpn;
mod tree;

pub use net::{HelperKind, Marking, PetriNet, Phase, PlaceId, Transition, TransitionId, TransitionOrigin};
pub use tpn::{emit_tpn, parse_tpn, TpnError};
pub use tree::{Branch, BranchKind, EndpointMap, Node, NodeCounts, ParallelBranch, ProcessTree, TreeError};
