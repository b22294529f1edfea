//! Conversion of workflow-engine process templates and execution logs into
//! Petri nets and XES logs, and alignment-based conformance checking of the
//! logs against the templates.

pub mod conformance;
pub mod fsutil;
pub mod logs;
pub mod model;
pub mod template;
pub mod transform;

pub use model::{Marking, PetriNet, PlaceId, ProcessTree, Transition, TransitionId};
pub use template::{clean_label, parse_template, TemplateDocument};
pub use transform::{finalize_net, transform_to_net, TransformResult};
