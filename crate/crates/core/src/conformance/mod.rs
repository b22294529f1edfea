//! Alignment-based conformance checking of logs against finalized nets.

mod align;
mod fitness;
mod heuristic;
mod mapping;
mod table;

pub use align::{align, align_with_budget, AlignError, Alignment, Move, MoveKind, DEFAULT_STATE_BUDGET};
pub use fitness::{fitness, fitness_from_costs, FitnessTriple, Metric, Replayer};
pub use mapping::{event_key, map_keys, map_trace, trace_keys, transition_matches, EventKey, MappedTrace, MappingSpec};
pub use table::{
    assign_template, build_fitness_table, write_fitness_csv, write_groups_csv, Assignment, FitnessTable, TableRow,
    Unassignable,
};
