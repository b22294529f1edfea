//! Move-model, move-log and trace fitness.

use super::align::{align, AlignError, Alignment, MoveKind};
use super::mapping::MappedTrace;
use crate::model::PetriNet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessTriple {
    pub move_model: f64,
    pub move_log: f64,
    pub trace: f64,
}

impl FitnessTriple {
    pub const PERFECT: FitnessTriple = FitnessTriple { move_model: 1.0, move_log: 1.0, trace: 1.0 };

    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::MoveModel => self.move_model,
            Metric::MoveLog => self.move_log,
            Metric::Trace => self.trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MoveModel,
    MoveLog,
    Trace,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::MoveModel, Metric::MoveLog, Metric::Trace];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MoveModel => "move_model",
            Metric::MoveLog => "move_log",
            Metric::Trace => "trace",
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Fitness from an alignment, given the cheapest model-only run of the net
/// (`empty_cost`) and the trace length.
pub fn fitness_from_costs(alignment: &Alignment, empty_cost: u32, trace_len: usize) -> FitnessTriple {
    let sync = alignment.count(MoveKind::Synchronous);
    let model = alignment.count(MoveKind::Model);
    let log = alignment.count(MoveKind::Log);
    let max_cost = empty_cost as usize + trace_len;
    FitnessTriple {
        move_model: ratio(sync, sync + model),
        move_log: ratio(sync, sync + log),
        trace: if max_cost == 0 { 1.0 } else { 1.0 - alignment.raw_cost as f64 / max_cost as f64 },
    }
}

/// Aligner bound to one net, caching the empty-trace cost.
#[derive(Debug, Clone)]
pub struct Replayer<'a> {
    pub net: &'a PetriNet,
    pub empty_cost: u32,
}

impl<'a> Replayer<'a> {
    /// Fails when no final marking is reachable.
    pub fn new(net: &'a PetriNet) -> Result<Self, AlignError> {
        let empty = MappedTrace { keys: vec![], candidates: vec![] };
        let empty_cost = align(net, &empty)?.raw_cost;
        Ok(Self { net, empty_cost })
    }

    pub fn replay(&self, trace: &MappedTrace) -> Result<(Alignment, FitnessTriple), AlignError> {
        let a = align(self.net, trace)?;
        let f = fitness_from_costs(&a, self.empty_cost, trace.len());
        Ok((a, f))
    }
}

/// Fitness of `alignment` for `trace` on `net`.
pub fn fitness(alignment: &Alignment, net: &PetriNet, trace: &MappedTrace) -> Result<FitnessTriple, AlignError> {
    let r = Replayer::new(net)?;
    Ok(fitness_from_costs(alignment, r.empty_cost, trace.len()))
}
