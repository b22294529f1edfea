//! Linear-programming lower bound on the remaining alignment cost.
//!
//! From marking `m` at trace position `pos`, any completion firing the
//! multiset `x` satisfies `m + C·x = f` for some final marking `f`. Events
//! left in the trace are grouped by candidate set; `z[G][t]` counts events of
//! group `G` consumed synchronously by `t`. Ordering is ignored, so the LP
//!
//! ```text
//! min  w_model·Σ_visible x_t + w_log·N − (w_model + w_log)·Σ z
//! s.t. m + C·x = f,   Σ_t z[G][t] ≤ count(G),   Σ_G z[G][t] ≤ x_t,   x, z ≥ 0
//! ```
//!
//! bounds the weighted cost of every completion from below. When the parent's
//! optimum already contains the move taken, that optimum minus the move is
//! optimal for the child and no LP is solved.

use std::collections::HashMap;
use std::rc::Rc;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use super::align::{Move, MoveKind};
use super::mapping::MappedTrace;
use crate::model::{Marking, PetriNet, TransitionId};

const EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub(crate) struct Bound {
    /// Rounded-up LP optimum.
    pub value: u64,
    x: Rc<Vec<f64>>,
    /// Indexed like `Groups::members`.
    z: Rc<Vec<Vec<f64>>>,
}

/// Distinct non-empty candidate sets of the trace.
struct Groups {
    members: Vec<Vec<TransitionId>>,
    of_event: Vec<Option<usize>>,
    /// `suffix[pos][g]`: events of group `g` at positions `pos..`.
    suffix: Vec<Vec<u32>>,
}

impl Groups {
    fn new(trace: &MappedTrace) -> Self {
        let mut ids: HashMap<&[TransitionId], usize> = HashMap::new();
        let mut members = Vec::new();
        let of_event: Vec<Option<usize>> = trace
            .candidates
            .iter()
            .map(|c| {
                (!c.is_empty()).then(|| {
                    *ids.entry(c.as_slice()).or_insert_with(|| {
                        members.push(c.clone());
                        members.len() - 1
                    })
                })
            })
            .collect();
        let n = trace.len();
        let mut suffix = vec![vec![0u32; members.len()]; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1].clone();
            if let Some(g) = of_event[i] {
                suffix[i][g] += 1;
            }
        }
        Self { members, of_event, suffix }
    }
}

pub(crate) struct TraceBound<'a> {
    net: &'a PetriNet,
    groups: Groups,
    w_model: f64,
    w_log: f64,
    /// Place-by-transition incidence, sparse per place.
    rows: Vec<Vec<(usize, f64)>>,
    pub solves: usize,
}

impl<'a> TraceBound<'a> {
    pub fn new(net: &'a PetriNet, trace: &MappedTrace, w_model: u64, w_log: u64) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.places.len()];
        for (ti, t) in net.transitions.iter().enumerate() {
            let mut delta: HashMap<usize, f64> = HashMap::new();
            for p in &t.inputs {
                *delta.entry(p.0).or_default() -= 1.0;
            }
            for p in &t.outputs {
                *delta.entry(p.0).or_default() += 1.0;
            }
            let mut delta: Vec<_> = delta.into_iter().filter(|&(_, c)| c != 0.0).collect();
            delta.sort_by_key(|&(p, _)| p);
            for (p, c) in delta {
                rows[p].push((ti, c));
            }
        }
        Self {
            net,
            groups: Groups::new(trace),
            w_model: w_model as f64,
            w_log: w_log as f64,
            rows,
            solves: 0,
        }
    }

    fn objective(&self, pos: usize, x: &[f64], z: &[Vec<f64>]) -> f64 {
        let remaining = self.groups.of_event.len() - pos;
        let visible: f64 = self.net.transitions.iter().zip(x).filter(|(t, _)| t.visible).map(|(_, v)| v).sum();
        let synced: f64 = z.iter().flatten().sum();
        self.w_model * visible + self.w_log * remaining as f64 - (self.w_model + self.w_log) * synced
    }

    /// Bound at `(marking, pos)` reached from `parent` by `mv`, if the
    /// parent's optimum covers the move.
    pub fn derive(&self, pos: usize, parent: &Bound, mv: &Move) -> Option<Bound> {
        let mut x = parent.x.clone();
        let mut z = parent.z.clone();
        match (mv.kind, mv.transition, mv.event) {
            (MoveKind::Log, _, Some(e)) => {
                if let Some(g) = self.groups.of_event[e] {
                    let used: f64 = z[g].iter().sum();
                    if f64::from(self.groups.suffix[e][g]) - used < 1.0 - EPS {
                        return None;
                    }
                }
            }
            (MoveKind::Synchronous, Some(t), Some(e)) => {
                let g = self.groups.of_event[e]?;
                let k = self.groups.members[g].iter().position(|&c| c == t)?;
                if z[g][k] < 1.0 - EPS || x[t.0] < 1.0 - EPS {
                    return None;
                }
                Rc::make_mut(&mut z)[g][k] = (z[g][k] - 1.0).max(0.0);
                Rc::make_mut(&mut x)[t.0] = (x[t.0] - 1.0).max(0.0);
            }
            (MoveKind::Model | MoveKind::Invisible, Some(t), None) => {
                let synced: f64 = self
                    .groups
                    .members
                    .iter()
                    .zip(z.iter())
                    .filter_map(|(m, zg)| m.iter().position(|&c| c == t).map(|k| zg[k]))
                    .sum();
                if x[t.0] - synced < 1.0 - EPS {
                    return None;
                }
                Rc::make_mut(&mut x)[t.0] = (x[t.0] - 1.0).max(0.0);
            }
            _ => return None,
        }
        let value = ceil(self.objective(pos, &x, &z));
        Some(Bound { value, x, z })
    }

    /// Solves the LP; `None` when no final marking satisfies the marking
    /// equation.
    pub fn solve(&mut self, marking: &Marking, pos: usize) -> Option<Bound> {
        let net = self.net;
        let counts = &self.groups.suffix[pos];
        let mut best: Option<(f64, Vec<f64>, Vec<Vec<f64>>)> = None;
        'finals: for fin in &net.final_markings {
            self.solves += 1;
            let mut lp = Problem::new(OptimizationDirection::Minimize);
            let xs: Vec<Variable> = net
                .transitions
                .iter()
                .map(|t| lp.add_var(if t.visible { self.w_model } else { 0.0 }, (0.0, f64::INFINITY)))
                .collect();
            let mut per_t: HashMap<usize, Vec<(Variable, f64)>> = HashMap::new();
            let mut zs: Vec<Vec<Option<Variable>>> = Vec::with_capacity(self.groups.members.len());
            for (g, members) in self.groups.members.iter().enumerate() {
                if counts[g] == 0 {
                    zs.push(vec![None; members.len()]);
                    continue;
                }
                let vars: Vec<Variable> = members
                    .iter()
                    .map(|t| {
                        let v = lp.add_var(-(self.w_model + self.w_log), (0.0, f64::INFINITY));
                        per_t.entry(t.0).or_default().push((v, 1.0));
                        v
                    })
                    .collect();
                let row: Vec<(Variable, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
                lp.add_constraint(row.as_slice(), ComparisonOp::Le, f64::from(counts[g]));
                zs.push(vars.into_iter().map(Some).collect());
            }
            let mut per_t: Vec<_> = per_t.into_iter().collect();
            per_t.sort_by_key(|&(t, _)| t);
            for (t, mut row) in per_t {
                row.push((xs[t], -1.0));
                lp.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
            }
            for (p, row) in self.rows.iter().enumerate() {
                let rhs = f64::from(fin.0[p]) - f64::from(marking.0[p]);
                if row.is_empty() {
                    if rhs != 0.0 {
                        continue 'finals;
                    }
                    continue;
                }
                let row: Vec<(Variable, f64)> = row.iter().map(|&(t, c)| (xs[t], c)).collect();
                lp.add_constraint(row.as_slice(), ComparisonOp::Eq, rhs);
            }
            let Ok(sol) = lp.solve() else { continue };
            let x: Vec<f64> = xs.iter().map(|&v| sol[v].max(0.0)).collect();
            let z: Vec<Vec<f64>> =
                zs.iter().map(|g| g.iter().map(|v| v.map_or(0.0, |v| sol[v].max(0.0))).collect()).collect();
            let obj = self.objective(pos, &x, &z);
            if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
                best = Some((obj, x, z));
            }
        }
        best.map(|(obj, x, z)| Bound { value: ceil(obj), x: Rc::new(x), z: Rc::new(z) })
    }
}

/// Rounds up, forgiving solver noise.
fn ceil(v: f64) -> u64 {
    (v - EPS * v.abs().max(1.0)).ceil().max(0.0) as u64
}
