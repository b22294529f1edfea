//! Trace-by-template fitness tables and template assignment.

use std::collections::HashMap;
use std::io;

use rayon::prelude::*;

use super::align::AlignError;
use super::fitness::{FitnessTriple, Metric, Replayer};
use super::mapping::{map_keys, trace_keys, EventKey, MappingSpec};
use crate::logs::XesDocument;
use crate::model::PetriNet;

/// Values within this distance of the row maximum count as maximal.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    /// 1-based, in order of first appearance.
    pub group: usize,
    /// `concept:name` of every trace in the group, in log order.
    pub traces: Vec<String>,
    pub keys: Vec<EventKey>,
    /// `None` where the alignment failed.
    pub cells: Vec<Option<FitnessTriple>>,
}

impl TableRow {
    pub fn multiplicity(&self) -> usize {
        self.traces.len()
    }

    /// Templates attaining the row maximum of `metric`, ascending.
    pub fn argmax(&self, metric: Metric) -> Vec<usize> {
        let values: Vec<Option<f64>> = self.cells.iter().map(|c| c.map(|f| f.metric(metric))).collect();
        let Some(best) = values.iter().flatten().copied().reduce(f64::max) else {
            return Vec::new();
        };
        values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_some_and(|v| best - v <= TIE_EPS))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessTable {
    pub templates: Vec<String>,
    pub rows: Vec<TableRow>,
    /// Per template, why no cell could be computed (model infeasible).
    pub template_errors: Vec<Option<AlignError>>,
}

/// Groups identical traces (same event keys) and replays each group against
/// every template. Cells are computed in parallel and merged by position.
pub fn build_fitness_table(xes: &XesDocument, templates: &[(String, PetriNet)], spec: MappingSpec) -> FitnessTable {
    let mut rows: Vec<TableRow> = Vec::new();
    let mut by_keys: HashMap<Vec<EventKey>, usize> = HashMap::new();
    for trace in &xes.traces {
        let keys = trace_keys(trace, spec);
        let idx = *by_keys.entry(keys.clone()).or_insert_with(|| {
            rows.push(TableRow { group: rows.len() + 1, traces: Vec::new(), keys, cells: Vec::new() });
            rows.len() - 1
        });
        rows[idx].traces.push(trace.name().to_string());
    }

    let replayers: Vec<Result<Replayer<'_>, AlignError>> = templates.par_iter().map(|(_, net)| Replayer::new(net)).collect();
    let pairs: Vec<(usize, usize)> = (0..rows.len()).flat_map(|r| (0..templates.len()).map(move |t| (r, t))).collect();
    let cells: Vec<Option<FitnessTriple>> = pairs
        .par_iter()
        .map(|&(r, t)| {
            let replayer = replayers[t].as_ref().ok()?;
            let mapped = map_keys(rows[r].keys.clone(), replayer.net, spec);
            match replayer.replay(&mapped) {
                Ok((_, f)) => Some(f),
                Err(e) => {
                    log::warn!("group {} on template `{}`: {e}", rows[r].group, templates[t].0);
                    None
                }
            }
        })
        .collect();
    let mut cells = cells.into_iter();
    for row in &mut rows {
        row.cells = cells.by_ref().take(templates.len()).collect();
    }
    FitnessTable {
        templates: templates.iter().map(|(n, _)| n.clone()).collect(),
        rows,
        template_errors: replayers.into_iter().map(Result::err).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub template: usize,
    /// Move-log and trace fitness prefer different templates.
    pub conflict: bool,
    /// Other templates scoring equal to the chosen one.
    pub ties: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("every cell of the row is missing")]
pub struct Unassignable;

/// Picks the template maximizing move-log plus trace fitness, lowest index on
/// ties. `conflict` compares the lowest-index argmax of each metric.
pub fn assign_template(row: &TableRow) -> Result<Assignment, Unassignable> {
    let by_log = row.argmax(Metric::MoveLog);
    let by_trace = row.argmax(Metric::Trace);
    let (Some(&log_best), Some(&trace_best)) = (by_log.first(), by_trace.first()) else {
        return Err(Unassignable);
    };
    let joint: Vec<Option<f64>> = row.cells.iter().map(|c| c.map(|f| f.move_log + f.trace)).collect();
    let best = joint.iter().flatten().copied().reduce(f64::max).ok_or(Unassignable)?;
    let winners: Vec<usize> =
        (0..joint.len()).filter(|&i| joint[i].is_some_and(|v| best - v <= TIE_EPS)).collect();
    Ok(Assignment { template: winners[0], conflict: log_best != trace_best, ties: winners[1..].to_vec() })
}

fn join_names(table: &FitnessTable, idx: &[usize]) -> String {
    idx.iter().map(|&i| table.templates[i].as_str()).collect::<Vec<_>>().join("|")
}

/// Writes the table: group, multiplicity, three metrics per template, the
/// argmax templates per metric (`|`-joined) and the conflict flag.
pub fn write_fitness_csv<W: io::Write>(table: &FitnessTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["group".to_string(), "multiplicity".to_string()];
    for name in &table.templates {
        header.extend(Metric::ALL.iter().map(|m| format!("{name}:{}", m.name())));
    }
    header.extend(Metric::ALL.iter().map(|m| format!("argmax_{}", m.name())));
    header.push("conflict".into());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![row.group.to_string(), row.multiplicity().to_string()];
        for cell in &row.cells {
            for m in Metric::ALL {
                rec.push(cell.map(|f| format!("{:.6}", f.metric(m))).unwrap_or_default());
            }
        }
        for m in Metric::ALL {
            rec.push(join_names(table, &row.argmax(m)));
        }
        rec.push(assign_template(row).map(|a| a.conflict.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Trace name to group id, in log order.
pub fn write_groups_csv<W: io::Write>(table: &FitnessTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trace", "group"])?;
    for row in &table.rows {
        for t in &row.traces {
            w.write_record([t.as_str(), &row.group.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
