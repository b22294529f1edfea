//! Template, log and conformance subcommands.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use shopfloor_core::conformance::{assign_template, build_fitness_table, write_fitness_csv, write_groups_csv, MappingSpec};
use shopfloor_core::logs::{
    build_xes, extract_machining_rows, link_subprocesses, machining_csv, machining_file_name, parse_yaml_trace,
    serialize_xes, SpawnSource, TraceRecord,
};
use shopfloor_core::model::{emit_tpn, parse_tpn};
use shopfloor_core::{finalize_net, parse_template, transform_to_net, PetriNet};

use crate::ctx::{csv_text, input, internal, manifest_for, Ctx, Res};

pub fn to_tpn(ctx: &mut Ctx, template: &Path, out: &Path) -> Res<()> {
    let xml = ctx.read_text(template)?;
    let doc = parse_template(&xml).map_err(|e| input(format!("{}: {e}", template.display())))?;
    let result = transform_to_net(&doc).map_err(|e| input(format!("{}: {e}", template.display())))?;
    let written = ctx.write(out, emit_tpn(&result.net).as_bytes())?;
    eprintln!(
        "{}: {} places, {} transitions",
        written.display(),
        result.net.places.len(),
        result.net.transitions.len()
    );
    ctx.set("template", template.display().to_string());
    ctx.finish(&manifest_for(out))
}

/// Entries of a path list; relative entries resolve against the working
/// directory, or against the list's directory when absent there.
fn resolve_list(ctx: &mut Ctx, list: &Path) -> Res<Vec<PathBuf>> {
    let text = ctx.read_text(list)?;
    let base = list.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_relative() && !p.exists() && base.join(&p).exists() {
                base.join(p)
            } else {
                p
            }
        })
        .collect())
}

fn load_traces(ctx: &mut Ctx, paths: &[PathBuf]) -> Res<Vec<TraceRecord>> {
    let texts: Vec<String> = paths.iter().map(|p| ctx.read_text(p)).collect::<Res<_>>()?;
    texts
        .par_iter()
        .zip(paths)
        .map(|(t, p)| parse_yaml_trace(t).map_err(|e| input(format!("{}: {e}", p.display()))))
        .collect()
}

pub fn yaml_to_xes(ctx: &mut Ctx, list: &Path, out: &Path) -> Res<()> {
    let paths = resolve_list(ctx, list)?;
    let traces = load_traces(ctx, &paths)?;
    let doc = build_xes(&traces);
    let events: usize = doc.traces.iter().map(|t| t.events.len()).sum();
    let written = ctx.write(out, serialize_xes(&doc).as_bytes())?;
    eprintln!("{}: {} traces, {events} events", written.display(), doc.traces.len());
    ctx.set("paths", list.display().to_string());
    ctx.finish(&manifest_for(out))
}

/// One CSV per trace in `list`. With `labels`, traces are linked to their
/// parents among `list` and `parents`, and each child is labelled by whether
/// it was the last one its parent spawned.
pub fn extract_csv(
    ctx: &mut Ctx,
    list: &Path,
    outdir: &Path,
    parents: Option<&Path>,
    labels: Option<&Path>,
    spawn_field: &str,
) -> Res<()> {
    let paths = resolve_list(ctx, list)?;
    let traces = load_traces(ctx, &paths)?;
    let mut rows_total = 0;
    for t in &traces {
        let rows = extract_machining_rows(t);
        rows_total += rows.len();
        ctx.write(&outdir.join(machining_file_name(&t.concept_name)), machining_csv(&rows).as_bytes())?;
    }
    eprintln!("{}: {} files, {rows_total} rows", ctx.out(outdir).display(), traces.len());
    if let Some(labels) = labels {
        let extra = match parents {
            Some(p) => {
                let more = resolve_list(ctx, p)?;
                load_traces(ctx, &more)?
            }
            None => Vec::new(),
        };
        let all: Vec<TraceRecord> = traces.iter().cloned().chain(extra).collect();
        let tree = link_subprocesses(&all, &SpawnSource::parse(spawn_field));
        tree.warnings.iter().for_each(|w| log::warn!("{w}"));
        let flags = tree.last_child_labels();
        let mut rows = Vec::new();
        for (i, t) in traces.iter().enumerate() {
            match flags[i] {
                Some(v) => rows.push([t.concept_name.clone(), v.to_string()]),
                None => log::warn!("trace {} has no parent and gets no label", t.concept_name),
            }
        }
        ctx.write(labels, csv_text(&["log", "label"], rows)?.as_bytes())?;
        ctx.set("spawn_field", spawn_field);
    }
    ctx.set("paths", list.display().to_string());
    ctx.finish(&outdir.join("manifest.json"))
}

/// A `.tpn` file is finalized structurally; anything else is read as a
/// template and transformed.
fn load_net(ctx: &mut Ctx, path: &Path) -> Res<PetriNet> {
    let text = ctx.read_text(path)?;
    let fail = |e: &dyn std::fmt::Display| input(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "tpn") {
        let net = parse_tpn(&text).map_err(|e| fail(&e))?;
        finalize_net(net).map_err(|e| fail(&e))
    } else {
        let doc = parse_template(&text).map_err(|e| fail(&e))?;
        Ok(transform_to_net(&doc).map_err(|e| fail(&e))?.finalize())
    }
}

pub fn conformance(
    ctx: &mut Ctx,
    xes: &Path,
    templates: &[PathBuf],
    mapping: MappingSpec,
    out: &Path,
    groups: Option<&Path>,
) -> Res<()> {
    let text = ctx.read_text(xes)?;
    let doc = shopfloor_core::logs::parse_xes(&text).map_err(|e| input(format!("{}: {e}", xes.display())))?;
    let mut nets = Vec::new();
    for p in templates {
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        nets.push((name, load_net(ctx, p)?));
    }
    let table = build_fitness_table(&doc, &nets, mapping);
    for (name, err) in table.templates.iter().zip(&table.template_errors) {
        if let Some(e) = err {
            return Err(input(format!("template `{name}` is model-infeasible: {e}")));
        }
    }
    let mut buf = Vec::new();
    write_fitness_csv(&table, &mut buf).map_err(internal)?;
    let written = ctx.write(out, &buf)?;
    if let Some(g) = groups {
        let mut buf = Vec::new();
        write_groups_csv(&table, &mut buf).map_err(internal)?;
        ctx.write(g, &buf)?;
    }
    let conflicts = table.rows.iter().filter(|r| assign_template(r).is_ok_and(|a| a.conflict)).count();
    eprintln!(
        "{}: {} traces in {} groups, {conflicts} conflicting",
        written.display(),
        doc.traces.len(),
        table.rows.len()
    );
    ctx.set("mapping", mapping.to_string());
    ctx.finish(&manifest_for(out))
}
