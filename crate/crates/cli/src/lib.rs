//! The `shopfloor` command line: template conversion, log transformation,
//! conformance checking, machining-data analytics and scenario reports.
//!
//! Exit codes: 0 on success, 1 for invalid input or usage, 2 for internal
//! failures. Every run writes a JSON manifest next to its main output with
//! the arguments, seed, resolved settings and SHA-256 digests of all inputs
//! and outputs.

pub mod analysis;
pub mod convert;
pub mod ctx;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use shopfloor_analytics::{Kernel, LabelSource, Linkage, SvmParams, WindowSpec};
use shopfloor_core::conformance::MappingSpec;

use analysis::{ClassifyArgs, ClusterArgs, Method, ModelSpec, RfeArgs, StatsArgs};
use ctx::{input, parse_int_list, Ctx, Failure, Res};

#[derive(Parser, Debug)]
#[command(name = "shopfloor", version, about = "Process-mining and machining-data analysis pipeline")]
struct Cli {
    /// Directory that relative output paths resolve against.
    #[arg(long, global = true, env = "SHOPFLOOR_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More diagnostics (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a process template (XML) into a TPN Petri net.
    ToTpn {
        template: PathBuf,
        out: PathBuf,
    },
    /// Merge YAML execution logs into one XES log.
    YamlToXes {
        /// Text file listing one YAML log per line.
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, default_value = "logs.xes")]
        out: PathBuf,
    },
    /// Write one star-delimited machining CSV per YAML log.
    ExtractCsv {
        /// Text file listing the machining YAML logs.
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, default_value = "machining")]
        outdir: PathBuf,
        /// Path list of parent (production) logs used to derive labels.
        #[arg(long)]
        parents: Option<PathBuf>,
        /// Write `log,label` where a log is true when its parent spawned it last.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Dotted key path holding child references in parent events; empty
        /// searches every value.
        #[arg(long, default_value = "")]
        spawn_field: String,
    },
    /// Replay an XES log against templates and tabulate fitness.
    Conformance {
        #[arg(long)]
        xes: PathBuf,
        /// `.tpn` nets or XML templates.
        #[arg(long, num_args = 1.., required = true)]
        templates: Vec<PathBuf>,
        #[arg(long, default_value = "label")]
        mapping: MappingSpec,
        #[arg(long, default_value = "table.csv")]
        out: PathBuf,
        /// Also write the trace-to-group mapping.
        #[arg(long)]
        groups: Option<PathBuf>,
    },
    /// Cluster the rows of a feature matrix.
    Cluster {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, num_args = 1.., value_delimiter = ',', default_value = "hclust")]
        method: Vec<Method>,
        /// Cluster counts, e.g. `2,7,18` or `2..5`.
        #[arg(long, default_value = "2", value_parser = parse_int_list)]
        k: ::std::vec::Vec<usize>,
        #[arg(long, default_value = "complete")]
        linkage: Linkage,
        /// k-means restarts.
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// `log,label` file for majority-label accuracy.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also write the WSS curve for k = 1..=N.
        #[arg(long)]
        scree: Option<usize>,
        #[arg(long, default_value = "clusters.json")]
        out: PathBuf,
    },
    /// Train classifiers on a seeded split and report accuracies.
    Classify {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Training fraction.
        #[arg(long, default_value_t = 0.75)]
        split: f64,
        #[arg(long, default_value = "classification.csv")]
        out: PathBuf,
    },
    /// Recursive feature elimination with random forests.
    Rfe {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Subset sizes, e.g. `1..70`; all sizes by default.
        #[arg(long, value_parser = parse_int_list)]
        sizes: Option<::std::vec::Vec<usize>>,
        #[arg(long, default_value_t = 10)]
        resamples: usize,
        #[arg(long, default_value_t = 500)]
        trees: usize,
        #[arg(long, default_value = "rfe.csv")]
        out: PathBuf,
        /// Write the matrix restricted to the selected features.
        #[arg(long)]
        selected_out: Option<PathBuf>,
    },
    /// Pass counts per measurement and manual-by-automatic acceptance.
    Stats {
        #[arg(long)]
        measurements: PathBuf,
        /// Realign manual results, e.g. `129:180:2`.
        #[arg(long, value_parser = analysis::read_shift)]
        shift: Option<(usize, usize, usize)>,
        /// Restrict to the logs of this feature matrix (log i is part i).
        #[arg(long)]
        features: Option<PathBuf>,
        /// `manual`, `automatic` or a measurement column.
        #[arg(long)]
        label: Option<LabelSource>,
        #[arg(long)]
        labels_out: Option<PathBuf>,
        #[arg(long, default_value = "stats.csv")]
        out: PathBuf,
    },
    /// Run a complete scenario pipeline.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// `svm`, `nb`, or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    /// Kernels for `svm`, comma-separated, or `all`.
    #[arg(long, default_value = "all")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
    /// Defaults to 1 / features.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    #[arg(long, default_value_t = 0.0)]
    coef0: f64,
    /// Train on raw features instead of standardized ones.
    #[arg(long)]
    no_scale: bool,
}

impl ModelArgs {
    fn specs(&self) -> Res<Vec<ModelSpec>> {
        let kernels: Vec<Kernel> = if self.kernel == "all" {
            vec![Kernel::Linear, Kernel::Radial, Kernel::Sigmoid, Kernel::Polynomial]
        } else {
            self.kernel.split(',').map(|k| k.trim().parse()).collect::<Result<_, _>>()?
        };
        let base = SvmParams {
            cost: self.cost,
            gamma: self.gamma,
            degree: self.degree,
            coef0: self.coef0,
            scale: !self.no_scale,
            ..SvmParams::default()
        };
        let mut specs = Vec::new();
        match self.model.as_str() {
            "svm" => specs.extend(analysis::svm_specs(&kernels, &base)),
            "nb" => specs.push(ModelSpec::NaiveBayes),
            "all" => {
                specs.extend(analysis::svm_specs(&kernels, &base));
                specs.push(ModelSpec::NaiveBayes);
            }
            other => return Err(input(format!("unknown model `{other}` (expected svm, nb or all)"))),
        }
        Ok(specs)
    }
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// `scenario1` or `scenario2`.
    #[arg(long)]
    preset: String,
    /// Directory of `log<id>.csv` files, or a list of them.
    #[arg(long)]
    logs: PathBuf,
    /// `log,label` file (scenario1).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Measuring file (scenario2).
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Report directory; defaults to the preset name.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    min_points: Option<usize>,
    /// Keep logs with strictly more than `min_points` rows.
    #[arg(long)]
    exclusive: bool,
    /// Windows such as `last-10`; repeatable.
    #[arg(long)]
    window: Vec<WindowSpec>,
    /// Minimum values of a parameter in every log.
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long, value_parser = analysis::read_shift, conflicts_with = "no_shift")]
    shift: Option<(usize, usize, usize)>,
    #[arg(long)]
    no_shift: bool,
    /// Measurement label sources; repeatable.
    #[arg(long)]
    target: Vec<String>,
    #[arg(long, value_parser = parse_int_list)]
    k: Option<::std::vec::Vec<usize>>,
    #[arg(long)]
    scree_max: Option<usize>,
    #[arg(long, value_parser = parse_int_list)]
    sizes: Option<::std::vec::Vec<usize>>,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    split: Option<f64>,
}

impl ReportArgs {
    fn preset(&self) -> Res<report::Preset> {
        let mut p = report::scenario_preset(&self.preset).map_err(input)?;
        if let Some(v) = self.min_points {
            p.min_points = v;
        }
        if self.exclusive {
            p.inclusive = false;
        }
        if !self.window.is_empty() {
            p.windows = self.window.clone();
        }
        if let Some(v) = self.threshold {
            p.threshold = v;
        }
        if self.shift.is_some() {
            p.shift = self.shift;
        }
        if self.no_shift {
            p.shift = None;
        }
        if !self.target.is_empty() {
            p.targets = self.target.clone();
        }
        if let Some(v) = &self.k {
            p.ks = v.clone();
        }
        if let Some(v) = self.scree_max {
            p.scree_max = v;
        }
        if self.sizes.is_some() {
            p.rfe_sizes = self.sizes.clone();
        }
        if let Some(v) = self.resamples {
            p.resamples = v;
        }
        if let Some(v) = self.trees {
            p.trees = v;
        }
        if let Some(v) = self.restarts {
            p.restarts = v;
        }
        if let Some(v) = self.split {
            p.split = v;
        }
        Ok(p)
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::ToTpn { .. } => "to-tpn",
        Command::YamlToXes { .. } => "yaml-to-xes",
        Command::ExtractCsv { .. } => "extract-csv",
        Command::Conformance { .. } => "conformance",
        Command::Cluster { .. } => "cluster",
        Command::Classify { .. } => "classify",
        Command::Rfe { .. } => "rfe",
        Command::Stats { .. } => "stats",
        Command::Report(_) => "report",
    }
}

fn dispatch(cli: Cli, args: Vec<String>) -> Res<()> {
    let mut ctx = Ctx::new(cli.out_dir.clone(), cli.seed, command_name(&cli.command), args);
    match cli.command {
        Command::ToTpn { template, out } => convert::to_tpn(&mut ctx, &template, &out),
        Command::YamlToXes { paths, out } => convert::yaml_to_xes(&mut ctx, &paths, &out),
        Command::ExtractCsv { paths, outdir, parents, labels, spawn_field } => {
            convert::extract_csv(&mut ctx, &paths, &outdir, parents.as_deref(), labels.as_deref(), &spawn_field)
        }
        Command::Conformance { xes, templates, mapping, out, groups } => {
            convert::conformance(&mut ctx, &xes, &templates, mapping, &out, groups.as_deref())
        }
        Command::Cluster { features, method, k, linkage, restarts, labels, scree, out } => analysis::cluster(
            &mut ctx,
            ClusterArgs {
                features: &features,
                methods: &method,
                ks: &k,
                linkage,
                restarts,
                labels: labels.as_deref(),
                scree,
                out: &out,
            },
        ),
        Command::Classify { features, labels, model, split, out } => {
            let specs = model.specs()?;
            analysis::classify(&mut ctx, ClassifyArgs { features: &features, labels: &labels, specs, split, out: &out })
        }
        Command::Rfe { features, labels, sizes, resamples, trees, out, selected_out } => analysis::rfe(
            &mut ctx,
            RfeArgs {
                features: &features,
                labels: &labels,
                sizes,
                resamples,
                trees,
                out: &out,
                selected_out: selected_out.as_deref(),
            },
        ),
        Command::Stats { measurements, shift, features, label, labels_out, out } => analysis::stats(
            &mut ctx,
            StatsArgs {
                measurements: &measurements,
                shift,
                features: features.as_deref(),
                label,
                labels_out: labels_out.as_deref(),
                out: &out,
            },
        ),
        Command::Report(r) => {
            let preset = r.preset()?;
            let out = r.out.clone().unwrap_or_else(|| PathBuf::from(&preset.name));
            report::report(
                &mut ctx,
                &preset,
                report::ReportInputs {
                    logs: &r.logs,
                    labels: r.labels.as_deref(),
                    measurements: r.measurements.as_deref(),
                    out: &out,
                },
            )?;
            ctx.finish(&out.join("manifest.json"))
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| pool.install(|| dispatch(cli, args))));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(f)) => {
            let kind = match f {
                Failure::Input(_) => "error",
                Failure::Internal(_) => "internal error",
            };
            eprintln!("{kind}: {f}");
            f.code()
        }
        Err(_) => {
            eprintln!("internal error: unexpected panic");
            2
        }
    }
}

/// Manifest path written for a single-output subcommand.
pub fn manifest_path(out: &Path) -> PathBuf {
    ctx::manifest_for(out)
}
