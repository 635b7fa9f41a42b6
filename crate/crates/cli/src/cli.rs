//! Command-line definitions and command bodies.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use slm::dataset::{load_csv, load_features, write_csv, TargetColumn};
use slm::metrics;
use slm::{Dataset, ModelFile, Prediction, Task};

use crate::bench::{self, Suite};
use crate::config::{CsvSpec, DataSpec, GenKind, GenSpec, HyperOverrides, ModelKind, RunConfig, SplitConfig};
use crate::error::{CliError, CliResult};
use crate::report::{document, fmt_metric};
use crate::run::{self, StructureSummary};

#[derive(Debug, Parser)]
#[command(name = "slm", version, about = "Subspace learning machines: oblique trees, forests and boosting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV
    GenData(GenDataArgs),
    /// Train a model and write it with a metrics report
    Train(TrainArgs),
    /// Predict with a saved model
    Predict(PredictArgs),
    /// Run a benchmark suite
    Benchmark(BenchmarkArgs),
    /// Print the structure of a saved model
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Samples per class (2D sets) or in total (Friedman sets)
    #[arg(long)]
    pub n: Option<usize>,
    /// Boundary-noise fraction (2D sets) or target noise std (Friedman sets)
    #[arg(long)]
    pub noise: Option<f64>,
    /// Standard deviation of the boundary jitter
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Friedman-1 input dimension
    #[arg(long)]
    pub features: Option<usize>,
    /// Friedman-2/3 inputs drawn from (0, 1]
    #[arg(long)]
    pub unit_inputs: bool,
}

impl GeneratorArgs {
    fn spec(&self, kind: GenKind, seed: Option<u64>) -> CliResult<GenSpec> {
        let n = self.n.ok_or_else(|| CliError::input("invalid parameter", "--n is required for generated data"))?;
        Ok(GenSpec {
            kind,
            n,
            noise: self.noise,
            jitter: self.jitter,
            features: self.features,
            unit_inputs: self.unit_inputs,
            seed,
        })
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Training CSV
    #[arg(long, conflicts_with = "generate")]
    pub data: Option<PathBuf>,
    /// Generate the data instead of reading it
    #[arg(long, value_enum)]
    pub generate: Option<GenKind>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Generator seed (default: --seed)
    #[arg(long)]
    pub gen_seed: Option<u64>,
    /// Target column: header name, index, or `last`
    #[arg(long, default_value = "last")]
    pub target: String,
    #[arg(long)]
    pub no_header: bool,
    /// Separate test CSV; without it the data is split
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.6)]
    pub train_fraction: f64,
    /// Split seed (default: --seed)
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub no_stratify: bool,
    /// TOML file of hyperparameters; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperOverrides,
    /// Model file to write
    #[arg(short, long)]
    pub output: PathBuf,
    /// Metrics report (default: next to the model, `.report.txt`)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Learning-curve CSV for forests and boosting (default: `.curve.csv`)
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Target column to drop (and score against): name, index, or `last`
    #[arg(long, default_value = "last")]
    pub target: String,
    /// The file has feature columns only
    #[arg(long)]
    pub no_target: bool,
    #[arg(long)]
    pub no_header: bool,
    /// Expected task; a model of the other task is rejected
    #[arg(long, value_parser = parse_task)]
    pub task: Option<Task>,
    /// Output CSV (default: stdout)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Suite file (TOML)
    pub suite: PathBuf,
    /// Output directory
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: HyperOverrides,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub model: PathBuf,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse::<Task>().map_err(|e| e.to_string())
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::Train(a) => train(&a),
        Command::Predict(a) => predict(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::Inspect(a) => inspect(&a),
    }
}

fn write_file(path: &Path, body: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)?;
    Ok(())
}

fn shape(ds: &Dataset) -> String {
    match ds.n_classes() {
        Some(k) => format!("L={} D={} K={}", ds.n_samples(), ds.n_features(), k),
        None => format!("L={} D={}", ds.n_samples(), ds.n_features()),
    }
}

pub fn gen_data(a: &GenDataArgs) -> CliResult<()> {
    let ds = a.generator.spec(a.kind, Some(a.seed))?.generate(a.seed)?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    write_file(&a.output, &buf)?;
    println!("{}", shape(&ds));
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn train_config(a: &TrainArgs) -> CliResult<RunConfig> {
    let file = match &a.config {
        Some(p) => HyperOverrides::load(p)?,
        None => HyperOverrides::default(),
    };
    let hyper = file.merged(&a.hyper).resolve(a.model);
    let csv = |path: &PathBuf| CsvSpec { path: path.clone(), target: a.target.clone(), has_header: !a.no_header };
    let data = match (&a.data, a.generate) {
        (Some(p), None) => DataSpec::Csv(csv(p)),
        (None, Some(kind)) => DataSpec::Generate(a.generator.spec(kind, Some(a.gen_seed.unwrap_or(hyper.seed)))?),
        _ => return Err(CliError::input("invalid parameter", "give exactly one of --data or --generate")),
    };
    Ok(RunConfig {
        model: a.model,
        data: data.resolved(hyper.seed),
        test: a.test.as_ref().map(|p| DataSpec::Csv(csv(p))),
        split: SplitConfig {
            train_fraction: a.train_fraction,
            seed: a.split_seed.unwrap_or(hyper.seed),
            stratify: !a.no_stratify,
        },
        hyper,
    })
}

pub fn train_report(outcome: &run::Outcome, cfg: &RunConfig) -> String {
    let m = &outcome.metrics;
    let s = &m.structure;
    let levels = s.first_tree_levels.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    let rows = [
        ("model", cfg.model.name().to_string()),
        ("task", cfg.model.task().to_string()),
        ("samples", format!("{} train, {} test", m.n_train, m.n_test)),
        (m.metric.as_str(), format!("train {}  test {}", fmt_metric(m.train), fmt_metric(m.test))),
        ("trees", s.n_trees.to_string()),
        ("parameters", s.param_count.to_string()),
        ("partitions", s.partitions.to_string()),
        ("leaves", s.leaves.to_string()),
        ("depth", s.max_depth.to_string()),
        ("levels", levels),
        ("wall time", format!("{:.3} s", outcome.elapsed.as_secs_f64())),
    ];
    let mut text = String::from("slm training report\n\n");
    for (k, v) in rows {
        text.push_str(&format!("  {k:<12}{v}\n"));
    }
    document(
        &text,
        &serde_json::json!({
            "metrics": m,
            "wall_time_s": outcome.elapsed.as_secs_f64(),
            "config": cfg,
        }),
    )
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let cfg = train_config(a)?;
    let outcome = run::run(&cfg)?;
    write_file(&a.output, outcome.file.to_json()?.as_bytes())?;
    let report = train_report(&outcome, &cfg);
    write_file(&a.report.clone().unwrap_or_else(|| sibling(&a.output, ".report.txt")), report.as_bytes())?;
    if let Some(curve) = &outcome.curve {
        write_file(&a.curve.clone().unwrap_or_else(|| sibling(&a.output, ".curve.csv")), curve.to_csv().as_bytes())?;
    }
    print!("{report}");
    Ok(())
}

fn predictions_csv(preds: &[Prediction], n_classes: Option<usize>) -> String {
    let mut out = String::from("row,prediction");
    if let Some(k) = n_classes {
        for c in 0..k {
            out.push_str(&format!(",p_{c}"));
        }
    }
    out.push('\n');
    for (i, p) in preds.iter().enumerate() {
        match p {
            Prediction::Class { class, probabilities } => {
                out.push_str(&format!("{i},{class}"));
                for q in probabilities {
                    out.push_str(&format!(",{q:?}"));
                }
            }
            Prediction::Value(v) => out.push_str(&format!("{i},{v:?}")),
        }
        out.push('\n');
    }
    out
}

pub fn predict(a: &PredictArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model)?;
    let model = &file.model;
    let task = model.task();
    if let Some(expected) = a.task {
        if expected != task {
            return Err(CliError::input("task mismatch", format!("model is {task}, command expects {expected}")));
        }
    }
    let d = model.n_features();
    let mismatch = |found: usize| CliError::input("dimension mismatch", format!("expected {d} features, found {found}"));
    let (preds, scored) = if a.no_target {
        let (x, width) = load_features(&a.data, !a.no_header)?;
        if width != d {
            return Err(mismatch(width));
        }
        let preds = x.chunks_exact(width).map(|row| model.predict(row)).collect::<Result<Vec<_>, _>>()?;
        (preds, None)
    } else {
        let ds = load_csv(&a.data, &TargetColumn::parse(&a.target), task, !a.no_header)?;
        if ds.n_features() != d {
            return Err(mismatch(ds.n_features()));
        }
        let preds = run::predict_all(model, &ds)?;
        let score = metrics::score(&ds, &preds)?;
        (preds, Some(score))
    };
    let body = predictions_csv(&preds, model.n_classes().filter(|_| task == Task::Classification));
    match &a.output {
        Some(p) => write_file(p, body.as_bytes())?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    let mut summary = format!("rows {}", preds.len());
    if let Some(s) = scored {
        summary.push_str(&format!("  {} {}", run::metric_name(task), fmt_metric(s)));
    }
    eprintln!("{summary}");
    Ok(())
}

pub fn benchmark(a: &BenchmarkArgs) -> CliResult<()> {
    let suite = Suite::load(&a.suite)?;
    let output = bench::run_suite(&suite, &a.hyper, &a.out)?;
    bench::write_outputs(&output, &a.out)?;
    print!("{}", bench::timed_table(&output));
    Ok(())
}

pub fn inspect(a: &InspectArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model)?;
    let summary = StructureSummary::of(&file.model);
    let per_tree: Vec<_> = file.model.trees().iter().map(|t| t.stats()).collect();
    if a.json {
        let v = serde_json::json!({ "summary": file.summary, "structure": summary, "trees": per_tree });
        println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        return Ok(());
    }
    println!("model       {}", file.summary.model);
    println!("task        {}", file.summary.task);
    println!("features    {}", file.summary.n_features);
    if let Some(k) = file.summary.n_classes {
        println!("classes     {k}");
    }
    println!("trees       {}", summary.n_trees);
    println!("parameters  {}", summary.param_count);
    println!("partitions  {}", summary.partitions);
    println!("depth       {}", summary.max_depth);
    for (i, s) in per_tree.iter().enumerate().take(10) {
        let levels = s.nodes_per_level.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        println!("tree {i:<6} depth {}  partitions {}  leaves {}  levels [{levels}]", s.depth, s.partitions, s.leaves);
    }
    if per_tree.len() > 10 {
        println!("... {} more trees", per_tree.len() - 10);
    }
    Ok(())
}
