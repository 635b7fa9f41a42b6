//! Benchmark suites: every (dataset, model, grid point) cell is trained and
//! tabulated. A failing cell is reported as `FAIL(reason)` and the rest of
//! the suite still runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CsvSpec, DataSpec, GenSpec, HyperOverrides, ModelKind, RunConfig, SplitConfig};
use crate::error::{CliError, CliResult};
use crate::report::{aligned_table, document, fmt_metric};
use crate::run::{self, Metrics};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Suite {
    pub seed: u64,
    pub train_fraction: Option<f64>,
    pub stratify: Option<bool>,
    /// Models run on every dataset that does not list its own.
    pub models: Vec<ModelKind>,
    pub hyper: HyperOverrides,
    /// Per-model overrides, `[model.slm-boost]`.
    pub model: BTreeMap<ModelKind, HyperOverrides>,
    #[serde(rename = "dataset")]
    pub datasets: Vec<SuiteDataset>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SuiteDataset {
    pub name: String,
    #[serde(default)]
    pub generate: Option<GenSpec>,
    #[serde(default)]
    pub csv: Option<CsvSpec>,
    #[serde(default)]
    pub test_csv: Option<CsvSpec>,
    #[serde(default)]
    pub models: Option<Vec<ModelKind>>,
    #[serde(default)]
    pub hyper: HyperOverrides,
    #[serde(default)]
    pub model: BTreeMap<ModelKind, HyperOverrides>,
    /// Hyperparameter grid: every combination becomes its own cell.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<toml::Value>>,
    /// Externally produced scores shown alongside, keyed by model name.
    #[serde(default)]
    pub baselines: BTreeMap<String, f64>,
}

impl Suite {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::input("invalid config", e.to_string()))
    }

    /// Reads a suite file; relative CSV paths are taken from its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut suite = Self::from_toml(&crate::config::read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut suite.datasets {
            for c in [d.csv.as_mut(), d.test_csv.as_mut()].into_iter().flatten() {
                if c.path.is_relative() {
                    c.path = base.join(&c.path);
                }
            }
        }
        Ok(suite)
    }
}

pub struct Cell {
    pub dataset: String,
    pub model: ModelKind,
    /// Grid point label, empty without a grid.
    pub variant: String,
    pub config: Result<RunConfig, CliError>,
}

impl Cell {
    pub fn slug(&self) -> String {
        let mut s = format!("{}__{}", self.dataset, self.model.name());
        if !self.variant.is_empty() {
            s.push_str("__");
            s.push_str(&self.variant);
        }
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
            .collect()
    }
}

fn grid_points(grid: &BTreeMap<String, Vec<toml::Value>>) -> Vec<Vec<(String, toml::Value)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn apply_point(h: &HyperOverrides, point: &[(String, toml::Value)]) -> CliResult<HyperOverrides> {
    let bad = |e: String| CliError::input("invalid config", e);
    let mut table = toml::Table::try_from(h).map_err(|e| bad(e.to_string()))?;
    for (k, v) in point {
        table.insert(k.clone(), v.clone());
    }
    table.try_into().map_err(|e: toml::de::Error| bad(e.to_string()))
}

/// Expands the suite into cells. `flags` override every file setting.
pub fn cells(suite: &Suite, flags: &HyperOverrides) -> Vec<Cell> {
    let mut out = Vec::new();
    let none = HyperOverrides::default();
    for d in &suite.datasets {
        let models = d.models.clone().unwrap_or_else(|| suite.models.clone());
        for &model in &models {
            for point in grid_points(&d.grid) {
                let variant = point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
                let config = (|| {
                    let layered = HyperOverrides { seed: Some(suite.seed), ..Default::default() }
                        .merged(&suite.hyper)
                        .merged(suite.model.get(&model).unwrap_or(&none))
                        .merged(&d.hyper)
                        .merged(d.model.get(&model).unwrap_or(&none));
                    let hyper = apply_point(&layered, &point)?.merged(flags).resolve(model);
                    let data = match (&d.generate, &d.csv) {
                        (Some(g), None) => DataSpec::Generate(g.clone()),
                        (None, Some(c)) => DataSpec::Csv(c.clone()),
                        _ => {
                            return Err(CliError::input(
                                "invalid config",
                                format!("dataset {:?} needs exactly one of `generate` or `csv`", d.name),
                            ))
                        }
                    };
                    Ok(RunConfig {
                        model,
                        data: data.resolved(suite.seed),
                        test: d.test_csv.clone().map(DataSpec::Csv),
                        split: SplitConfig {
                            train_fraction: suite.train_fraction.unwrap_or(0.6),
                            seed: suite.seed,
                            stratify: suite.stratify.unwrap_or(true),
                        },
                        hyper,
                    })
                })();
                out.push(Cell { dataset: d.name.clone(), model, variant, config });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub model: String,
    pub variant: String,
    /// `ok`, `FAIL(reason)`, or `baseline`.
    pub status: String,
    pub metrics: Option<Metrics>,
    /// Score of an externally produced baseline.
    pub baseline: Option<f64>,
    pub config: Option<RunConfig>,
}

pub struct BenchOutput {
    pub results: Vec<CellResult>,
    /// Training seconds per result row (0 for failures and baselines).
    pub seconds: Vec<f64>,
}

/// Runs every cell (in parallel) and writes models and curves under `out`.
pub fn run_suite(suite: &Suite, flags: &HyperOverrides, out: &Path) -> CliResult<BenchOutput> {
    let cells = cells(suite, flags);
    std::fs::create_dir_all(out.join("models"))?;
    std::fs::create_dir_all(out.join("curves"))?;
    let done: Vec<(CellResult, f64)> = cells
        .par_iter()
        .map(|cell| {
            let base = CellResult {
                dataset: cell.dataset.clone(),
                model: cell.model.name().into(),
                variant: cell.variant.clone(),
                status: String::new(),
                metrics: None,
                baseline: None,
                config: cell.config.as_ref().ok().cloned(),
            };
            let attempt = cell.config.as_ref().map_err(|e| CliError::input(e.reason, e.detail.clone())).and_then(|cfg| {
                let outcome = run::run(cfg)?;
                let slug = cell.slug();
                std::fs::write(out.join("models").join(format!("{slug}.json")), outcome.file.to_json()?)?;
                if let Some(curve) = &outcome.curve {
                    curve.write_csv(&out.join("curves").join(format!("{slug}.csv")))?;
                }
                Ok(outcome)
            });
            match attempt {
                Ok(o) => (CellResult { status: "ok".into(), metrics: Some(o.metrics), ..base }, o.elapsed.as_secs_f64()),
                Err(e) => (CellResult { status: format!("FAIL({})", e.reason), ..base }, 0.0),
            }
        })
        .collect();
    let (mut results, mut seconds): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    for d in &suite.datasets {
        for (name, &score) in &d.baselines {
            results.push(CellResult {
                dataset: d.name.clone(),
                model: name.clone(),
                variant: String::new(),
                status: "baseline".into(),
                metrics: None,
                baseline: Some(score),
                config: None,
            });
            seconds.push(0.0);
        }
    }
    Ok(BenchOutput { results, seconds })
}

const HEADERS: [&str; 9] = ["dataset", "model", "variant", "metric", "train", "test", "params", "depth", "partitions"];

fn row(r: &CellResult) -> Vec<String> {
    let dash = || "-".to_string();
    let mut cells = vec![r.dataset.clone(), r.model.clone(), if r.variant.is_empty() { dash() } else { r.variant.clone() }];
    match (&r.metrics, r.baseline) {
        (Some(m), _) => cells.extend([
            m.metric.clone(),
            fmt_metric(m.train),
            fmt_metric(m.test),
            m.structure.param_count.to_string(),
            m.structure.max_depth.to_string(),
            m.structure.partitions.to_string(),
        ]),
        (None, Some(b)) => cells.extend([dash(), dash(), fmt_metric(b), dash(), dash(), dash()]),
        (None, None) => cells.extend([dash(), dash(), r.status.clone(), dash(), dash(), dash()]),
    }
    cells
}

/// Deterministic report: aligned table plus JSON block with every config.
pub fn report_text(output: &BenchOutput) -> String {
    let rows: Vec<Vec<String>> = output.results.iter().map(row).collect();
    let text = format!("benchmark report\n\n{}", aligned_table(&HEADERS, &rows));
    document(&text, &serde_json::json!({ "results": output.results }))
}

/// Table with an extra training-time column, for the terminal.
pub fn timed_table(output: &BenchOutput) -> String {
    let mut headers = HEADERS.to_vec();
    headers.push("seconds");
    let rows: Vec<Vec<String>> = output
        .results
        .iter()
        .zip(&output.seconds)
        .map(|(r, s)| {
            let mut cells = row(r);
            cells.push(format!("{s:.3}"));
            cells
        })
        .collect();
    aligned_table(&headers, &rows)
}

pub fn results_csv(output: &BenchOutput) -> String {
    let mut s = HEADERS.join(",");
    s.push_str(",status\n");
    for r in &output.results {
        let mut cells = row(r);
        cells.push(r.status.clone());
        s.push_str(&cells.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

pub fn timings_csv(output: &BenchOutput) -> String {
    let mut s = String::from("dataset,model,variant,seconds\n");
    for (r, t) in output.results.iter().zip(&output.seconds) {
        s.push_str(&format!("{},{},{},{t:.6}\n", csv_cell(&r.dataset), csv_cell(&r.model), csv_cell(&r.variant)));
    }
    s
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `report.txt`, `results.csv` and `timings.csv` into `out`.
pub fn write_outputs(output: &BenchOutput, out: &Path) -> CliResult<Vec<PathBuf>> {
    let files = [
        ("report.txt", report_text(output)),
        ("results.csv", results_csv(output)),
        ("timings.csv", timings_csv(output)),
    ];
    let mut paths = Vec::new();
    for (name, body) in files {
        let p = out.join(name);
        std::fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}
