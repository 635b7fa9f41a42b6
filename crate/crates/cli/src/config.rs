//! Run configuration: model kinds, hyperparameter overrides and data sources.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use slm::dataset::synth::{self, BoundaryNoise, FriedmanConfig, FriedmanVariant};
use slm::dataset::{load_csv, SplitSpec, TargetColumn};
use slm::dft::LossKind;
use slm::ensemble::{BoostParams, ForestParams};
use slm::projection::ProjectionParams;
use slm::{Dataset, Task, TreeParams};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SlmTree,
    SlmForest,
    SlmBoost,
    SlrTree,
    SlrForest,
    SlrBoost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Tree,
    Forest,
    Boost,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SlmTree => "slm-tree",
            ModelKind::SlmForest => "slm-forest",
            ModelKind::SlmBoost => "slm-boost",
            ModelKind::SlrTree => "slr-tree",
            ModelKind::SlrForest => "slr-forest",
            ModelKind::SlrBoost => "slr-boost",
        }
    }

    pub fn task(self) -> Task {
        match self {
            ModelKind::SlmTree | ModelKind::SlmForest | ModelKind::SlmBoost => Task::Classification,
            _ => Task::Regression,
        }
    }

    pub fn family(self) -> Family {
        match self {
            ModelKind::SlmTree | ModelKind::SlrTree => Family::Tree,
            ModelKind::SlmForest | ModelKind::SlrForest => Family::Forest,
            ModelKind::SlmBoost | ModelKind::SlrBoost => Family::Boost,
        }
    }
}

/// Hyperparameters as given on the command line or in a config file;
/// unset fields fall back to the next layer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct HyperOverrides {
    /// Retained input dimensions (default: all)
    #[arg(long)]
    pub d0: Option<usize>,
    /// Candidate projections per node
    #[arg(long = "p")]
    pub p: Option<usize>,
    /// Active coefficients per candidate (R)
    #[arg(long)]
    pub active: Option<usize>,
    /// Envelope scale
    #[arg(long)]
    pub a_int: Option<f64>,
    /// Envelope decay rate
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Selection-probability decay rate
    #[arg(long)]
    pub beta: Option<f64>,
    /// Maximum hyperplanes per node
    #[arg(long)]
    pub q_max: Option<usize>,
    /// Cosine cap between hyperplanes of one node
    #[arg(long)]
    pub theta_minimax: Option<f64>,
    /// Enumerate candidate lattices up to this size
    #[arg(long)]
    pub exhaustive_limit: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub min_loss: Option<f64>,
    /// Forest size
    #[arg(long)]
    pub trees: Option<usize>,
    /// Bootstrap rows for each forest tree
    #[arg(long)]
    pub bagging: Option<bool>,
    /// Boosting rounds
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub base_score: Option<f64>,
    /// Split boosting trees by MSE on the negative gradient
    #[arg(long)]
    pub residual_splits: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! layer {
    ($base:expr, $top:expr, $($f:ident),*) => {
        HyperOverrides { $($f: $top.$f.or($base.$f)),* }
    };
}

impl HyperOverrides {
    /// Fields set in `top` replace those in `self`.
    pub fn merged(&self, top: &HyperOverrides) -> HyperOverrides {
        layer!(
            self, top, d0, p, active, a_int, alpha, beta, q_max, theta_minimax, exhaustive_limit, bins, max_depth,
            min_samples, min_loss, trees, bagging, rounds, learning_rate, lambda, base_score, residual_splits, seed
        )
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::input("invalid config", e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_toml(&read_text(path)?)
    }

    /// Fills every unset field with the default for `kind`.
    pub fn resolve(&self, kind: ModelKind) -> Hyper {
        let d = Hyper::defaults(kind);
        Hyper {
            d0: self.d0.or(d.d0),
            p: self.p.unwrap_or(d.p),
            active: self.active.unwrap_or(d.active),
            a_int: self.a_int.unwrap_or(d.a_int),
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            q_max: self.q_max.unwrap_or(d.q_max),
            theta_minimax: self.theta_minimax.unwrap_or(d.theta_minimax),
            exhaustive_limit: self.exhaustive_limit.unwrap_or(d.exhaustive_limit),
            bins: self.bins.unwrap_or(d.bins),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            min_samples: self.min_samples.unwrap_or(d.min_samples),
            min_loss: self.min_loss.unwrap_or(d.min_loss),
            trees: self.trees.unwrap_or(d.trees),
            bagging: self.bagging.unwrap_or(d.bagging),
            rounds: self.rounds.unwrap_or(d.rounds),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            lambda: self.lambda.unwrap_or(d.lambda),
            base_score: self.base_score.unwrap_or(d.base_score),
            residual_splits: self.residual_splits.unwrap_or(d.residual_splits),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

/// Fully resolved hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Hyper {
    pub d0: Option<usize>,
    pub p: usize,
    pub active: usize,
    pub a_int: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q_max: usize,
    pub theta_minimax: f64,
    pub exhaustive_limit: usize,
    pub bins: usize,
    pub max_depth: usize,
    pub min_samples: usize,
    pub min_loss: f64,
    pub trees: usize,
    pub bagging: bool,
    pub rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub base_score: f64,
    pub residual_splits: bool,
    pub seed: u64,
}

impl Hyper {
    /// Library defaults, except that forests always sample candidates
    /// (enumeration would make every tree identical) and boosting grows
    /// shallow trees.
    pub fn defaults(kind: ModelKind) -> Self {
        let tree = TreeParams::default();
        let proj = ProjectionParams::default();
        let forest = ForestParams::default();
        let boost = BoostParams::default();
        let mut h = Hyper {
            d0: proj.d0,
            p: proj.n_candidates,
            active: proj.active,
            a_int: proj.envelope_scale,
            alpha: proj.alpha,
            beta: proj.beta,
            q_max: proj.q_max,
            theta_minimax: proj.theta_minimax,
            exhaustive_limit: proj.exhaustive_limit,
            bins: tree.bins,
            max_depth: tree.max_depth,
            min_samples: tree.min_samples,
            min_loss: tree.min_loss,
            trees: forest.n_trees,
            bagging: forest.bagging,
            rounds: boost.n_rounds,
            learning_rate: boost.learning_rate,
            lambda: boost.lambda,
            base_score: boost.base_score,
            residual_splits: boost.residual_splits,
            seed: 0,
        };
        match kind.family() {
            Family::Forest => {
                h.exhaustive_limit = 0;
                h.p = 20;
            }
            Family::Boost => h.max_depth = 3,
            Family::Tree => {}
        }
        h
    }

    pub fn tree_params(&self, task: Task) -> TreeParams {
        TreeParams {
            projection: ProjectionParams {
                d0: self.d0,
                n_candidates: self.p,
                active: self.active,
                alpha: self.alpha,
                envelope_scale: self.a_int,
                beta: self.beta,
                q_max: self.q_max,
                theta_minimax: self.theta_minimax,
                rounds: Vec::new(),
                exhaustive_limit: self.exhaustive_limit,
            },
            max_depth: self.max_depth,
            min_samples: self.min_samples,
            min_loss: self.min_loss,
            bins: self.bins,
            loss: match task {
                Task::Classification => LossKind::Entropy,
                Task::Regression => LossKind::Mse,
            },
        }
    }

    pub fn forest_params(&self, task: Task) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            tree: self.tree_params(task),
            seed: self.seed,
            bagging: self.bagging,
        }
    }

    pub fn boost_params(&self, task: Task) -> BoostParams {
        BoostParams {
            n_rounds: self.rounds,
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            tree: self.tree_params(task),
            base_score: self.base_score,
            seed: self.seed,
            residual_splits: self.residual_splits,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Moons2,
    Moons4,
    CircleRing,
    Friedman1,
    Friedman2,
    Friedman3,
}

impl GenKind {
    pub fn task(self) -> Task {
        match self {
            GenKind::Moons2 | GenKind::Moons4 | GenKind::CircleRing => Task::Classification,
            _ => Task::Regression,
        }
    }

    /// Boundary-noise fraction for the 2D sets, target noise standard
    /// deviation for the Friedman sets.
    pub fn default_noise(self) -> f64 {
        match self {
            GenKind::Moons2 => 0.3,
            GenKind::Moons4 | GenKind::CircleRing => 0.2,
            _ => 0.0,
        }
    }
}

/// A synthetic dataset. `n` counts samples per class for the 2D sets and
/// samples in total for the Friedman sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    #[serde(default)]
    pub noise: Option<f64>,
    /// Standard deviation of the boundary jitter (2D sets only).
    #[serde(default)]
    pub jitter: Option<f64>,
    /// Input dimension of Friedman-1.
    #[serde(default)]
    pub features: Option<usize>,
    /// Draw Friedman-2/3 inputs from (0, 1].
    #[serde(default)]
    pub unit_inputs: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl GenSpec {
    /// Same spec with every default written out.
    pub fn resolved(&self, default_seed: u64) -> GenSpec {
        let classification = self.kind.task() == Task::Classification;
        GenSpec {
            kind: self.kind,
            n: self.n,
            noise: Some(self.noise.unwrap_or(self.kind.default_noise())),
            jitter: if classification {
                Some(self.jitter.unwrap_or(match self.kind {
                    GenKind::Moons2 => synth::TWO_MOONS_JITTER,
                    GenKind::Moons4 => synth::MANY_MOONS_JITTER,
                    _ => synth::CIRCLE_RING_JITTER,
                }))
            } else {
                None
            },
            features: if self.kind == GenKind::Friedman1 { Some(self.features.unwrap_or(10)) } else { None },
            unit_inputs: self.unit_inputs,
            seed: Some(self.seed.unwrap_or(default_seed)),
        }
    }

    pub fn generate(&self, default_seed: u64) -> CliResult<Dataset> {
        let spec = self.resolved(default_seed);
        let seed = spec.seed.unwrap_or(default_seed);
        let noise = spec.noise.unwrap_or(0.0);
        let boundary = || BoundaryNoise::new(noise, spec.jitter.unwrap_or(0.0));
        let ds = match spec.kind {
            GenKind::Moons2 => synth::moons(2, spec.n, boundary(), seed),
            GenKind::Moons4 => synth::moons(4, spec.n, boundary(), seed),
            GenKind::CircleRing => synth::circle_and_ring(spec.n, boundary(), seed),
            GenKind::Friedman1 | GenKind::Friedman2 | GenKind::Friedman3 => {
                let variant = match spec.kind {
                    GenKind::Friedman1 => FriedmanVariant::One,
                    GenKind::Friedman2 => FriedmanVariant::Two,
                    _ => FriedmanVariant::Three,
                };
                let cfg = FriedmanConfig {
                    n_features: spec.features.unwrap_or(10),
                    noise,
                    unit_inputs: spec.unit_inputs,
                    ..FriedmanConfig::new(variant, spec.n)
                };
                synth::friedman(&cfg, seed)
            }
        };
        ds.map_err(CliError::from)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CsvSpec {
    pub path: PathBuf,
    /// Header name, column index, or `last`.
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_target() -> String {
    "last".into()
}

fn default_true() -> bool {
    true
}

impl CsvSpec {
    pub fn load(&self, task: Task) -> CliResult<Dataset> {
        load_csv(&self.path, &TargetColumn::parse(&self.target), task, self.has_header).map_err(CliError::from)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSpec {
    Generate(GenSpec),
    Csv(CsvSpec),
}

impl DataSpec {
    pub fn load(&self, task: Task, default_seed: u64) -> CliResult<Dataset> {
        let ds = match self {
            DataSpec::Generate(g) => g.generate(default_seed)?,
            DataSpec::Csv(c) => c.load(task)?,
        };
        if ds.task() != task {
            return Err(CliError::input(
                "task mismatch",
                format!("model is {task}, data is {}", ds.task()),
            ));
        }
        Ok(ds)
    }

    /// Copy with defaults made explicit, for echoing.
    pub fn resolved(&self, default_seed: u64) -> DataSpec {
        match self {
            DataSpec::Generate(g) => DataSpec::Generate(g.resolved(default_seed)),
            DataSpec::Csv(c) => DataSpec::Csv(c.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratify: bool,
}

impl SplitConfig {
    pub fn spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratify: self.stratify,
        }
    }
}

/// Everything needed to reproduce one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub model: ModelKind,
    pub data: DataSpec,
    /// Separate test data; without it the data is split.
    pub test: Option<DataSpec>,
    pub split: SplitConfig,
    pub hyper: Hyper,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::input("input not found", path.display().to_string()),
        _ => CliError::from(e),
    })
}
