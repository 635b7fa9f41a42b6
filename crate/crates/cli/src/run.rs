//! Fits one configured model and measures it.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use slm::dataset::train_test_split;
use slm::ensemble::{fit_boost, fit_forest, forest_learning_curve, LearningCurve};
use slm::metrics;
use slm::tree::build_tree;
use slm::{Dataset, Model, ModelFile, Prediction, Task};

use crate::config::{Family, RunConfig};
use crate::error::{CliError, CliResult};

/// Structural summary over every tree of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub n_trees: usize,
    pub param_count: usize,
    pub partitions: usize,
    pub leaves: usize,
    /// Deepest tree.
    pub max_depth: usize,
    /// Per-level node counts of the first tree.
    pub first_tree_levels: Vec<usize>,
}

impl StructureSummary {
    pub fn of(model: &Model) -> Self {
        let trees = model.trees();
        let stats: Vec<_> = trees.iter().map(|t| t.stats()).collect();
        Self {
            n_trees: trees.len(),
            param_count: model.param_count(),
            partitions: stats.iter().map(|s| s.partitions).sum(),
            leaves: stats.iter().map(|s| s.leaves).sum(),
            max_depth: stats.iter().map(|s| s.depth).max().unwrap_or(0),
            first_tree_levels: stats.first().map(|s| s.nodes_per_level.clone()).unwrap_or_default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `accuracy` or `rmse`.
    pub metric: String,
    pub train: f64,
    pub test: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub structure: StructureSummary,
}

pub struct Outcome {
    pub file: ModelFile,
    pub curve: Option<LearningCurve>,
    pub metrics: Metrics,
    pub elapsed: Duration,
}

pub fn predict_all(model: &Model, ds: &Dataset) -> CliResult<Vec<Prediction>> {
    ds.rows().map(|x| model.predict(x).map_err(CliError::from)).collect()
}

pub fn metric_name(task: Task) -> &'static str {
    match task {
        Task::Classification => "accuracy",
        Task::Regression => "rmse",
    }
}

/// Loads (or generates) the data and returns the train and test sets.
pub fn prepare_data(cfg: &RunConfig) -> CliResult<(Dataset, Dataset)> {
    let task = cfg.model.task();
    let data = cfg.data.load(task, cfg.hyper.seed)?;
    match &cfg.test {
        Some(t) => {
            let test = t.load(task, cfg.hyper.seed)?;
            if test.n_features() != data.n_features() {
                return Err(CliError::input(
                    "dimension mismatch",
                    format!("expected {} features, found {}", data.n_features(), test.n_features()),
                ));
            }
            Ok((data, test))
        }
        None => train_test_split(&data, &cfg.split.spec()).map_err(CliError::from),
    }
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    let (train, test) = prepare_data(cfg)?;
    fit(cfg, &train, &test)
}

pub fn fit(cfg: &RunConfig, train: &Dataset, test: &Dataset) -> CliResult<Outcome> {
    let task = cfg.model.task();
    let h = &cfg.hyper;
    let start = Instant::now();
    let (model, curve) = match cfg.model.family() {
        Family::Tree => {
            let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
            let tree = build_tree(train, &h.tree_params(task), &mut rng).map_err(CliError::training)?;
            (Model::Tree(tree), None)
        }
        Family::Forest => {
            let forest = fit_forest(train, &h.forest_params(task)).map_err(CliError::training)?;
            let curve = forest_learning_curve(&forest, train, Some(test)).map_err(CliError::training)?;
            (Model::Ensemble(forest), Some(curve))
        }
        Family::Boost => {
            let (boost, curve) = fit_boost(train, &h.boost_params(task), Some(test)).map_err(CliError::training)?;
            (Model::Ensemble(boost), Some(curve))
        }
    };
    let elapsed = start.elapsed();

    let score = |ds: &Dataset| -> CliResult<f64> {
        let preds = predict_all(&model, ds)?;
        metrics::score(ds, &preds).map_err(CliError::from)
    };
    let metrics = Metrics {
        metric: metric_name(task).into(),
        train: score(train)?,
        test: score(test)?,
        n_train: train.n_samples(),
        n_test: test.n_samples(),
        structure: StructureSummary::of(&model),
    };
    let config = serde_json::to_value(cfg).map_err(|e| CliError::input("json error", e.to_string()))?;
    Ok(Outcome {
        file: ModelFile::new(model, config),
        curve,
        metrics,
        elapsed,
    })
}
