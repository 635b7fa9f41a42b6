//! Forest and boosting ensembles of SLM trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Target, Task};
use crate::dft::LossKind;
use crate::error::{Result, SlmError};
use crate::tree::{argmax, check_input, grow_tree, FitTargets, Prediction, SlmTree, TreeParams};

/// Mixes a base seed with a stream index into an independent seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(stream))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub seed: u64,
    /// Bootstrap rows per tree. Off by default: diversity comes from the
    /// projection sampling alone.
    pub bagging: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 20,
            tree: TreeParams::default(),
            seed: 0,
            bagging: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    /// Split and leaf loss are forced to the second-order gain.
    pub tree: TreeParams,
    pub base_score: f64,
    pub seed: u64,
    /// Choose splits by MSE on the negative gradient instead of the
    /// second-order gain. Leaves keep the Newton value either way.
    pub residual_splits: bool,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            lambda: 0.0,
            tree: TreeParams::default(),
            base_score: 0.0,
            seed: 0,
            residual_splits: false,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(SlmError::InvalidParameter("n_rounds must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(SlmError::InvalidParameter(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SlmError::InvalidParameter(format!("lambda {} must be non-negative", self.lambda)));
        }
        if !self.base_score.is_finite() {
            return Err(SlmError::InvalidParameter("base_score must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Forest,
    Boost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: EnsembleKind,
    pub task: Task,
    pub n_classes: Option<usize>,
    pub n_features: usize,
    /// Boosting with `K > 2` classes stores `K` trees per round, class-major within a round.
    pub trees: Vec<SlmTree>,
    /// Seed each tree was grown from.
    pub tree_seeds: Vec<u64>,
    pub learning_rate: f64,
    pub base_score: f64,
}

/// Per-step training record; `index` is 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub index: usize,
    pub train: f64,
    pub holdout: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// Name of the tracked quantity, e.g. `logloss` or `accuracy`.
    pub metric: String,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!("index,train_{m},holdout_{m}\n", m = self.metric);
        for p in &self.points {
            match p.holdout {
                Some(h) => out.push_str(&format!("{},{:?},{:?}\n", p.index, p.train, h)),
                None => out.push_str(&format!("{},{:?},\n", p.index, p.train)),
            }
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn bootstrap(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    rows.sort_unstable();
    rows
}

fn natural_targets(ds: &Dataset) -> FitTargets<'_> {
    match ds.target() {
        Target::Labels { labels, n_classes } => FitTargets::Classes { labels, n_classes: *n_classes },
        Target::Values(v) => FitTargets::Values(v),
    }
}

/// Trains `n_trees` trees on the full training set, each with its own
/// random stream.
pub fn fit_forest(train: &Dataset, params: &ForestParams) -> Result<EnsembleModel> {
    if params.n_trees == 0 {
        return Err(SlmError::InvalidParameter("n_trees must be at least 1".into()));
    }
    let mut tree_params = params.tree.clone();
    tree_params.loss = match train.task() {
        Task::Classification => LossKind::Entropy,
        Task::Regression => LossKind::Mse,
    };
    let seeds: Vec<u64> = (0..params.n_trees as u64).map(|i| derive_seed(params.seed, i)).collect();
    let all_rows: Vec<usize> = (0..train.n_samples()).collect();
    let trees = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = if params.bagging {
                bootstrap(train.n_samples(), &mut rng)
            } else {
                all_rows.clone()
            };
            grow_tree(train, &rows, natural_targets(train), &tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        kind: EnsembleKind::Forest,
        task: train.task(),
        n_classes: train.n_classes(),
        n_features: train.n_features(),
        trees,
        tree_seeds: seeds,
        learning_rate: 1.0,
        base_score: 0.0,
    })
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

/// Loss used by the booster, with its first and second derivative in the
/// score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoostLoss {
    /// `0.5 (score - y)^2`.
    Squared,
    /// Log-loss of `sigmoid(score)` against a 0/1 label.
    Logistic,
}

impl BoostLoss {
    pub fn value(self, score: f64, y: f64) -> f64 {
        match self {
            BoostLoss::Squared => 0.5 * (score - y).powi(2),
            BoostLoss::Logistic => softplus(score) - y * score,
        }
    }

    pub fn gradient(self, score: f64, y: f64) -> (f64, f64) {
        match self {
            BoostLoss::Squared => (score - y, 1.0),
            BoostLoss::Logistic => {
                let p = sigmoid(score);
                (p - y, p * (1.0 - p))
            }
        }
    }
}

/// Softmax cross-entropy gradients for class `k` given all class scores.
pub fn softmax_gradient(scores: &[f64], label: usize, k: usize) -> (f64, f64) {
    let p = softmax(scores)[k];
    (p - f64::from(u8::from(label == k)), p * (1.0 - p))
}

/// Per-sample mean training loss for the score layout of a boosted model.
fn mean_loss(scores: &[f64], width: usize, ds: &Dataset) -> f64 {
    let n = ds.n_samples();
    let total: f64 = match ds.target() {
        Target::Values(y) => (0..n).map(|i| BoostLoss::Squared.value(scores[i], y[i])).sum(),
        Target::Labels { labels, .. } if width == 1 => {
            (0..n).map(|i| BoostLoss::Logistic.value(scores[i], labels[i] as f64)).sum()
        }
        Target::Labels { labels, .. } => (0..n)
            .map(|i| {
                let s = &scores[i * width..(i + 1) * width];
                log_sum_exp(s) - s[labels[i]]
            })
            .sum(),
    };
    total / n as f64
}

fn score_width(task: Task, n_classes: Option<usize>) -> usize {
    match (task, n_classes) {
        (Task::Classification, Some(k)) if k > 2 => k,
        _ => 1,
    }
}

/// Second-order gradient boosting. Returns the model and the mean training
/// loss (plus holdout loss when given) after every round.
pub fn fit_boost(train: &Dataset, params: &BoostParams, holdout: Option<&Dataset>) -> Result<(EnsembleModel, LearningCurve)> {
    params.validate()?;
    if let Some(h) = holdout {
        if h.n_features() != train.n_features() || h.task() != train.task() {
            return Err(SlmError::InvalidParameter("holdout set does not match the training set".into()));
        }
    }
    let task = train.task();
    let n_classes = train.n_classes();
    let width = score_width(task, n_classes);
    let n = train.n_samples();
    let mut tree_params = params.tree.clone();
    tree_params.loss = LossKind::XgbGain { lambda: params.lambda };

    let mut scores = vec![params.base_score; n * width];
    let mut holdout_scores = holdout.map(|h| vec![params.base_score; h.n_samples() * width]);
    let rows: Vec<usize> = (0..n).collect();
    let mut trees = Vec::with_capacity(params.n_rounds * width);
    let mut seeds = Vec::with_capacity(params.n_rounds * width);
    let mut curve = LearningCurve {
        metric: if task == Task::Classification { "logloss".into() } else { "loss".into() },
        points: Vec::with_capacity(params.n_rounds),
    };
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for round in 0..params.n_rounds {
        let mut round_trees = Vec::with_capacity(width);
        for k in 0..width {
            for i in 0..n {
                let (g, h) = match train.target() {
                    Target::Values(y) => BoostLoss::Squared.gradient(scores[i], y[i]),
                    Target::Labels { labels, .. } if width == 1 => {
                        BoostLoss::Logistic.gradient(scores[i], labels[i] as f64)
                    }
                    Target::Labels { labels, .. } => softmax_gradient(&scores[i * width..(i + 1) * width], labels[i], k),
                };
                if !(g.is_finite() && h.is_finite()) {
                    return Err(SlmError::NonFiniteGradient { round: round + 1 });
                }
                grad[i] = g;
                hess[i] = h;
            }
            let seed = derive_seed(params.seed, (round * width + k) as u64);
            let targets = FitTargets::Gradients {
                grad: &grad,
                hess: &hess,
                lambda: params.lambda,
                residual_splits: params.residual_splits,
            };
            let tree = grow_tree(train, &rows, targets, &tree_params, &mut ChaCha8Rng::seed_from_u64(seed))?;
            round_trees.push(tree);
            seeds.push(seed);
        }
        // All class trees of a round see the same scores; update afterwards.
        for (k, tree) in round_trees.iter().enumerate() {
            for i in 0..n {
                scores[i * width + k] += params.learning_rate * tree.predict_value(train.row(i))?;
            }
            if let (Some(h), Some(hs)) = (holdout, holdout_scores.as_mut()) {
                for i in 0..h.n_samples() {
                    hs[i * width + k] += params.learning_rate * tree.predict_value(h.row(i))?;
                }
            }
        }
        trees.extend(round_trees);
        let train_loss = mean_loss(&scores, width, train);
        if !train_loss.is_finite() {
            return Err(SlmError::NonFiniteGradient { round: round + 1 });
        }
        curve.points.push(CurvePoint {
            index: round + 1,
            train: train_loss,
            holdout: holdout.zip(holdout_scores.as_ref()).map(|(h, hs)| mean_loss(hs, width, h)),
        });
    }

    Ok((
        EnsembleModel {
            kind: EnsembleKind::Boost,
            task,
            n_classes,
            n_features: train.n_features(),
            trees,
            tree_seeds: seeds,
            learning_rate: params.learning_rate,
            base_score: params.base_score,
        },
        curve,
    ))
}

impl EnsembleModel {
    fn width(&self) -> usize {
        score_width(self.task, self.n_classes)
    }

    /// Accumulated boosting scores (one per class for multiclass models).
    pub fn boost_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x, self.n_features)?;
        let width = self.width();
        let mut s = vec![self.base_score; width];
        for (t, tree) in self.trees.iter().enumerate() {
            s[t % width] += self.learning_rate * tree.predict_value(x)?;
        }
        Ok(s)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self.kind {
            EnsembleKind::Forest => self.predict_forest_prefix(x, self.trees.len()),
            EnsembleKind::Boost => {
                let s = self.boost_scores(x)?;
                Ok(match self.task {
                    Task::Regression => Prediction::Value(s[0]),
                    Task::Classification => {
                        let probabilities = if s.len() == 1 {
                            let p = sigmoid(s[0]);
                            vec![1.0 - p, p]
                        } else {
                            softmax(&s)
                        };
                        Prediction::Class {
                            class: argmax(&probabilities),
                            probabilities,
                        }
                    }
                })
            }
        }
    }

    /// Forest output using only the first `m` trees.
    pub fn predict_forest_prefix(&self, x: &[f64], m: usize) -> Result<Prediction> {
        check_input(x, self.n_features)?;
        let trees = &self.trees[..m.min(self.trees.len())];
        if trees.is_empty() {
            return Err(SlmError::InvalidParameter("forest prefix has no trees".into()));
        }
        match self.task {
            Task::Classification => {
                let k = self.n_classes.unwrap_or(2);
                let mut votes = vec![0usize; k];
                for t in trees {
                    votes[t.predict(x)?.class().unwrap_or(0)] += 1;
                }
                let probabilities: Vec<f64> = votes.iter().map(|&v| v as f64 / trees.len() as f64).collect();
                Ok(Prediction::Class {
                    class: argmax(&probabilities),
                    probabilities,
                })
            }
            Task::Regression => {
                let sum = trees
                    .iter()
                    .map(|t| t.predict_value(x))
                    .sum::<Result<f64>>()?;
                Ok(Prediction::Value(sum / trees.len() as f64))
            }
        }
    }
}

/// Cumulative-vote accuracy (classification) or RMSE of the running mean
/// (regression) after each added forest tree.
pub fn forest_learning_curve(model: &EnsembleModel, train: &Dataset, holdout: Option<&Dataset>) -> Result<LearningCurve> {
    if model.kind != EnsembleKind::Forest {
        return Err(SlmError::InvalidParameter("learning curve by prefix needs a forest".into()));
    }
    let metric_at = |ds: &Dataset, m: usize| -> Result<f64> {
        let preds = (0..ds.n_samples())
            .map(|i| model.predict_forest_prefix(ds.row(i), m))
            .collect::<Result<Vec<_>>>()?;
        crate::metrics::score(ds, &preds)
    };
    let points = (1..=model.trees.len())
        .into_par_iter()
        .map(|m| {
            Ok(CurvePoint {
                index: m,
                train: metric_at(train, m)?,
                holdout: holdout.map(|h| metric_at(h, m)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LearningCurve {
        metric: if model.task == Task::Classification { "accuracy".into() } else { "rmse".into() },
        points,
    })
}
