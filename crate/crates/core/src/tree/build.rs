use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{routing_key, Child, Leaf, LeafValue, Node, SlmTree, TreeParams};
use crate::dataset::{Dataset, Target, Task};
use crate::dft::{node_impurity, node_loss, rank_features, LossKind, NodeTargets};
use crate::error::{Result, SlmError};
use crate::projection::{coefficient_bounds, sample_candidates, select_decorrelated, RankedBasis};

/// Splits must lower the node loss by more than this to be accepted.
const MIN_IMPROVEMENT: f64 = 1e-12;

/// Targets indexed by dataset row.
#[derive(Clone, Copy, Debug)]
pub(crate) enum FitTargets<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
    /// First and second loss derivatives. Leaves hold `-G / (H + lambda)`.
    /// With `residual_splits` the splits minimise MSE on `-g` instead of
    /// the second-order structure score.
    Gradients {
        grad: &'a [f64],
        hess: &'a [f64],
        lambda: f64,
        residual_splits: bool,
    },
}

enum LocalTargets {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
    Gradients {
        grad: Vec<f64>,
        hess: Vec<f64>,
        lambda: f64,
        residual: Option<Vec<f64>>,
    },
}

impl FitTargets<'_> {
    fn gather(&self, idx: &[usize]) -> LocalTargets {
        match *self {
            FitTargets::Classes { labels, n_classes } => LocalTargets::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                n_classes,
            },
            FitTargets::Values(v) => LocalTargets::Values(idx.iter().map(|&i| v[i]).collect()),
            FitTargets::Gradients { grad, hess, lambda, residual_splits } => {
                let g: Vec<f64> = idx.iter().map(|&i| grad[i]).collect();
                LocalTargets::Gradients {
                    residual: residual_splits.then(|| g.iter().map(|x| -x).collect()),
                    grad: g,
                    hess: idx.iter().map(|&i| hess[i]).collect(),
                    lambda,
                }
            }
        }
    }
}

impl LocalTargets {
    fn view(&self) -> NodeTargets<'_> {
        match self {
            LocalTargets::Classes { labels, n_classes } => NodeTargets::Classes { labels, n_classes: *n_classes },
            LocalTargets::Values(v) => NodeTargets::Values(v),
            LocalTargets::Gradients { residual: Some(r), .. } => NodeTargets::Values(r),
            LocalTargets::Gradients { grad, hess, lambda, .. } => NodeTargets::Gradients { grad, hess, lambda: *lambda },
        }
    }

    fn leaf_value(&self) -> LeafValue {
        match self {
            LocalTargets::Classes { labels, n_classes } => {
                let mut h = vec![0; *n_classes];
                for &c in labels {
                    h[c] += 1;
                }
                LeafValue::Histogram(h)
            }
            LocalTargets::Values(v) => {
                // Shifted mean: constant targets reproduce the constant exactly.
                let origin = v[0];
                let shift = v.iter().map(|y| y - origin).sum::<f64>() / v.len() as f64;
                LeafValue::Value(origin + shift)
            }
            LocalTargets::Gradients { grad, hess, lambda, .. } => {
                let g: f64 = grad.iter().sum();
                let h: f64 = hess.iter().sum::<f64>() + lambda;
                LeafValue::Value(if h > 0.0 { -g / h } else { 0.0 })
            }
        }
    }
}

struct Grower<'a> {
    data: &'a Dataset,
    dims: &'a [usize],
    targets: FitTargets<'a>,
    params: &'a TreeParams,
}

impl Grower<'_> {
    fn node_matrix(&self, idx: &[usize]) -> Vec<f64> {
        let mut m = Vec::with_capacity(idx.len() * self.dims.len());
        for &i in idx {
            let row = self.data.row(i);
            m.extend(self.dims.iter().map(|&d| row[d]));
        }
        m
    }

    fn grow(&self, idx: Vec<usize>, depth: usize, mut rng: ChaCha8Rng) -> Result<Node> {
        let n = idx.len();
        let local = self.targets.gather(&idx);
        let view = local.view();
        let impurity = node_impurity(&view);
        let leaf = || {
            Node::Leaf(Leaf {
                value: local.leaf_value(),
                n_samples: n,
                depth,
                loss: impurity,
            })
        };
        if depth >= self.params.max_depth || n < self.params.min_samples || n < 2 || impurity < self.params.min_loss {
            return Ok(leaf());
        }

        let d0 = self.dims.len();
        let matrix = self.node_matrix(&idx);
        let bins = self.params.bins;
        let ranked = rank_features(&matrix, d0, &view, bins)?;
        let basis = RankedBasis { order: ranked.iter().map(|f| f.dim).collect() };
        let candidates = sample_candidates(&basis, &matrix, d0, &view, &self.params.projection, bins, &mut rng)?;
        let splits = select_decorrelated(&candidates, self.params.projection.q_max, self.params.projection.theta_minimax);
        let parent = node_loss(&view);
        match splits.first() {
            Some(best) if best.loss < parent - MIN_IMPROVEMENT => {}
            _ => return Ok(leaf()),
        }

        let mut cells: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (r, &i) in idx.iter().enumerate() {
            let x = &matrix[r * d0..(r + 1) * d0];
            cells.entry(routing_key(&splits, |d| x[d])).or_default().push(i);
        }
        let jobs: Vec<(u64, Vec<usize>, u64)> = cells.into_iter().map(|(k, rows)| (k, rows, rng.random())).collect();
        let children = jobs
            .into_par_iter()
            .map(|(key, rows, seed)| {
                self.grow(rows, depth + 1, ChaCha8Rng::seed_from_u64(seed))
                    .map(|node| Child { key, node })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Node::Internal {
            splits,
            children,
            n_samples: n,
            depth,
            loss: parent,
        })
    }
}

fn subspace_for(data: &Dataset, rows: &[usize], targets: &FitTargets<'_>, d0: usize, bins: usize) -> Result<Vec<usize>> {
    let d = data.n_features();
    if d0 == 0 || d0 > d {
        return Err(SlmError::InvalidParameter(format!("d0 = {d0} outside [1, {d}]")));
    }
    if d0 == d {
        return Ok((0..d).collect());
    }
    if rows.len() < 2 {
        return Ok((0..d0).collect());
    }
    let mut m = Vec::with_capacity(rows.len() * d);
    for &i in rows {
        m.extend_from_slice(data.row(i));
    }
    let local = targets.gather(rows);
    let ranked = rank_features(&m, d, &local.view(), bins)?;
    let mut dims: Vec<usize> = ranked.iter().take(d0).map(|f| f.dim).collect();
    dims.sort_unstable();
    Ok(dims)
}

/// The `d0` input dimensions with the lowest axis-aligned DFT cost, in
/// ascending index order.
pub fn select_subspace(ds: &Dataset, d0: usize, bins: usize) -> Result<Vec<usize>> {
    let rows: Vec<usize> = (0..ds.n_samples()).collect();
    subspace_for(ds, &rows, &natural_targets(ds), d0, bins)
}

fn natural_targets(ds: &Dataset) -> FitTargets<'_> {
    match ds.target() {
        Target::Labels { labels, n_classes } => FitTargets::Classes { labels, n_classes: *n_classes },
        Target::Values(v) => FitTargets::Values(v),
    }
}

pub(crate) fn grow_tree(data: &Dataset, rows: &[usize], targets: FitTargets<'_>, params: &TreeParams, rng: &mut ChaCha8Rng) -> Result<SlmTree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(SlmError::EmptyInput("training set has no samples".into()));
    }
    let d0 = params.projection.d0.unwrap_or(data.n_features());
    if params
        .projection
        .effective_rounds()
        .iter()
        .all(|r| coefficient_bounds(params.projection.envelope_scale, r.alpha, 1)[0] < 1)
    {
        return Err(SlmError::CollapsedEnvelope);
    }
    let dims = subspace_for(data, rows, &targets, d0, params.bins)?;
    let (task, n_classes) = match targets {
        FitTargets::Classes { n_classes, .. } => (Task::Classification, Some(n_classes)),
        _ => (Task::Regression, None),
    };
    let grower = Grower {
        data,
        dims: &dims,
        targets,
        params,
    };
    let root = grower.grow(rows.to_vec(), 0, ChaCha8Rng::seed_from_u64(rng.random()))?;
    Ok(SlmTree {
        root,
        dims,
        task,
        n_classes,
        n_features: data.n_features(),
        params: params.clone(),
    })
}

/// Grows an SLM (classification, entropy) or SLR (regression, MSE) tree on
/// every sample of `train`.
pub fn build_tree(train: &Dataset, params: &TreeParams, rng: &mut ChaCha8Rng) -> Result<SlmTree> {
    match (train.task(), params.loss) {
        (Task::Classification, LossKind::Entropy) | (Task::Regression, LossKind::Mse) => {}
        (task, loss) => {
            return Err(SlmError::InvalidParameter(format!(
                "{loss:?} split loss cannot grow a standalone {task} tree"
            )))
        }
    }
    let rows: Vec<usize> = (0..train.n_samples()).collect();
    grow_tree(train, &rows, natural_targets(train), params, rng)
}
