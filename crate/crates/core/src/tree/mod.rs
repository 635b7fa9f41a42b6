//! Single SLM/SLR trees.
//!
//! An internal node holds `q` hyperplanes. A sample's routing key has bit
//! `j` set when its projection on hyperplane `j` is `>=` that threshold;
//! children are the non-empty cells of the arrangement.

mod build;

pub use build::{build_tree, select_subspace};
pub(crate) use build::{grow_tree, FitTargets};

use serde::{Deserialize, Serialize};

use crate::dataset::Task;
use crate::dft::LossKind;
use crate::error::{Result, SlmError};
use crate::projection::{ProjectionParams, SplitRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub projection: ProjectionParams,
    /// Leaves sit at depth at most `max_depth` (root is depth 0).
    pub max_depth: usize,
    /// Nodes with fewer samples become leaves.
    pub min_samples: usize,
    /// Nodes whose impurity is below this become leaves.
    pub min_loss: f64,
    pub bins: usize,
    pub loss: LossKind,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            projection: ProjectionParams::default(),
            max_depth: 10,
            min_samples: 10,
            min_loss: 0.0,
            bins: 16,
            loss: LossKind::Entropy,
        }
    }
}

impl TreeParams {
    pub fn for_task(task: Task) -> Self {
        Self {
            loss: match task {
                Task::Classification => LossKind::Entropy,
                Task::Regression => LossKind::Mse,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(SlmError::InvalidParameter("max_depth must be at least 1".into()));
        }
        if self.min_samples < 2 {
            return Err(SlmError::InvalidParameter("min_samples must be at least 2".into()));
        }
        if self.bins < 2 {
            return Err(SlmError::InvalidParameter("bins must be at least 2".into()));
        }
        if !(self.min_loss >= 0.0) {
            return Err(SlmError::InvalidParameter(format!("min_loss {} must be non-negative", self.min_loss)));
        }
        if let LossKind::XgbGain { lambda } = self.loss {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(SlmError::InvalidParameter(format!("lambda {lambda} must be non-negative")));
            }
        }
        self.projection.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafValue {
    /// Training class counts.
    Histogram(Vec<usize>),
    /// Target mean (regression) or additive score (boosting).
    Value(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub value: LeafValue,
    pub n_samples: usize,
    pub depth: usize,
    /// Impurity of the training samples that reached the leaf.
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Child {
    /// Routing key, bit `j` = side of hyperplane `j`.
    pub key: u64,
    pub node: Node,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::model::NodeDoc", try_from = "crate::model::NodeDoc")]
pub enum Node {
    Internal {
        splits: Vec<SplitRecord>,
        /// Sorted by key.
        children: Vec<Child>,
        n_samples: usize,
        depth: usize,
        loss: f64,
    },
    Leaf(Leaf),
}

impl Node {
    pub fn n_samples(&self) -> usize {
        match self {
            Node::Internal { n_samples, .. } => *n_samples,
            Node::Leaf(l) => l.n_samples,
        }
    }

    pub fn loss(&self) -> f64 {
        match self {
            Node::Internal { loss, .. } => *loss,
            Node::Leaf(l) => l.loss,
        }
    }
}

/// Dot product of a subspace direction with the retained coordinates of
/// `x`. Zero coefficients are skipped, matching [`crate::dft::project`].
#[inline]
pub(crate) fn projection_value(direction: &[f64], x: impl Fn(usize) -> f64) -> f64 {
    direction
        .iter()
        .enumerate()
        .filter(|&(_, &a)| a != 0.0)
        .fold(0.0, |acc, (d, &a)| acc + a * x(d))
}

pub(crate) fn routing_key(splits: &[SplitRecord], x: impl Fn(usize) -> f64 + Copy) -> u64 {
    splits.iter().enumerate().fold(0u64, |key, (j, s)| {
        if projection_value(&s.direction, x) >= s.threshold {
            key | (1 << j)
        } else {
            key
        }
    })
}

/// Picks the child for `key`; an unseen cell goes to the nearest key by
/// Hamming distance, then to the child with more training samples.
fn child_for(children: &[Child], key: u64) -> &Node {
    if let Ok(i) = children.binary_search_by_key(&key, |c| c.key) {
        return &children[i].node;
    }
    let nearest = children
        .iter()
        .min_by(|a, b| {
            (a.key ^ key)
                .count_ones()
                .cmp(&(b.key ^ key).count_ones())
                .then(b.node.n_samples().cmp(&a.node.n_samples()))
                .then(a.key.cmp(&b.key))
        })
        .expect("internal node has children");
    &nearest.node
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    Class { class: usize, probabilities: Vec<f64> },
    Value(f64),
}

impl Prediction {
    pub fn class(&self) -> Option<usize> {
        match self {
            Prediction::Class { class, .. } => Some(*class),
            Prediction::Value(_) => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Prediction::Class { .. } => None,
            Prediction::Value(v) => Some(*v),
        }
    }
}

/// Index of the largest entry; ties go to the smallest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlmTree {
    pub root: Node,
    /// Input dimensions spanned by the projections, ascending.
    pub dims: Vec<usize>,
    pub task: Task,
    pub n_classes: Option<usize>,
    pub n_features: usize,
    pub params: TreeParams,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Longest root-to-leaf edge count.
    pub depth: usize,
    /// Node count per level, root first.
    pub nodes_per_level: Vec<usize>,
    /// Total hyperplanes over all internal nodes.
    pub partitions: usize,
    pub leaves: usize,
}

pub(crate) fn check_input(x: &[f64], n_features: usize) -> Result<()> {
    if x.len() != n_features {
        return Err(SlmError::DimensionMismatch {
            expected: n_features,
            found: x.len(),
        });
    }
    if let Some(d) = x.iter().position(|v| !v.is_finite()) {
        return Err(SlmError::NonFiniteInput(d));
    }
    Ok(())
}

impl SlmTree {
    /// Leaf reached by `x` (already validated).
    pub fn leaf(&self, x: &[f64]) -> &Leaf {
        let dims = &self.dims;
        let local = |d: usize| x[dims[d]];
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(leaf) => return leaf,
                Node::Internal { splits, children, .. } => {
                    node = child_for(children, routing_key(splits, local));
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_input(x, self.n_features)?;
        Ok(leaf_prediction(self.leaf(x)))
    }

    /// Raw real-valued leaf output (regression mean or boosting score).
    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.n_features)?;
        match &self.leaf(x).value {
            LeafValue::Value(v) => Ok(*v),
            LeafValue::Histogram(_) => Err(SlmError::TaskMismatch {
                model: "classification".into(),
                data: "regression".into(),
            }),
        }
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.root, self.dims.len())
    }

    pub fn stats(&self) -> TreeStats {
        let mut s = TreeStats {
            depth: 0,
            nodes_per_level: Vec::new(),
            partitions: 0,
            leaves: 0,
        };
        fn walk(n: &Node, level: usize, s: &mut TreeStats) {
            if s.nodes_per_level.len() <= level {
                s.nodes_per_level.push(0);
            }
            s.nodes_per_level[level] += 1;
            s.depth = s.depth.max(level);
            match n {
                Node::Leaf(_) => s.leaves += 1,
                Node::Internal { splits, children, .. } => {
                    s.partitions += splits.len();
                    for c in children {
                        walk(&c.node, level + 1, s);
                    }
                }
            }
        }
        walk(&self.root, 0, &mut s);
        s
    }
}

pub(crate) fn leaf_prediction(leaf: &Leaf) -> Prediction {
    match &leaf.value {
        LeafValue::Histogram(h) => {
            let total: usize = h.iter().sum();
            let probabilities: Vec<f64> = if total == 0 {
                vec![1.0 / h.len() as f64; h.len()]
            } else {
                h.iter().map(|&c| c as f64 / total as f64).collect()
            };
            Prediction::Class {
                class: argmax(&probabilities),
                probabilities,
            }
        }
        LeafValue::Value(v) => Prediction::Value(*v),
    }
}

/// Parameters of a tree: every hyperplane carries `d0` weights and one threshold.
pub fn param_count(root: &Node, d0: usize) -> usize {
    match root {
        Node::Leaf(_) => 0,
        Node::Internal { splits, children, .. } => {
            splits.len() * (d0 + 1) + children.iter().map(|c| param_count(&c.node, d0)).sum::<usize>()
        }
    }
}
