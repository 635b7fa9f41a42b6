//! Versioned JSON model documents.
//!
//! Reals are written in their shortest round-trip form and parsed with
//! correct rounding, so a saved model reloads bit for bit. Tree children
//! are keyed by their routing bitstring, where character `j` is `1` when
//! the sample lies on the `>=` side of hyperplane `j`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Task;
use crate::ensemble::{EnsembleKind, EnsembleModel};
use crate::error::{Result, SlmError};
use crate::projection::SplitRecord;
use crate::tree::{Child, Leaf, Node, Prediction, SlmTree};

pub const FORMAT: &str = "slm-model";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum NodeDoc {
    Internal {
        n_samples: usize,
        depth: usize,
        loss: f64,
        splits: Vec<SplitRecord>,
        children: BTreeMap<String, Node>,
    },
    Leaf(Leaf),
}

fn key_to_bits(key: u64, width: usize) -> String {
    (0..width).map(|j| if key >> j & 1 == 1 { '1' } else { '0' }).collect()
}

fn bits_to_key(bits: &str, width: usize) -> Result<u64> {
    if bits.len() != width || width > 64 {
        return Err(SlmError::Format(format!("child key {bits:?} does not have {width} bits")));
    }
    bits.chars().enumerate().try_fold(0u64, |key, (j, c)| match c {
        '0' => Ok(key),
        '1' => Ok(key | 1 << j),
        _ => Err(SlmError::Format(format!("child key {bits:?} is not a bitstring"))),
    })
}

impl From<Node> for NodeDoc {
    fn from(node: Node) -> Self {
        match node {
            Node::Leaf(l) => NodeDoc::Leaf(l),
            Node::Internal { splits, children, n_samples, depth, loss } => {
                let width = splits.len();
                NodeDoc::Internal {
                    n_samples,
                    depth,
                    loss,
                    children: children.into_iter().map(|c| (key_to_bits(c.key, width), c.node)).collect(),
                    splits,
                }
            }
        }
    }
}

impl TryFrom<NodeDoc> for Node {
    type Error = SlmError;

    fn try_from(doc: NodeDoc) -> Result<Self> {
        match doc {
            NodeDoc::Leaf(l) => Ok(Node::Leaf(l)),
            NodeDoc::Internal { n_samples, depth, loss, splits, children } => {
                if splits.is_empty() || children.is_empty() {
                    return Err(SlmError::Format("internal node without splits or children".into()));
                }
                let width = splits.len();
                let mut children = children
                    .into_iter()
                    .map(|(bits, node)| Ok(Child { key: bits_to_key(&bits, width)?, node }))
                    .collect::<Result<Vec<_>>>()?;
                children.sort_by_key(|c| c.key);
                Ok(Node::Internal { splits, children, n_samples, depth, loss })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Tree(SlmTree),
    Ensemble(EnsembleModel),
}

impl Model {
    pub fn task(&self) -> Task {
        match self {
            Model::Tree(t) => t.task,
            Model::Ensemble(e) => e.task,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Tree(t) => t.n_features,
            Model::Ensemble(e) => e.n_features,
        }
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self {
            Model::Tree(t) => t.n_classes,
            Model::Ensemble(e) => e.n_classes,
        }
    }

    pub fn trees(&self) -> &[SlmTree] {
        match self {
            Model::Tree(t) => std::slice::from_ref(t),
            Model::Ensemble(e) => &e.trees,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            Model::Tree(t) => t.predict(x),
            Model::Ensemble(e) => e.predict(x),
        }
    }

    /// Total hyperplane parameters over all trees.
    pub fn param_count(&self) -> usize {
        self.trees().iter().map(SlmTree::param_count).sum()
    }

    pub fn kind_name(&self) -> &'static str {
        match (self, self.task()) {
            (Model::Tree(_), Task::Classification) => "slm-tree",
            (Model::Tree(_), Task::Regression) => "slr-tree",
            (Model::Ensemble(e), Task::Classification) if e.kind == EnsembleKind::Forest => "slm-forest",
            (Model::Ensemble(_), Task::Classification) => "slm-boost",
            (Model::Ensemble(e), Task::Regression) if e.kind == EnsembleKind::Forest => "slr-forest",
            (Model::Ensemble(_), Task::Regression) => "slr-boost",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub task: Task,
    pub n_classes: Option<usize>,
    pub n_features: usize,
    pub n_trees: usize,
    /// Boosting rounds; equals `n_trees` unless multiclass boosting.
    pub n_rounds: Option<usize>,
    pub param_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub summary: ModelSummary,
    /// Effective training configuration, echoed verbatim.
    pub config: serde_json::Value,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, config: serde_json::Value) -> Self {
        let n_rounds = match &model {
            Model::Ensemble(e) if e.kind == EnsembleKind::Boost => {
                let width = match e.n_classes {
                    Some(k) if e.task == Task::Classification && k > 2 => k,
                    _ => 1,
                };
                Some(e.trees.len() / width)
            }
            _ => None,
        };
        let summary = ModelSummary {
            model: model.kind_name().to_string(),
            task: model.task(),
            n_classes: model.n_classes(),
            n_features: model.n_features(),
            n_trees: model.trees().len(),
            n_rounds,
            param_count: model.param_count(),
        };
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            summary,
            config,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != FORMAT {
            return Err(SlmError::Format(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != VERSION {
            return Err(SlmError::Format(format!("unsupported model version {}", file.version)));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => SlmError::InputNotFound(path.to_path_buf()),
            _ => SlmError::Io(e),
        })?;
        Self::from_json(&s)
    }
}
