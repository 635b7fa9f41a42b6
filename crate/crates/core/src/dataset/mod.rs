//! Tabular datasets: a dense row-major feature matrix paired with class
//! labels or regression targets.

mod csv_io;
mod split;
pub mod synth;

pub use csv_io::{load_csv, load_features, write_csv, TargetColumn};
pub use split::{split_indices, train_test_split, SplitSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlmError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Classification => f.write_str("classification"),
            Task::Regression => f.write_str("regression"),
        }
    }
}

impl std::str::FromStr for Task {
    type Err = SlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" | "class" => Ok(Task::Classification),
            "regression" | "reg" => Ok(Task::Regression),
            other => Err(SlmError::InvalidParameter(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Integer class ids in `[0, n_classes)`. `n_classes` is fixed for the
    /// dataset, never re-derived from a subset.
    Labels { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Labels { labels, .. } => labels.len(),
            Target::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Target::Labels { .. } => Task::Classification,
            Target::Values(_) => Task::Regression,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    target: Target,
    feature_names: Vec<Option<String>>,
}

impl Dataset {
    /// Builds a dataset from a row-major feature buffer, validating shape,
    /// finiteness and label range.
    pub fn new(features: Vec<f64>, n_features: usize, target: Target) -> Result<Self> {
        if n_features == 0 {
            return Err(SlmError::InvalidDataset("at least one feature is required".into()));
        }
        if features.len() % n_features != 0 {
            return Err(SlmError::InvalidDataset(format!(
                "feature buffer of length {} is not a multiple of {n_features}",
                features.len()
            )));
        }
        let n_samples = features.len() / n_features;
        if n_samples == 0 {
            return Err(SlmError::InvalidDataset("at least one sample is required".into()));
        }
        if target.len() != n_samples {
            return Err(SlmError::InvalidDataset(format!(
                "{n_samples} feature rows but {} targets",
                target.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(SlmError::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        match &target {
            Target::Labels { labels, n_classes } => {
                if *n_classes < 2 {
                    return Err(SlmError::InvalidDataset(format!(
                        "classification needs at least 2 classes, got {n_classes}"
                    )));
                }
                if let Some(bad) = labels.iter().find(|&&c| c >= *n_classes) {
                    return Err(SlmError::InvalidDataset(format!(
                        "label {bad} outside [0, {n_classes})"
                    )));
                }
            }
            Target::Values(values) => {
                if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
                    return Err(SlmError::InvalidDataset(format!("non-finite target at row {pos}")));
                }
            }
        }
        Ok(Self {
            features,
            n_features,
            target,
            feature_names: vec![None; n_features],
        })
    }

    pub fn classification(features: Vec<f64>, n_features: usize, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        Self::new(features, n_features, Target::Labels { labels, n_classes })
    }

    pub fn regression(features: Vec<f64>, n_features: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(features, n_features, Target::Values(values))
    }

    pub fn with_feature_names(mut self, names: Vec<Option<String>>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(SlmError::InvalidDataset(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features
            )));
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn task(&self) -> Task {
        self.target.task()
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    /// Number of classes, or `None` for regression data.
    pub fn n_classes(&self) -> Option<usize> {
        match &self.target {
            Target::Labels { n_classes, .. } => Some(*n_classes),
            Target::Values(_) => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.target {
            Target::Labels { labels, .. } => Some(labels),
            Target::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.target {
            Target::Labels { .. } => None,
            Target::Values(v) => Some(v),
        }
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_names(&self) -> &[Option<String>] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    #[inline]
    pub fn get(&self, i: usize, d: usize) -> f64 {
        self.features[i * self.n_features + d]
    }

    /// Per-class sample counts; empty for regression.
    pub fn class_counts(&self) -> Vec<usize> {
        match &self.target {
            Target::Labels { labels, n_classes } => {
                let mut counts = vec![0; *n_classes];
                for &c in labels {
                    counts[c] += 1;
                }
                counts
            }
            Target::Values(_) => Vec::new(),
        }
    }

    /// Rows at `indices`, in that order. Class count and names carry over.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        let target = match &self.target {
            Target::Labels { labels, n_classes } => Target::Labels {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
            Target::Values(v) => Target::Values(indices.iter().map(|&i| v[i]).collect()),
        };
        let mut out = Self::new(features, self.n_features, target)?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }
}
