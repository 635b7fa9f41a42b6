use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Target};
use crate::error::{Result, SlmError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Keep per-class proportions in both halves. Ignored for regression.
    pub stratify: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.6,
            seed: 0,
            stratify: true,
        }
    }
}

fn train_count(n: usize, fraction: f64) -> usize {
    // 1e-9 keeps products such as 10 * 0.6 from landing just under an integer.
    (n as f64 * fraction + 1e-9).floor() as usize
}

/// Returns sorted `(train, test)` row indices.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(SlmError::InvalidParameter(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let n = ds.n_samples();
    let n_train = train_count(n, spec.train_fraction);
    if n_train == 0 || n_train >= n {
        return Err(SlmError::DegenerateSplit {
            train: n_train,
            test: n - n_train.min(n),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut train = match ds.target() {
        Target::Labels { labels, n_classes } if spec.stratify => {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); *n_classes];
            for (i, &c) in labels.iter().enumerate() {
                by_class[c].push(i);
            }
            // Largest-remainder apportionment of n_train across classes.
            let exact: Vec<f64> = by_class
                .iter()
                .map(|m| m.len() as f64 * n_train as f64 / n as f64)
                .collect();
            let mut quota: Vec<usize> = exact.iter().map(|q| (q + 1e-9).floor() as usize).collect();
            let mut remaining = n_train - quota.iter().sum::<usize>();
            let mut order: Vec<usize> = (0..*n_classes).collect();
            order.sort_by(|&a, &b| {
                let fa = exact[a] - quota[a] as f64;
                let fb = exact[b] - quota[b] as f64;
                fb.total_cmp(&fa).then(a.cmp(&b))
            });
            for &c in order.iter().cycle() {
                if remaining == 0 {
                    break;
                }
                if quota[c] < by_class[c].len() {
                    quota[c] += 1;
                    remaining -= 1;
                }
            }
            let mut train = Vec::with_capacity(n_train);
            for (members, &k) in by_class.iter_mut().zip(&quota) {
                members.shuffle(&mut rng);
                train.extend_from_slice(&members[..k]);
            }
            train
        }
        _ => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all.truncate(n_train);
            all
        }
    };
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

pub fn train_test_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}
