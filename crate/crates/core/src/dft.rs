//! Discriminant feature test.
//!
//! A 1D projection of the node samples is scored by the lowest weighted
//! child loss over `bins - 1` uniformly spaced thresholds between the
//! projected minimum and maximum. Samples with value `>= t` go right.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlmError};

/// Split criterion family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// Weighted class entropy (natural log).
    Entropy,
    /// Weighted mean squared deviation from the side mean.
    Mse,
    /// Negated second-order structure score `G^2 / (H + lambda)` summed over sides.
    XgbGain { lambda: f64 },
}

/// Node-local targets in the form a loss needs.
#[derive(Clone, Copy, Debug)]
pub enum NodeTargets<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
    Gradients { grad: &'a [f64], hess: &'a [f64], lambda: f64 },
}

impl NodeTargets<'_> {
    pub fn len(&self) -> usize {
        match self {
            NodeTargets::Classes { labels, .. } => labels.len(),
            NodeTargets::Values(v) => v.len(),
            NodeTargets::Gradients { grad, .. } => grad.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Projected values `a^T x` of the node samples together with their range.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedColumn {
    values: Vec<f64>,
    min: f64,
    max: f64,
}

impl ProjectedColumn {
    pub fn new(values: Vec<f64>) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self { values, min, max }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.max > self.min)
    }
}

/// Outcome of splitting a projected column at one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub threshold: f64,
    /// `+inf` marks an infeasible split.
    pub loss: f64,
    pub n_left: usize,
    pub n_right: usize,
}

impl SplitEvaluation {
    pub fn infeasible(threshold: f64, n: usize) -> Self {
        Self {
            threshold,
            loss: f64::INFINITY,
            n_left: 0,
            n_right: n,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.loss.is_finite()
    }
}

/// Projects row-major `rows` (`n_cols` wide) onto `direction`.
pub fn project(direction: &[f64], rows: &[f64], n_cols: usize) -> Result<ProjectedColumn> {
    if direction.len() != n_cols || (n_cols > 0 && rows.len() % n_cols != 0) {
        return Err(SlmError::DimensionMismatch {
            expected: n_cols,
            found: direction.len(),
        });
    }
    let active: Vec<(usize, f64)> = direction
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, a)| a != 0.0)
        .collect();
    let values = rows
        .chunks_exact(n_cols.max(1))
        .map(|x| active.iter().fold(0.0, |acc, &(d, a)| acc + a * x[d]))
        .collect();
    Ok(ProjectedColumn::new(values))
}

/// Bin boundaries `min + b (max - min) / bins` for `b = 1..bins`.
pub fn candidate_thresholds(col: &ProjectedColumn, bins: usize) -> Vec<f64> {
    if col.is_degenerate() || bins < 2 {
        return Vec::new();
    }
    let width = (col.max - col.min) / bins as f64;
    (1..bins).map(|b| col.min + b as f64 * width).collect()
}

/// Entropy (nats) of class counts totalling `n`.
pub(crate) fn entropy_of_counts(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

pub fn entropy(labels: &[usize], n_classes: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(SlmError::EmptyInput("entropy of an empty label set".into()));
    }
    let mut counts = vec![0; n_classes];
    for &c in labels {
        if c >= n_classes {
            return Err(SlmError::InvalidParameter(format!("label {c} outside [0, {n_classes})")));
        }
        counts[c] += 1;
    }
    Ok(entropy_of_counts(&counts, labels.len()))
}

/// Sum of squared deviations from the mean. Values are shifted by the first
/// element before accumulating, so constant input gives exactly zero.
fn sum_squared_deviation(values: impl Iterator<Item = f64> + Clone) -> (usize, f64) {
    let mut it = values.clone();
    let Some(origin) = it.next() else {
        return (0, 0.0);
    };
    let (n, s) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + (v - origin)));
    let shift = s / n as f64;
    let sse = values.map(|v| (v - origin) - shift).map(|d| d * d).sum();
    (n, sse)
}

fn structure_term(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

/// Node impurity used by the minimum-loss stopping rule: entropy, MSE of
/// targets, or MSE of gradients.
pub fn node_impurity(targets: &NodeTargets<'_>) -> f64 {
    match *targets {
        NodeTargets::Classes { labels, n_classes } => {
            let mut counts = vec![0; n_classes];
            for &c in labels {
                counts[c] += 1;
            }
            entropy_of_counts(&counts, labels.len())
        }
        NodeTargets::Values(v) => {
            let (n, sse) = sum_squared_deviation(v.iter().copied());
            if n == 0 { 0.0 } else { sse / n as f64 }
        }
        NodeTargets::Gradients { grad, .. } => {
            let (n, sse) = sum_squared_deviation(grad.iter().copied());
            if n == 0 { 0.0 } else { sse / n as f64 }
        }
    }
}

/// Loss of the unsplit node in the same units as a split loss, so that a
/// split improves the node iff its loss is lower.
pub fn node_loss(targets: &NodeTargets<'_>) -> f64 {
    match *targets {
        NodeTargets::Gradients { grad, hess, lambda } => {
            let g: f64 = grad.iter().sum();
            let h: f64 = hess.iter().sum();
            -structure_term(g, h, lambda)
        }
        _ => node_impurity(targets),
    }
}

/// Loss of splitting `col` at `threshold`, computed from scratch.
pub fn split_loss(col: &ProjectedColumn, targets: &NodeTargets<'_>, threshold: f64) -> Result<SplitEvaluation> {
    let n = col.len();
    if targets.len() != n {
        return Err(SlmError::DimensionMismatch {
            expected: n,
            found: targets.len(),
        });
    }
    if !threshold.is_finite() {
        return Err(SlmError::InvalidParameter(format!("threshold {threshold} is not finite")));
    }
    let goes_left: Vec<bool> = col.values.iter().map(|&v| v < threshold).collect();
    let n_left = goes_left.iter().filter(|&&l| l).count();
    let n_right = n - n_left;
    if n_left == 0 || n_right == 0 {
        return Ok(SplitEvaluation::infeasible(threshold, n));
    }
    let side = |left: bool| goes_left.iter().enumerate().filter(move |&(_, &g)| g == left).map(|(i, _)| i);
    let loss = match *targets {
        NodeTargets::Classes { labels, n_classes } => {
            let mut lc = vec![0; n_classes];
            let mut rc = vec![0; n_classes];
            for i in 0..n {
                if goes_left[i] {
                    lc[labels[i]] += 1;
                } else {
                    rc[labels[i]] += 1;
                }
            }
            (n_left as f64 * entropy_of_counts(&lc, n_left) + n_right as f64 * entropy_of_counts(&rc, n_right))
                / n as f64
        }
        NodeTargets::Values(v) => {
            let (_, l) = sum_squared_deviation(side(true).map(|i| v[i]));
            let (_, r) = sum_squared_deviation(side(false).map(|i| v[i]));
            (l + r) / n as f64
        }
        NodeTargets::Gradients { grad, hess, lambda } => {
            let sum = |left: bool, x: &[f64]| side(left).map(|i| x[i]).sum::<f64>();
            -(structure_term(sum(true, grad), sum(true, hess), lambda)
                + structure_term(sum(false, grad), sum(false, hess), lambda))
        }
    };
    Ok(SplitEvaluation {
        threshold,
        loss,
        n_left,
        n_right,
    })
}

/// Per-bin sufficient statistics. A sample lands in bin `k` when exactly
/// `k` thresholds are `<=` its value, so threshold `b` sends bins `0..b` left.
enum BinStats {
    Classes { counts: Vec<usize>, n_classes: usize },
    Moments { sum: Vec<f64>, sum_sq: Vec<f64> },
    Gradients { g: Vec<f64>, h: Vec<f64>, lambda: f64 },
}

/// Best split of `col` over the binned thresholds. Ties keep the smallest
/// threshold; a constant column or a threshold set with no feasible split
/// yields an infeasible evaluation.
pub fn dft_cost(col: &ProjectedColumn, targets: &NodeTargets<'_>, bins: usize) -> Result<SplitEvaluation> {
    let n = col.len();
    if n < 2 {
        return Err(SlmError::TooFewSamples(n));
    }
    if targets.len() != n {
        return Err(SlmError::DimensionMismatch {
            expected: n,
            found: targets.len(),
        });
    }
    let thresholds = candidate_thresholds(col, bins);
    if thresholds.is_empty() {
        return Ok(SplitEvaluation::infeasible(col.min, n));
    }
    let n_bins = thresholds.len() + 1;
    let bin_of: Vec<usize> = col
        .values
        .iter()
        .map(|&v| thresholds.partition_point(|&t| t <= v))
        .collect();
    let mut bin_count = vec![0usize; n_bins];
    for &k in &bin_of {
        bin_count[k] += 1;
    }

    let mut stats = match *targets {
        NodeTargets::Classes { labels, n_classes } => {
            let mut counts = vec![0; n_bins * n_classes];
            for (&k, &c) in bin_of.iter().zip(labels) {
                counts[k * n_classes + c] += 1;
            }
            BinStats::Classes { counts, n_classes }
        }
        NodeTargets::Values(v) => {
            let origin = v[0];
            let mut sum = vec![0.0; n_bins];
            let mut sum_sq = vec![0.0; n_bins];
            for (&k, &y) in bin_of.iter().zip(v) {
                let d = y - origin;
                sum[k] += d;
                sum_sq[k] += d * d;
            }
            BinStats::Moments { sum, sum_sq }
        }
        NodeTargets::Gradients { grad, hess, lambda } => {
            let mut g = vec![0.0; n_bins];
            let mut h = vec![0.0; n_bins];
            for ((&k, &gi), &hi) in bin_of.iter().zip(grad).zip(hess) {
                g[k] += gi;
                h[k] += hi;
            }
            BinStats::Gradients { g, h, lambda }
        }
    };

    // Totals for the right side start as the whole node.
    let mut best = SplitEvaluation::infeasible(col.min, n);
    let mut n_left = 0usize;
    match &mut stats {
        BinStats::Classes { counts, n_classes } => {
            let k = *n_classes;
            let mut left = vec![0usize; k];
            let mut right = vec![0usize; k];
            for b in 0..n_bins {
                for c in 0..k {
                    right[c] += counts[b * k + c];
                }
            }
            for (b, &t) in thresholds.iter().enumerate() {
                for c in 0..k {
                    let m = counts[b * k + c];
                    left[c] += m;
                    right[c] -= m;
                }
                n_left += bin_count[b];
                let n_right = n - n_left;
                if n_left == 0 || n_right == 0 {
                    continue;
                }
                let loss = (n_left as f64 * entropy_of_counts(&left, n_left)
                    + n_right as f64 * entropy_of_counts(&right, n_right))
                    / n as f64;
                if loss < best.loss {
                    best = SplitEvaluation { threshold: t, loss, n_left, n_right };
                }
            }
        }
        BinStats::Moments { sum, sum_sq } => {
            let total_s: f64 = sum.iter().sum();
            let total_q: f64 = sum_sq.iter().sum();
            let (mut ls, mut lq) = (0.0, 0.0);
            for (b, &t) in thresholds.iter().enumerate() {
                ls += sum[b];
                lq += sum_sq[b];
                n_left += bin_count[b];
                let n_right = n - n_left;
                if n_left == 0 || n_right == 0 {
                    continue;
                }
                let (rs, rq) = (total_s - ls, total_q - lq);
                let sse_l = (lq - ls * ls / n_left as f64).max(0.0);
                let sse_r = (rq - rs * rs / n_right as f64).max(0.0);
                let loss = (sse_l + sse_r) / n as f64;
                if loss < best.loss {
                    best = SplitEvaluation { threshold: t, loss, n_left, n_right };
                }
            }
        }
        BinStats::Gradients { g, h, lambda } => {
            let total_g: f64 = g.iter().sum();
            let total_h: f64 = h.iter().sum();
            let (mut lg, mut lh) = (0.0, 0.0);
            for (b, &t) in thresholds.iter().enumerate() {
                lg += g[b];
                lh += h[b];
                n_left += bin_count[b];
                let n_right = n - n_left;
                if n_left == 0 || n_right == 0 {
                    continue;
                }
                let loss = -(structure_term(lg, lh, *lambda) + structure_term(total_g - lg, total_h - lh, *lambda));
                if loss < best.loss {
                    best = SplitEvaluation { threshold: t, loss, n_left, n_right };
                }
            }
        }
    }
    Ok(best)
}

/// A feature dimension with its axis-aligned DFT result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankedFeature {
    pub dim: usize,
    pub eval: SplitEvaluation,
}

/// Scores every column of the row-major `rows` matrix on its basis
/// projection and returns the columns ordered by ascending cost (stable).
pub fn rank_features(rows: &[f64], n_cols: usize, targets: &NodeTargets<'_>, bins: usize) -> Result<Vec<RankedFeature>> {
    if n_cols == 0 {
        return Err(SlmError::InvalidParameter("no features to rank".into()));
    }
    let mut ranked = (0..n_cols)
        .map(|d| {
            let col = ProjectedColumn::new(rows.chunks_exact(n_cols).map(|x| x[d]).collect());
            dft_cost(&col, targets, bins).map(|eval| RankedFeature { dim: d, eval })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.eval.loss.total_cmp(&b.eval.loss));
    Ok(ranked)
}
