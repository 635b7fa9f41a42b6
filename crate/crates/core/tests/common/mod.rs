//! Independent reference implementations used by the property tests.
#![allow(dead_code)]

use slm::projection::ProjectionVector;

pub fn thresholds(values: &[f64], bins: usize) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Vec::new();
    }
    let w = (hi - lo) / bins as f64;
    (1..bins).map(|b| lo + b as f64 * w).collect()
}

fn class_entropy(counts: &[usize], n: usize) -> f64 {
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n as f64;
            h -= p * p.ln();
        }
    }
    h
}

pub enum Targets<'a> {
    Classes(&'a [usize], usize),
    Values(&'a [f64]),
    Gradients(&'a [f64], &'a [f64], f64),
}

/// Loss of one partition, recomputed element by element.
pub fn partition_loss(left: &[bool], targets: &Targets<'_>) -> f64 {
    let n = left.len();
    let nl = left.iter().filter(|&&l| l).count();
    let nr = n - nl;
    match targets {
        Targets::Classes(labels, k) => {
            let mut lc = vec![0; *k];
            let mut rc = vec![0; *k];
            for i in 0..n {
                if left[i] {
                    lc[labels[i]] += 1;
                } else {
                    rc[labels[i]] += 1;
                }
            }
            (nl as f64 * class_entropy(&lc, nl) + nr as f64 * class_entropy(&rc, nr)) / n as f64
        }
        Targets::Values(v) => {
            let sse = |side: bool| {
                let xs: Vec<f64> = (0..n).filter(|&i| left[i] == side).map(|i| v[i]).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            };
            (sse(true) + sse(false)) / n as f64
        }
        Targets::Gradients(g, h, lambda) => {
            let score = |side: bool| {
                let gs: f64 = (0..n).filter(|&i| left[i] == side).map(|i| g[i]).sum();
                let hs: f64 = (0..n).filter(|&i| left[i] == side).map(|i| h[i]).sum();
                if hs + lambda > 0.0 {
                    gs * gs / (hs + lambda)
                } else {
                    0.0
                }
            };
            -(score(true) + score(false))
        }
    }
}

pub struct ScanResult {
    pub threshold: f64,
    pub loss: f64,
    pub left: Vec<bool>,
}

/// Tries every candidate threshold; the first strictly best one wins.
pub fn exhaustive_scan(values: &[f64], targets: &Targets<'_>, bins: usize) -> Option<ScanResult> {
    let mut best: Option<ScanResult> = None;
    for t in thresholds(values, bins) {
        let left: Vec<bool> = values.iter().map(|&v| v < t).collect();
        let nl = left.iter().filter(|&&l| l).count();
        if nl == 0 || nl == values.len() {
            continue;
        }
        let loss = partition_loss(&left, targets);
        if best.as_ref().is_none_or(|b| loss < b.loss) {
            best = Some(ScanResult { threshold: t, loss, left });
        }
    }
    best
}

/// Axis-aligned entropy tree over the same binned thresholds. Returns the
/// training-index groups of its leaves.
pub struct AxisTree {
    pub bins: usize,
    pub max_depth: usize,
    pub min_samples: usize,
}

impl AxisTree {
    pub fn leaves(&self, x: &[f64], d: usize, labels: &[usize], k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.grow(x, d, labels, k, (0..labels.len()).collect(), 0, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(&self, x: &[f64], d: usize, labels: &[usize], k: usize, idx: Vec<usize>, depth: usize, out: &mut Vec<Vec<usize>>) {
        let n = idx.len();
        let local: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let mut counts = vec![0; k];
        for &c in &local {
            counts[c] += 1;
        }
        let parent = class_entropy(&counts, n);
        if depth >= self.max_depth || n < self.min_samples || n < 2 {
            out.push(idx);
            return;
        }
        // Equal costs go to the later feature: its indicator vector is the
        // lexicographically smaller one.
        let mut best: Option<ScanResult> = None;
        for f in 0..d {
            let col: Vec<f64> = idx.iter().map(|&i| x[i * d + f]).collect();
            if let Some(r) = exhaustive_scan(&col, &Targets::Classes(&local, k), self.bins) {
                if best.as_ref().is_none_or(|b| r.loss <= b.loss) {
                    best = Some(r);
                }
            }
        }
        match best {
            Some(b) if b.loss < parent - 1e-12 => {
                let l: Vec<usize> = idx.iter().zip(&b.left).filter(|(_, &g)| g).map(|(&i, _)| i).collect();
                let r: Vec<usize> = idx.iter().zip(&b.left).filter(|(_, &g)| !g).map(|(&i, _)| i).collect();
                self.grow(x, d, labels, k, l, depth + 1, out);
                self.grow(x, d, labels, k, r, depth + 1, out);
            }
            _ => out.push(idx),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cost_before(a: &ProjectionVector, b: &ProjectionVector) -> bool {
    a.eval.loss < b.eval.loss || (a.eval.loss == b.eval.loss && a.coeffs < b.coeffs)
}

/// Greedy minimax order recomputed from scratch at every step: the
/// candidate whose largest |cos| against all picks is smallest, ties by
/// cost then coefficients.
pub fn minimax_order(pool: &[ProjectionVector], q_max: usize, theta: f64) -> Vec<usize> {
    let live: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].eval.loss.is_finite()).collect();
    let Some(&first) = live.iter().reduce(|a, b| if cost_before(&pool[*b], &pool[*a]) { b } else { a }) else {
        return Vec::new();
    };
    let mut picked = vec![first];
    while picked.len() < q_max {
        let mut best: Option<(usize, f64)> = None;
        for &i in &live {
            if picked.contains(&i) {
                continue;
            }
            let worst = picked.iter().map(|&j| dot(&pool[i].unit, &pool[j].unit).abs()).fold(0.0, f64::max);
            let better = match best {
                None => true,
                Some((j, w)) => worst < w || (worst == w && cost_before(&pool[i], &pool[j])),
            };
            if better {
                best = Some((i, worst));
            }
        }
        match best {
            Some((i, w)) if w <= theta => picked.push(i),
            _ => break,
        }
    }
    picked
}

/// Central differences of a scalar function: first and second derivative.
pub fn central_differences(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let e1 = 1e-5;
    let e2 = 1e-3;
    let g = (f(x + e1) - f(x - e1)) / (2.0 * e1);
    let h = (f(x + e2) - 2.0 * f(x) + f(x - e2)) / (e2 * e2);
    (g, h)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-3)
}
