//! Candidate generation for oblique projections.
//!
//! Node dimensions are first ranked by their axis-aligned DFT cost. A
//! candidate direction is a sparse integer vector over that ranking: up to
//! `R` ranked dimensions are active, rank `d` being picked with probability
//! proportional to `exp(-beta d)`, and its coefficient is drawn uniformly
//! from `-floor(A_d)..=floor(A_d)` with `A_d = A_int exp(-alpha d)`. When
//! the full coefficient lattice is small it is enumerated instead.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dft::{dft_cost, project, NodeTargets, SplitEvaluation};
use crate::error::{Result, SlmError};

/// One generation round; overrides the base decay rates and active count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub alpha: f64,
    pub beta: f64,
    pub active: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionParams {
    /// Retained subspace dimension; `None` keeps every input dimension.
    pub d0: Option<usize>,
    /// Candidates drawn per node in sampled mode.
    pub n_candidates: usize,
    /// Active (non-zero) coefficients per candidate, clamped to the subspace dimension.
    pub active: usize,
    /// Envelope decay rate.
    pub alpha: f64,
    /// Envelope scale.
    pub envelope_scale: f64,
    /// Selection-probability decay rate; `0` gives uniform selection.
    pub beta: f64,
    /// Maximum hyperplanes per node.
    pub q_max: usize,
    /// Largest admissible absolute cosine between hyperplanes of one node.
    pub theta_minimax: f64,
    /// Extra generation rounds. Empty means one round with the base rates.
    pub rounds: Vec<Round>,
    /// Enumerate the lattice when it has at most this many directions.
    pub exhaustive_limit: usize,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            d0: None,
            n_candidates: 100,
            active: 3,
            alpha: 0.5,
            envelope_scale: 10.0,
            beta: 0.5,
            q_max: 2,
            theta_minimax: 0.7,
            rounds: Vec::new(),
            exhaustive_limit: 512,
        }
    }
}

impl ProjectionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SlmError::InvalidParameter(m));
        if self.d0 == Some(0) {
            return bad("d0 must be at least 1".into());
        }
        if self.n_candidates == 0 {
            return bad("p (candidate count) must be at least 1".into());
        }
        if self.q_max == 0 {
            return bad("q_max must be at least 1".into());
        }
        if !(self.theta_minimax > 0.0 && self.theta_minimax <= 1.0) {
            return bad(format!("theta_minimax {} outside (0, 1]", self.theta_minimax));
        }
        if !(self.envelope_scale > 0.0 && self.envelope_scale.is_finite()) {
            return bad(format!("envelope scale {} must be positive", self.envelope_scale));
        }
        for r in self.effective_rounds() {
            if r.active == 0 {
                return bad("active coefficient count R must be at least 1".into());
            }
            if !(r.alpha > 0.0 && r.alpha.is_finite()) {
                return bad(format!("alpha {} must be positive", r.alpha));
            }
            if !(r.beta >= 0.0 && r.beta.is_finite()) {
                return bad(format!("beta {} must be non-negative", r.beta));
            }
        }
        Ok(())
    }

    pub fn effective_rounds(&self) -> Vec<Round> {
        if self.rounds.is_empty() {
            vec![Round {
                alpha: self.alpha,
                beta: self.beta,
                active: self.active,
            }]
        } else {
            self.rounds.clone()
        }
    }
}

/// Envelope `A_d = scale * exp(-alpha d)` for 1-based rank `d`.
pub fn envelope(scale: f64, alpha: f64, rank: usize) -> f64 {
    scale * (-alpha * rank as f64).exp()
}

/// Largest admissible |coefficient| per rank, for ranks `1..=d0`.
pub fn coefficient_bounds(scale: f64, alpha: f64, d0: usize) -> Vec<i64> {
    (1..=d0).map(|d| envelope(scale, alpha, d).floor() as i64).collect()
}

/// `P_d` proportional to `exp(-beta d)` over `d = 1..=d0`, normalised to sum to 1.
pub fn selection_probabilities(beta: f64, d0: usize) -> Vec<f64> {
    // Weights relative to rank 1 keep large beta from underflowing the head.
    let w: Vec<f64> = (1..=d0).map(|d| (-beta * (d as f64 - 1.0)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Lower and upper bounds on the per-round search space size,
/// `prod (2 A_d + 1)` over the last and first `R` ranks respectively.
pub fn search_space_bounds(scale: f64, alpha: f64, active: usize, d0: usize) -> (f64, f64) {
    let r = active.min(d0);
    let term = |d: usize| 2.0 * envelope(scale, alpha, d) + 1.0;
    let upper = (1..=r).map(term).product();
    let lower = (d0 + 1 - r..=d0).map(term).product();
    (lower, upper)
}

/// Number of non-zero integer vectors with at most `active` non-zero
/// entries inside `bounds`, halved for the sign symmetry.
pub fn lattice_size(bounds: &[i64], active: usize) -> u128 {
    // by_support[k] = vectors with exactly k non-zero entries.
    let mut by_support = vec![0u128; active + 1];
    by_support[0] = 1;
    for &b in bounds {
        let choices = 2 * b.max(0) as u128;
        for k in (1..=active).rev() {
            by_support[k] = by_support[k].saturating_add(by_support[k - 1].saturating_mul(choices));
        }
    }
    by_support[1..].iter().fold(0u128, |a, &x| a.saturating_add(x)) / 2
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Divides out the common factor and flips the sign so the first non-zero
/// entry is positive. Returns `None` for the zero vector.
pub fn canonicalize(coeffs: &[i64]) -> Option<Vec<i64>> {
    let first = *coeffs.iter().find(|&&c| c != 0)?;
    let g = coeffs.iter().fold(0, |g, &c| gcd(g, c));
    let s = if first < 0 { -g } else { g };
    Some(coeffs.iter().map(|&c| c / s).collect())
}

/// Ordering of the node's subspace dimensions used to build candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedBasis {
    /// `order[r]` is the local dimension at rank `r + 1`.
    pub order: Vec<usize>,
}

impl RankedBasis {
    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn scatter(&self, ranked: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.order.len()];
        for (r, &c) in ranked.iter().enumerate() {
            out[self.order[r]] = c;
        }
        out
    }
}

const MAX_ZERO_REDRAWS: usize = 100;

fn enumerate_lattice(bounds: &[i64], active: usize, out: &mut Vec<Vec<i64>>) {
    let live: Vec<usize> = (0..bounds.len()).filter(|&r| bounds[r] > 0).collect();
    let mut current = vec![0i64; bounds.len()];
    fn walk(live: &[usize], bounds: &[i64], active: usize, pos: usize, support: usize, current: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if pos == live.len() {
            if support > 0 {
                out.push(current.clone());
            }
            return;
        }
        let r = live[pos];
        let b = bounds[r];
        for c in -b..=b {
            if c != 0 && support == active {
                continue;
            }
            current[r] = c;
            walk(live, bounds, active, pos + 1, support + usize::from(c != 0), current, out);
        }
        current[r] = 0;
    }
    walk(&live, bounds, active, 0, 0, &mut current, out);
}

/// Integer candidate directions (in local dimension order, canonical and
/// de-duplicated, in generation order).
pub fn generate_directions<R: Rng + ?Sized>(basis: &RankedBasis, params: &ProjectionParams, rng: &mut R) -> Result<Vec<Vec<i64>>> {
    let d0 = basis.len();
    if d0 == 0 {
        return Err(SlmError::InvalidParameter("empty subspace".into()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut any_live = false;
    for round in params.effective_rounds() {
        let bounds = coefficient_bounds(params.envelope_scale, round.alpha, d0);
        if bounds.iter().all(|&b| b < 1) {
            continue;
        }
        any_live = true;
        let active = round.active.min(d0);
        let mut raw = Vec::new();
        if lattice_size(&bounds, active) <= params.exhaustive_limit as u128 {
            enumerate_lattice(&bounds, active, &mut raw);
        } else {
            let probs = selection_probabilities(round.beta, d0);
            for _ in 0..params.n_candidates {
                let mut drawn = None;
                for _ in 0..MAX_ZERO_REDRAWS {
                    let chosen = index::sample_weighted(rng, d0, |r| probs[r], active)
                        .map_err(|e| SlmError::InvalidParameter(format!("active-set sampling failed: {e}")))?;
                    let mut ranked = vec![0i64; d0];
                    for r in chosen.iter() {
                        ranked[r] = rng.random_range(-bounds[r]..=bounds[r]);
                    }
                    if ranked.iter().any(|&c| c != 0) {
                        drawn = Some(ranked);
                        break;
                    }
                }
                raw.push(drawn.ok_or(SlmError::CollapsedEnvelope)?);
            }
        }
        for ranked in raw {
            if let Some(c) = canonicalize(&basis.scatter(&ranked)) {
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
        }
    }
    if !any_live {
        return Err(SlmError::CollapsedEnvelope);
    }
    Ok(out)
}

/// A scored candidate direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionVector {
    pub coeffs: Vec<i64>,
    pub unit: Vec<f64>,
    pub eval: SplitEvaluation,
}

pub fn unit_vector(coeffs: &[i64]) -> Vec<f64> {
    let norm = coeffs.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    coeffs.iter().map(|&c| c as f64 / norm).collect()
}

/// Scores `directions` on the node matrix (`rows`, `n_cols` wide). Order
/// is preserved regardless of parallel evaluation.
pub fn score_directions(directions: Vec<Vec<i64>>, rows: &[f64], n_cols: usize, targets: &NodeTargets<'_>, bins: usize) -> Result<Vec<ProjectionVector>> {
    directions
        .into_par_iter()
        .map(|coeffs| {
            let unit = unit_vector(&coeffs);
            let col = project(&unit, rows, n_cols)?;
            let eval = dft_cost(&col, targets, bins)?;
            Ok(ProjectionVector { coeffs, unit, eval })
        })
        .collect()
}

/// Generates and scores the candidate projections of one node.
#[allow(clippy::too_many_arguments)]
pub fn sample_candidates<R: Rng + ?Sized>(
    basis: &RankedBasis,
    rows: &[f64],
    n_cols: usize,
    targets: &NodeTargets<'_>,
    params: &ProjectionParams,
    bins: usize,
    rng: &mut R,
) -> Result<Vec<ProjectionVector>> {
    if targets.len() < 2 {
        return Err(SlmError::TooFewSamples(targets.len()));
    }
    let directions = generate_directions(basis, params, rng)?;
    score_directions(directions, rows, n_cols, targets, bins)
}

/// A hyperplane chosen for a node split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub coeffs: Vec<i64>,
    pub direction: Vec<f64>,
    pub threshold: f64,
    pub loss: f64,
}

impl SplitRecord {
    fn from_candidate(c: &ProjectionVector) -> Self {
        Self {
            coeffs: c.coeffs.clone(),
            direction: c.unit.clone(),
            threshold: c.eval.threshold,
            loss: c.eval.loss,
        }
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn better_by_cost(a: &ProjectionVector, b: &ProjectionVector) -> bool {
    match a.eval.loss.total_cmp(&b.eval.loss) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.coeffs < b.coeffs,
    }
}

/// Greedy minimax selection: the cheapest candidate first, then repeatedly
/// the candidate whose largest |cosine| to everything chosen is smallest,
/// until that value exceeds `theta` or `q_max` records are chosen.
/// Infeasible candidates are ignored.
pub fn select_decorrelated(candidates: &[ProjectionVector], q_max: usize, theta: f64) -> Vec<SplitRecord> {
    let pool: Vec<&ProjectionVector> = candidates.iter().filter(|c| c.eval.is_feasible()).collect();
    let Some(first) = pool.iter().copied().reduce(|best, c| if better_by_cost(c, best) { c } else { best }) else {
        return Vec::new();
    };
    let mut chosen: Vec<&ProjectionVector> = vec![first];
    // Running max |cos| of each pool entry against the chosen set.
    let mut worst: Vec<f64> = pool.iter().map(|c| cosine(&c.unit, &first.unit).abs()).collect();
    let mut taken: Vec<bool> = pool.iter().map(|c| std::ptr::eq(*c, first)).collect();
    while chosen.len() < q_max {
        let mut pick: Option<usize> = None;
        for i in 0..pool.len() {
            if taken[i] {
                continue;
            }
            pick = match pick {
                None => Some(i),
                Some(j) => {
                    let better = match worst[i].total_cmp(&worst[j]) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => better_by_cost(pool[i], pool[j]),
                    };
                    Some(if better { i } else { j })
                }
            };
        }
        let Some(i) = pick else { break };
        if worst[i] > theta {
            break;
        }
        taken[i] = true;
        let new = pool[i];
        chosen.push(new);
        for (k, c) in pool.iter().enumerate() {
            if !taken[k] {
                worst[k] = worst[k].max(cosine(&c.unit, &new.unit).abs());
            }
        }
    }
    chosen.into_iter().map(SplitRecord::from_candidate).collect()
}
