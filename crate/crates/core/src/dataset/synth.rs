//! Synthetic benchmark datasets.
//!
//! The 2D classification sets share one noise model: every sample gets a
//! small coordinate jitter, then a fixed fraction of samples (chosen
//! uniformly without replacement) gets an additional isotropic Gaussian
//! displacement of standard deviation `jitter_std`, which pushes them across
//! the class boundary.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Result, SlmError};

/// Default boundary jitter for circle-and-ring.
pub const CIRCLE_RING_JITTER: f64 = 0.7;
/// Default boundary jitter for two interleaving moons.
pub const TWO_MOONS_JITTER: f64 = 0.7;
/// Default boundary jitter for four (or more) interleaving moons.
pub const MANY_MOONS_JITTER: f64 = 0.3;

const MOON_SPACING: f64 = 1.25;
const MOON_BASE_NOISE: f64 = 0.1;
const CIRCLE_BASE_NOISE: f64 = 0.05;
const INNER_BLOB_STD: f64 = 0.35;
const RING_RADII: (f64, f64) = (1.0, 1.5);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNoise {
    /// Fraction of samples displaced, in `[0, 1]`.
    pub fraction: f64,
    pub jitter_std: f64,
}

impl BoundaryNoise {
    pub fn new(fraction: f64, jitter_std: f64) -> Self {
        Self { fraction, jitter_std }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(SlmError::InvalidParameter(format!(
                "noise fraction {} outside [0, 1]",
                self.fraction
            )));
        }
        if !(self.jitter_std >= 0.0 && self.jitter_std.is_finite()) {
            return Err(SlmError::InvalidParameter(format!(
                "jitter std {} must be finite and non-negative",
                self.jitter_std
            )));
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn displace(points: &mut [f64], noise: &BoundaryNoise, rng: &mut ChaCha8Rng) {
    let n = points.len() / 2;
    let m = (noise.fraction * n as f64).round() as usize;
    let mut chosen = index::sample(rng, n, m.min(n)).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        points[2 * i] += noise.jitter_std * normal(rng);
        points[2 * i + 1] += noise.jitter_std * normal(rng);
    }
}

/// Inner Gaussian blob (class 0) surrounded by an annulus (class 1).
pub fn circle_and_ring(n_per_class: usize, noise: BoundaryNoise, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(SlmError::InvalidParameter("n_per_class must be at least 1".into()));
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        points.push(INNER_BLOB_STD * normal(&mut rng));
        points.push(INNER_BLOB_STD * normal(&mut rng));
        labels.push(0);
    }
    let (r0, r1) = RING_RADII;
    for _ in 0..n_per_class {
        let theta = rng.random_range(0.0..2.0 * PI);
        // Uniform over the annulus area.
        let r = rng.random_range(r0 * r0..r1 * r1).sqrt();
        points.push(r * theta.cos());
        points.push(r * theta.sin());
        labels.push(1);
    }
    for v in points.iter_mut() {
        *v += CIRCLE_BASE_NOISE * normal(&mut rng);
    }
    displace(&mut points, &noise, &mut rng);
    Dataset::classification(points, 2, labels, 2)
}

/// `n_moons` half-circle arcs, alternately opening down and up and shifted
/// along x so that neighbours interleave. Class `k` is moon `k`.
pub fn moons(n_moons: usize, n_per_class: usize, noise: BoundaryNoise, seed: u64) -> Result<Dataset> {
    if n_moons < 2 {
        return Err(SlmError::InvalidParameter(format!("need at least 2 moons, got {n_moons}")));
    }
    if n_per_class == 0 {
        return Err(SlmError::InvalidParameter("n_per_class must be at least 1".into()));
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_moons * n_per_class;
    let mut points = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n_moons {
        let shift = k as f64 * MOON_SPACING;
        for _ in 0..n_per_class {
            let t = rng.random_range(0.0..PI);
            let x = t.cos() + shift;
            let y = if k % 2 == 0 { t.sin() } else { 0.5 - t.sin() };
            points.push(x + MOON_BASE_NOISE * normal(&mut rng));
            points.push(y + MOON_BASE_NOISE * normal(&mut rng));
            labels.push(k);
        }
    }
    displace(&mut points, &noise, &mut rng);
    Dataset::classification(points, 2, labels, n_moons)
}

/// Default boundary jitter for a moons dataset with `n_moons` classes.
pub fn moons_default_jitter(n_moons: usize) -> f64 {
    if n_moons <= 2 {
        TWO_MOONS_JITTER
    } else {
        MANY_MOONS_JITTER
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FriedmanVariant {
    One,
    Two,
    Three,
}

impl FriedmanVariant {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            _ => Err(SlmError::InvalidParameter(format!("Friedman variant must be 1, 2 or 3, got {i}"))),
        }
    }

    /// Noise-free response.
    pub fn response(self, x: &[f64]) -> f64 {
        match self {
            Self::One => {
                10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
            }
            Self::Two => (x[0].powi(2) + (x[1] * x[2] - 1.0 / (x[1] * x[3])).powi(2)).sqrt(),
            Self::Three => ((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]).atan(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FriedmanConfig {
    pub variant: FriedmanVariant,
    pub n_samples: usize,
    /// Only used by variant 1; must exceed 5.
    pub n_features: usize,
    /// Standard deviation of additive Gaussian noise on the target.
    pub noise: f64,
    /// Draw every input from `(0, 1]` instead of the customary ranges for
    /// variants 2 and 3.
    pub unit_inputs: bool,
}

impl FriedmanConfig {
    pub fn new(variant: FriedmanVariant, n_samples: usize) -> Self {
        Self {
            variant,
            n_samples,
            n_features: 10,
            noise: 0.0,
            unit_inputs: false,
        }
    }
}

pub fn friedman(cfg: &FriedmanConfig, seed: u64) -> Result<Dataset> {
    if cfg.n_samples == 0 {
        return Err(SlmError::InvalidParameter("n_samples must be at least 1".into()));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(SlmError::InvalidParameter(format!("noise {} must be non-negative", cfg.noise)));
    }
    let d = match cfg.variant {
        FriedmanVariant::One => {
            if cfg.n_features <= 5 {
                return Err(SlmError::InvalidParameter(format!(
                    "Friedman 1 needs more than 5 features, got {}",
                    cfg.n_features
                )));
            }
            cfg.n_features
        }
        _ => 4,
    };
    let ranges: [(f64, f64); 4] = if cfg.variant == FriedmanVariant::One || cfg.unit_inputs {
        [(0.0, 1.0); 4]
    } else {
        [(0.0, 100.0), (40.0 * PI, 560.0 * PI), (0.0, 1.0), (1.0, 11.0)]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(cfg.n_samples * d);
    let mut values = Vec::with_capacity(cfg.n_samples);
    let mut x = vec![0.0; d];
    for _ in 0..cfg.n_samples {
        for (j, xj) in x.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *xj = if cfg.unit_inputs && cfg.variant != FriedmanVariant::One {
                // (0, 1] avoids the poles of 1/(x1 x3) and x2/x0.
                1.0 - u
            } else {
                let (lo, hi) = ranges[j.min(3)];
                lo + (hi - lo) * u
            };
        }
        let y = cfg.variant.response(&x) + cfg.noise * normal(&mut rng);
        features.extend_from_slice(&x);
        values.push(y);
    }
    Dataset::regression(features, d, values)
}
