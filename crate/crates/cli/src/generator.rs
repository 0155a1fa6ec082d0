//! Synthetic spherical Gaussian mixtures for tests and experiments.
//!
//! Means sit on the integer lattice scaled by `separation·σ`, so the
//! nearest pair of means is exactly `separation·σ` apart. Cluster counts
//! follow the mixing weights by largest remainder. If the sample violates
//! the well-definedness threshold (every squared pairwise distance at least
//! `4d/π`), all coordinates are scaled up uniformly; samples with duplicate
//! points are redrawn.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use cmle_core::model::{validate_instance, well_defined_threshold};
use cmle_core::{rng_from_seed, PointSet, Rng};

use crate::CliError;

pub const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    /// Distance between neighbouring means in units of `sigma`.
    pub separation: f64,
    pub sigma: f64,
    /// Mixing weights; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
}

/// Ground truth written next to a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
    pub weights: Vec<f64>,
    /// Factor applied to every coordinate (1 when no rescaling was needed).
    pub scale: f64,
    /// Means after rescaling.
    pub means: Vec<Vec<f64>>,
    /// 1-based component of every point.
    pub labels: Vec<usize>,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub points: PointSet,
    pub truth: Truth,
}

impl GenConfig {
    fn validate(&self) -> Result<Vec<f64>, CliError> {
        if self.n == 0 || self.dim == 0 || self.k == 0 {
            return Err(CliError::input("n, d and k must be positive"));
        }
        if self.k > self.n {
            return Err(CliError::input("k cannot exceed n"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(CliError::input("sigma must be positive and finite"));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(CliError::input("separation must be positive and finite"));
        }
        let w = match &self.weights {
            None => vec![1.0 / self.k as f64; self.k],
            Some(w) => {
                if w.len() != self.k || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(CliError::input("weights must be k positive numbers"));
                }
                let total: f64 = w.iter().sum();
                w.iter().map(|v| v / total).collect()
            }
        };
        Ok(w)
    }
}

/// Largest-remainder apportionment of `n` points; ties go to the lower index.
pub fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

/// First `k` points of the integer lattice `{0..side}^d` in lexicographic order.
fn lattice(k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut side = 1usize;
    while side.checked_pow(dim as u32).is_some_and(|c| c < k) {
        side += 1;
    }
    let mut out = Vec::with_capacity(k);
    let mut idx = vec![0usize; dim];
    while out.len() < k {
        out.push(idx.iter().map(|&v| v as f64).collect());
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < side {
                break;
            }
            *slot = 0;
        }
    }
    out
}

fn draw(cfg: &GenConfig, counts: &[usize], means: &[Vec<f64>], rng: &mut Rng) -> (Vec<Vec<f64>>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut rows = Vec::with_capacity(cfg.n);
    for (c, (&count, mu)) in counts.iter().zip(means).enumerate() {
        for _ in 0..count {
            let p: Vec<f64> = mu
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + cfg.sigma * z
                })
                .collect();
            rows.push((p, c + 1));
        }
    }
    rows.shuffle(rng);
    rows.into_iter().unzip()
}

/// Draws an instance; fails with a budget error when every attempt produced
/// duplicate points.
pub fn generate(cfg: &GenConfig) -> Result<Generated, CliError> {
    let weights = cfg.validate()?;
    let counts = apportion(cfg.n, &weights);
    let step = cfg.separation * cfg.sigma;
    let means: Vec<Vec<f64>> = lattice(cfg.k, cfg.dim)
        .into_iter()
        .map(|p| p.into_iter().map(|v| v * step).collect())
        .collect();
    let threshold = well_defined_threshold(cfg.dim);
    let mut rng = rng_from_seed(cfg.seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let (rows, labels) = draw(cfg, &counts, &means, &mut rng);
        let x = PointSet::new(rows.clone())?;
        let min = x.min_sq_dist().unwrap_or(f64::INFINITY);
        if !(min > 0.0) {
            continue;
        }
        let mut scale = 1.0;
        let mut points = x;
        // Nudge the factor up until the scaled sample clears the threshold
        // despite rounding.
        while !validate_instance(&points).well_defined {
            scale = if scale == 1.0 {
                (threshold / min).sqrt()
            } else {
                scale * (1.0 + 1e-12)
            };
            points = PointSet::new(rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect())?;
        }
        let truth = Truth {
            n: cfg.n,
            dim: cfg.dim,
            k: cfg.k,
            separation: cfg.separation,
            sigma: cfg.sigma,
            seed: cfg.seed,
            weights: weights.clone(),
            scale,
            means: means.iter().map(|m| m.iter().map(|v| v * scale).collect()).collect(),
            labels,
            attempts: attempt,
        };
        return Ok(Generated { points, truth });
    }
    Err(CliError::budget(format!(
        "no sample without duplicate points after {MAX_ATTEMPTS} attempts"
    )))
}
