//! Superset sampling: uniform multisets, the means of all their fixed-size
//! subsets, and the product of per-cluster candidate sets.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::math;
use crate::model::PointSet;
use crate::{Error, Result, Rng};

/// Default cap on the number of subset means drawn from one multiset.
pub const DEFAULT_MAX_SUBSET_MEANS: u128 = 1_000_000;
/// Default cap on the number of mean tuples in one product.
pub const DEFAULT_MAX_TUPLES: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    /// Assumed lower bound on the fraction of points in every cluster.
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Size `m` of the subsets whose means become candidates.
    pub subset_size: usize,
    /// Size `s` of each sampled multiset.
    pub sample_size: usize,
    pub repeats: usize,
    pub max_subset_means: u128,
    pub max_tuples: u128,
    /// Drop repeated means and tuples (exact coordinate equality).
    pub dedup: bool,
}

impl SamplingConfig {
    /// Configuration with the sizes the sampling guarantee asks for:
    /// `m = ⌈1/(εδ)⌉`, `s = ⌈2/(αεδ)⌉` and enough repeats for a `1−δ`
    /// overall success probability over `k` clusters.
    pub fn new(alpha: f64, epsilon: f64, delta: f64, k: usize) -> Result<Self> {
        let cfg = Self {
            alpha,
            epsilon,
            delta,
            subset_size: default_subset_size(epsilon, delta),
            sample_size: default_sample_size(alpha, epsilon, delta),
            repeats: default_repeats(delta, k),
            max_subset_means: DEFAULT_MAX_SUBSET_MEANS,
            max_tuples: DEFAULT_MAX_TUPLES,
            dedup: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain("alpha must lie in (0, 1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain("epsilon must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain("delta must lie in (0, 1)"));
        }
        if self.subset_size == 0 || self.sample_size == 0 || self.repeats == 0 {
            return Err(Error::domain("subset size, sample size and repeats must be positive"));
        }
        if self.subset_size > self.sample_size {
            return Err(Error::domain("subset size cannot exceed the sample size"));
        }
        Ok(())
    }
}

/// `⌈1/(εδ)⌉`.
pub fn default_subset_size(epsilon: f64, delta: f64) -> usize {
    saturating_ceil(1.0 / (epsilon * delta))
}

/// `⌈2/(αεδ)⌉`.
pub fn default_sample_size(alpha: f64, epsilon: f64, delta: f64) -> usize {
    saturating_ceil(2.0 / (alpha * epsilon * delta))
}

/// Repeats `r` with `(1 − p)^r ≤ δ` where `p = ((1−δ)/5)^k` is the
/// per-round success probability.
pub fn default_repeats(delta: f64, k: usize) -> usize {
    let p = libm::pow((1.0 - delta) / 5.0, k as f64);
    let r = math::ln(1.0 / delta) / -libm::log1p(-p);
    saturating_ceil(r).max(1)
}

fn saturating_ceil(v: f64) -> usize {
    if v.is_finite() && v < usize::MAX as f64 {
        math::ceil(v) as usize
    } else {
        usize::MAX
    }
}

/// `s` independent uniform draws, with replacement, from `pool`.
pub fn sample_multiset(pool: &[usize], s: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if s == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    if pool.is_empty() {
        return Err(Error::domain("cannot sample from an empty set"));
    }
    Ok((0..s).map(|_| pool[rng.random_range(0..pool.len())]).collect())
}

/// Means of all size-`m` position subsets of `sample` (point indices into `x`).
///
/// Each subset is summed in ascending point-index order so equal multisets
/// produce bit-identical means. With `dedup`, repeats are dropped and first
/// occurrences kept in enumeration order.
pub fn subset_means(
    x: &PointSet,
    sample: &[usize],
    m: usize,
    cap: u128,
    dedup: bool,
) -> Result<Vec<Vec<f64>>> {
    if m == 0 || m > sample.len() {
        return Err(Error::domain("subset size must lie in 1..=|S|"));
    }
    let total = math::binomial(sample.len(), m);
    if total > cap {
        return Err(Error::BudgetExceeded {
            stage: "subset means",
            required: total,
            limit: cap,
        });
    }
    let dim = x.dim();
    let inv = 1.0 / m as f64;
    let mut out = Vec::with_capacity(total as usize);
    let mut seen = BTreeSet::new();
    let mut pos: Vec<usize> = (0..m).collect();
    let mut members = alloc::vec![0usize; m];
    loop {
        for (slot, &p) in members.iter_mut().zip(&pos) {
            *slot = sample[p];
        }
        members.sort_unstable();
        let mut acc = alloc::vec![0.0; dim];
        for &i in &members {
            for (a, v) in acc.iter_mut().zip(x.point(i)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a *= inv);
        if !dedup || seen.insert(bits(&acc)) {
            out.push(acc);
        }
        if !next_combination(&mut pos, sample.len()) {
            break;
        }
    }
    Ok(out)
}

/// Advances `pos` to the next increasing `m`-combination of `0..n`.
fn next_combination(pos: &mut [usize], n: usize) -> bool {
    let m = pos.len();
    for i in (0..m).rev() {
        if pos[i] < n - m + i {
            pos[i] += 1;
            for j in (i + 1)..m {
                pos[j] = pos[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|c| c.to_bits()).collect()
}

pub(crate) fn tuple_bits(t: &[Vec<f64>]) -> Vec<u64> {
    t.iter().flat_map(|m| m.iter().map(|c| c.to_bits())).collect()
}

/// Candidate `K`-tuples of means.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTupleSet {
    pub k: usize,
    pub dim: usize,
    pub tuples: Vec<Vec<Vec<f64>>>,
}

impl MeanTupleSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// One round of the product construction: for each of the `k` clusters draw
/// a fresh multiset, take its subset means, and extend the product.
pub fn approx_means_round(x: &PointSet, k: usize, cfg: &SamplingConfig, rng: &mut Rng) -> Result<MeanTupleSet> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::domain("K must be at least 1"));
    }
    let pool: Vec<usize> = (0..x.len()).collect();
    let mut factors = Vec::with_capacity(k);
    let mut size: u128 = 1;
    for _ in 0..k {
        let sample = sample_multiset(&pool, cfg.sample_size, rng)?;
        let t = subset_means(x, &sample, cfg.subset_size, cfg.max_subset_means, cfg.dedup)?;
        size = size.saturating_mul(t.len() as u128);
        factors.push(t);
    }
    if size > cfg.max_tuples {
        return Err(Error::BudgetExceeded {
            stage: "mean tuple product",
            required: size,
            limit: cfg.max_tuples,
        });
    }
    let tuples: Vec<Vec<Vec<f64>>> = crate::grids::tuple_iterator(&factors)?.collect();
    Ok(MeanTupleSet {
        k,
        dim: x.dim(),
        tuples,
    })
}

/// `cfg.repeats` rounds of [`approx_means_round`], unioned.
pub fn approx_means_product(x: &PointSet, k: usize, cfg: &SamplingConfig, rng: &mut Rng) -> Result<MeanTupleSet> {
    let mut all = MeanTupleSet {
        k,
        dim: x.dim(),
        tuples: Vec::new(),
    };
    let mut seen = BTreeSet::new();
    for _ in 0..cfg.repeats {
        let round = approx_means_round(x, k, cfg, rng)?;
        for t in round.tuples {
            if !cfg.dedup || seen.insert(tuple_bits(&t)) {
                all.tuples.push(t);
            }
        }
        if all.tuples.len() as u128 > cfg.max_tuples {
            return Err(Error::BudgetExceeded {
                stage: "mean tuple product",
                required: all.tuples.len() as u128,
                limit: cfg.max_tuples,
            });
        }
    }
    Ok(all)
}
