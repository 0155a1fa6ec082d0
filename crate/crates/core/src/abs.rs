//! Recursive sample-and-prune search for means under fixed variances and
//! weights.
//!
//! The recursion works on a set `R` of remaining points, the number `l` of
//! means still to find and the prefix of means found so far:
//!
//! * `l = 0`: the prefix is a candidate.
//! * `l ≥ |R|`: the prefix followed by the points of `R` is a candidate.
//! * otherwise a multiset is sampled from `R`, every subset mean extends the
//!   prefix (recursing with `l − 1`), and then the half of `R` that is
//!   cheapest under the components fixed so far is dropped (recursing with
//!   the same `l`).
//!
//! The result is the candidate with the smallest complete-data cost over all
//! of `X`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::math;
use crate::model::{sq_dist, PointSet, SphericalComponent, SphericalMixture};
use crate::sampling::{self, tuple_bits};
use crate::score::DistanceTable;
use crate::{Error, Result, Rng};

pub const DEFAULT_MAX_CANDIDATES: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AbsConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub sample_size: usize,
    pub subset_size: usize,
    pub max_subset_means: u128,
    /// Cap on the number of candidate tuples one search may emit.
    pub max_candidates: usize,
}

impl AbsConfig {
    /// Sizes from the sampling guarantee with `α = ε/(16k²)`.
    pub fn new(epsilon: f64, delta: f64, k: usize) -> Result<Self> {
        let k2 = (k * k).max(1) as f64;
        Self::with_alpha(epsilon / (16.0 * k2), epsilon, delta)
    }

    pub fn with_alpha(alpha: f64, epsilon: f64, delta: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            epsilon,
            delta,
            sample_size: sampling::default_sample_size(alpha, epsilon, delta),
            subset_size: sampling::default_subset_size(epsilon, delta),
            max_subset_means: sampling::DEFAULT_MAX_SUBSET_MEANS,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain("alpha must lie in (0, 1]"));
        }
        if !(self.epsilon > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain("epsilon must be positive and delta in (0, 1)"));
        }
        if self.subset_size == 0 || self.subset_size > self.sample_size {
            return Err(Error::domain("subset size must lie in 1..=sample size"));
        }
        Ok(())
    }
}

/// Variances and weights held fixed during the search.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedShape {
    variances: Vec<f64>,
    weights: Vec<f64>,
}

impl FixedShape {
    pub fn new(variances: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if variances.is_empty() || variances.len() != weights.len() {
            return Err(Error::domain("shape needs one variance and one weight per component"));
        }
        if variances.iter().chain(&weights).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("shape variances and weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if math::abs(total - 1.0) > crate::model::WEIGHT_SUM_TOL {
            return Err(Error::domain("shape weights must sum to 1"));
        }
        Ok(Self { variances, weights })
    }

    pub fn k(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mixture placing component `i` at `means[i]`.
    pub fn mixture(&self, means: &[Vec<f64>]) -> Result<SphericalMixture> {
        SphericalMixture::from_parts(&self.weights, means.to_vec(), &self.variances)
    }

    pub(crate) fn terms(&self, dim: usize) -> Vec<(f64, f64)> {
        self.weights
            .iter()
            .zip(&self.variances)
            .map(|(&w, &v)| crate::model::component_terms(dim, w, v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsOutcome {
    pub mixture: SphericalMixture,
    pub cost: f64,
    /// Distinct candidate tuples scored.
    pub candidates: usize,
}

/// Drops the `⌊|R|/2⌋` points of `r` that are cheapest under the best of
/// `fixed`; ties drop the lower point index first. Survivors keep their order.
pub fn prune_half(x: &PointSet, r: &[usize], fixed: &[SphericalComponent]) -> Result<Vec<usize>> {
    if fixed.is_empty() {
        return Err(Error::domain("pruning needs at least one fixed component"));
    }
    let drop = r.len() / 2;
    let mut keyed: Vec<(f64, usize)> = if let [only] = fixed {
        // One component orders points by distance to its mean alone.
        r.iter().map(|&i| (sq_dist(x.point(i), only.mean()), i)).collect()
    } else {
        r.iter()
            .map(|&i| {
                let p = x.point(i);
                let c = fixed
                    .iter()
                    .map(|c| crate::model::point_cost(p, c))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                Ok((c, i))
            })
            .collect::<Result<_>>()?
    };
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut dropped: Vec<usize> = keyed[..drop].iter().map(|&(_, i)| i).collect();
    dropped.sort_unstable();
    Ok(r.iter().copied().filter(|i| dropped.binary_search(i).is_err()).collect())
}

struct Search<'a> {
    x: &'a PointSet,
    k: usize,
    shape: &'a FixedShape,
    cfg: &'a AbsConfig,
    rng: &'a mut Rng,
    out: Vec<Vec<Vec<f64>>>,
    max_depth: usize,
}

impl Search<'_> {
    fn emit(&mut self, mut tuple: Vec<Vec<f64>>) -> Result<()> {
        if self.out.len() >= self.cfg.max_candidates {
            return Err(Error::BudgetExceeded {
                stage: "sample-and-prune candidates",
                required: self.out.len() as u128 + 1,
                limit: self.cfg.max_candidates as u128,
            });
        }
        // A branch can run out of points before it has k means; repeat the
        // last mean so every candidate is a full k-component mixture.
        let Some(last) = tuple.last().cloned() else {
            return Err(Error::domain("no points left to place a mean"));
        };
        tuple.resize(self.k, last);
        self.out.push(tuple);
        Ok(())
    }

    fn run(&mut self, r: &[usize], l: usize, prefix: &mut Vec<Vec<f64>>, depth: usize) -> Result<()> {
        self.max_depth = self.max_depth.max(depth);
        if l == 0 {
            return self.emit(prefix.clone());
        }
        if l >= r.len() {
            let mut t = prefix.clone();
            t.extend(r.iter().map(|&i| self.x.point(i).to_vec()));
            return self.emit(t);
        }
        let sample = sampling::sample_multiset(r, self.cfg.sample_size, self.rng)?;
        let means = sampling::subset_means(
            self.x,
            &sample,
            self.cfg.subset_size,
            self.cfg.max_subset_means,
            true,
        )?;
        for m in means {
            prefix.push(m);
            self.run(r, l - 1, prefix, depth + 1)?;
            prefix.pop();
        }
        if prefix.is_empty() {
            return Ok(());
        }
        let fixed = prefix
            .iter()
            .enumerate()
            .map(|(i, m)| SphericalComponent::new(self.shape.weights[i], m.clone(), self.shape.variances[i]))
            .collect::<Result<Vec<_>>>()?;
        let survivors = prune_half(self.x, r, &fixed)?;
        self.run(&survivors, l, prefix, depth + 1)
    }
}

/// All distinct candidate mean tuples of one search, in discovery order,
/// together with the deepest recursion level reached.
pub fn abs_candidates_with_depth(
    x: &PointSet,
    k: usize,
    shape: &FixedShape,
    cfg: &AbsConfig,
    rng: &mut Rng,
) -> Result<(Vec<Vec<Vec<f64>>>, usize)> {
    cfg.validate()?;
    if k == 0 || shape.k() != k {
        return Err(Error::domain("shape must have exactly K >= 1 components"));
    }
    let all: Vec<usize> = (0..x.len()).collect();
    let mut search = Search {
        x,
        k,
        shape,
        cfg,
        rng,
        out: Vec::new(),
        max_depth: 0,
    };
    search.run(&all, k, &mut Vec::new(), 0)?;
    let mut seen = BTreeSet::new();
    let out = search
        .out
        .into_iter()
        .filter(|t| seen.insert(tuple_bits(t)))
        .collect();
    Ok((out, search.max_depth))
}

/// Candidates of one branch of the recursion: the points `r` still in
/// play, `l` means still to find and the means fixed so far, with
/// `prefix.len() + l = k`. Returned in discovery order, duplicates kept.
#[allow(clippy::too_many_arguments)]
pub fn abs_branch(
    x: &PointSet,
    k: usize,
    shape: &FixedShape,
    cfg: &AbsConfig,
    rng: &mut Rng,
    r: &[usize],
    l: usize,
    prefix: &[Vec<f64>],
) -> Result<Vec<Vec<Vec<f64>>>> {
    cfg.validate()?;
    if shape.k() != k || prefix.len() + l != k {
        return Err(Error::domain("prefix length plus remaining means must equal K"));
    }
    if r.iter().any(|&i| i >= x.len()) || prefix.iter().any(|m| m.len() != x.dim()) {
        return Err(Error::domain("branch state does not match the instance"));
    }
    let mut search = Search {
        x,
        k,
        shape,
        cfg,
        rng,
        out: Vec::new(),
        max_depth: 0,
    };
    search.run(r, l, &mut prefix.to_vec(), 0)?;
    Ok(search.out)
}

pub fn abs_candidates(
    x: &PointSet,
    k: usize,
    shape: &FixedShape,
    cfg: &AbsConfig,
    rng: &mut Rng,
) -> Result<Vec<Vec<Vec<f64>>>> {
    abs_candidates_with_depth(x, k, shape, cfg, rng).map(|(c, _)| c)
}

/// Whether the candidate set of a search depends on the shape at all.
///
/// Pruning consults components `1..l` only while `l < k`, and a single
/// component orders points by distance alone, so for `k ≤ 2` every shape
/// sees the same candidates given the same random stream.
pub fn candidates_shape_independent(k: usize) -> bool {
    k <= 2
}

/// Index and cost of the cheapest candidate under `shape`, first one on ties.
pub(crate) fn best_candidate(
    x: &PointSet,
    tables: &[DistanceTable],
    terms: &[(f64, f64)],
    bound: f64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut limit = bound;
    for (i, t) in tables.iter().enumerate() {
        if let Some(c) = t.score(terms, limit) {
            if c < limit {
                limit = c;
                best = Some((i, c));
            }
        }
    }
    let _ = x;
    best
}

/// Runs the search and returns the cheapest candidate mixture.
pub fn abs_search(x: &PointSet, k: usize, shape: &FixedShape, cfg: &AbsConfig, rng: &mut Rng) -> Result<AbsOutcome> {
    let cands = abs_candidates(x, k, shape, cfg, rng)?;
    let tables: Vec<DistanceTable> = cands.iter().map(|t| DistanceTable::new(x, t)).collect();
    let terms = shape.terms(x.dim());
    let (idx, _) = best_candidate(x, &tables, &terms, f64::INFINITY)
        .ok_or_else(|| Error::domain("search produced no candidates"))?;
    let mixture = shape.mixture(&cands[idx])?;
    let cost = crate::model::model_nll(x, &mixture);
    Ok(AbsOutcome {
        mixture,
        cost,
        candidates: cands.len(),
    })
}
