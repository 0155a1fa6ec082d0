//! Domain types and the complete-data cost model.
//!
//! For a spherical component `(w, μ, σ²)` in `R^d` the cost of a point is
//!
//! ```text
//! (d/2)·ln(2πσ²) + ‖x − μ‖² / (2σ²) − ln w
//! ```
//!
//! and every other objective in this crate is a sum of such terms.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, TWO_PI};
use crate::{Error, Result};

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Finite set of observations in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::domain("point set is empty"))?;
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::domain("point set is empty"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::domain("coordinate count is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("coordinates must be finite"));
        }
        Ok(Self { dim, coords })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Points at the given indices, in index order.
    pub fn select<'a>(&'a self, idx: &'a [usize]) -> impl Iterator<Item = &'a [f64]> + Clone + 'a {
        idx.iter().map(move |&i| self.point(i))
    }

    /// Δ², the largest pairwise squared distance (0 for a single point).
    pub fn max_sq_dist(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(sq_dist(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Smallest pairwise squared distance, `None` for a single point.
    pub fn min_sq_dist(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = sq_dist(self.point(i), self.point(j));
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }
}

/// Assignment of every point to one of `k` clusters (labels are `0..k`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HardPartition {
    labels: Vec<usize>,
    k: usize,
}

impl HardPartition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("a partition needs at least one cluster"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::domain(alloc::format!(
                "label {bad} out of range for {k} clusters"
            )));
        }
        Ok(Self { labels, k })
    }

    /// Builds a partition from explicit clusters of point indices.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &i in members {
                if i >= n || labels[i] != usize::MAX {
                    return Err(Error::domain("clusters must be a disjoint cover of the points"));
                }
                labels[i] = c;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::domain("clusters must be a disjoint cover of the points"));
        }
        Self::new(labels, clusters.len())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Every cluster holds at least two points.
    pub fn is_well_defined(&self) -> bool {
        self.sizes().iter().all(|&s| s >= 2)
    }

    fn check_against(&self, x: &PointSet) -> Result<()> {
        if self.labels.len() != x.len() {
            return Err(Error::domain(alloc::format!(
                "partition covers {} points but the instance has {}",
                self.labels.len(),
                x.len()
            )));
        }
        Ok(())
    }
}

/// One weighted spherical Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalComponent {
    weight: f64,
    mean: Vec<f64>,
    variance: f64,
}

impl SphericalComponent {
    pub fn new(weight: f64, mean: Vec<f64>, variance: f64) -> Result<Self> {
        if !(weight > 0.0 && weight <= 1.0 + WEIGHT_SUM_TOL) {
            return Err(Error::domain("component weight must lie in (0, 1]"));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain("component variance must be positive and finite"));
        }
        if mean.is_empty() || mean.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("component mean must be a finite non-empty vector"));
        }
        Ok(Self {
            weight,
            mean,
            variance,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Distance-independent part of the point cost and the factor on ‖x − μ‖².
    #[inline]
    pub(crate) fn terms(&self) -> (f64, f64) {
        component_terms(self.dim(), self.weight, self.variance)
    }

    #[inline]
    pub(crate) fn cost_unchecked(&self, x: &[f64]) -> f64 {
        let (offset, scale) = self.terms();
        offset + scale * sq_dist(x, &self.mean)
    }
}

#[inline]
pub(crate) fn component_terms(dim: usize, weight: f64, variance: f64) -> (f64, f64) {
    (
        0.5 * dim as f64 * math::ln(TWO_PI * variance) - math::ln(weight),
        0.5 / variance,
    )
}

/// The mixture θ: `K ≥ 1` components whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalMixture {
    components: Vec<SphericalComponent>,
}

impl SphericalMixture {
    pub fn new(components: Vec<SphericalComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::domain("a mixture needs at least one component"))?;
        let dim = first.dim();
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if math::abs(total - 1.0) > WEIGHT_SUM_TOL {
            return Err(Error::domain(alloc::format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    /// Assembles a mixture from parallel arrays.
    pub fn from_parts(weights: &[f64], means: Vec<Vec<f64>>, variances: &[f64]) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != variances.len() {
            return Err(Error::domain("weights, means and variances differ in length"));
        }
        let comps = means
            .into_iter()
            .zip(weights.iter().zip(variances))
            .map(|(m, (&w, &v))| SphericalComponent::new(w, m, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn components(&self) -> &[SphericalComponent] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn check_against(&self, x: &PointSet) -> Result<()> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// Assumed balance constants `f(K)` and optionally `g(K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceProfile {
    pub f: f64,
    pub g: Option<f64>,
}

impl BalanceProfile {
    pub fn new(f: f64, g: Option<f64>) -> Result<Self> {
        if !(f >= 1.0 && f.is_finite()) {
            return Err(Error::domain("balance constant f must be a finite value >= 1"));
        }
        if let Some(g) = g {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(Error::domain("balance constant g must be a finite value >= 1"));
            }
        }
        Ok(Self { f, g })
    }
}

/// Breakdown of a complete-data negative log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub total: f64,
    /// `L_{C_k}(μ_k, σ_k²)` per cluster, without the weight term.
    pub per_cluster: Vec<f64>,
    /// `−Σ_k ln(w_k)·|C_k|`.
    pub weight_term: f64,
}

/// Closed-form single-component optimum of a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleFit {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub n: usize,
    pub dim: usize,
    pub well_defined: bool,
    /// `None` for a single point.
    pub min_sq_dist: Option<f64>,
    /// The `4d/π` threshold every pairwise squared distance must reach.
    pub threshold: f64,
    pub max_sq_dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BalanceReport {
    pub f_balanced: bool,
    pub fg_balanced: Option<bool>,
}

/// Which hard-clustering objective is being minimised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Complete-data negative log-likelihood with free weights and variances.
    Cmle,
    /// Weighted K-means: all variances fixed to `1/(2β)`, additive constants dropped.
    Wkm { beta: f64 },
    /// Weights fixed to `1/K`. Scored as the complete-data NLL at those
    /// weights, i.e. the per-cluster terms plus `|X|·ln K`.
    Ucmle,
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Coordinate-wise average of a non-empty set of points.
pub fn mean<'a, I>(points: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut it = points.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::domain("mean of an empty set"))?;
    let mut acc = first.to_vec();
    let mut count = 1usize;
    for p in it {
        check_dim(acc.len(), p.len())?;
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        count += 1;
    }
    let inv = 1.0 / count as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

/// `(1/(|Y|·d)) Σ_{y∈Y} ‖y − center‖²`.
pub fn variance<'a, I>(points: I, center: &[f64]) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for p in points {
        check_dim(center.len(), p.len())?;
        total += sq_dist(p, center);
        count += 1;
    }
    if count == 0 {
        return Err(Error::domain("variance of an empty set"));
    }
    Ok(total / (count as f64 * center.len() as f64))
}

/// Cost of explaining `x` by a single weighted component.
pub fn point_cost(x: &[f64], comp: &SphericalComponent) -> Result<f64> {
    check_dim(comp.dim(), x.len())?;
    Ok(comp.cost_unchecked(x))
}

/// `L_C(μ, σ²)` for a single unweighted component.
pub fn cluster_nll<'a, I>(points: I, mean: &[f64], variance: f64) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if !(variance > 0.0) {
        return Err(Error::domain("variance must be positive"));
    }
    let d = mean.len() as f64;
    let half_log = 0.5 * d * math::ln(TWO_PI * variance);
    let mut total = 0.0;
    for p in points {
        check_dim(mean.len(), p.len())?;
        total += half_log + sq_dist(p, mean) / (2.0 * variance);
    }
    Ok(total)
}

/// M-step mean and variance of a cluster together with `OPT(C,1) = (|C|d/2)(ln(2πσ²)+1)`.
pub fn opt_single<'a, I>(points: I) -> Result<SingleFit>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    let size = points.clone().into_iter().count();
    if size < 2 {
        return Err(Error::DegenerateCluster {
            cluster: 0,
            reason: "fewer than two points",
        });
    }
    let mu = mean(points.clone())?;
    let var = variance(points, &mu)?;
    if !(var > 0.0) {
        return Err(Error::DegenerateCluster {
            cluster: 0,
            reason: "zero variance",
        });
    }
    let cost = 0.5 * (size * mu.len()) as f64 * (math::ln(TWO_PI * var) + 1.0);
    Ok(SingleFit {
        mean: mu,
        variance: var,
        cost,
    })
}

fn relabel(err: Error, cluster: usize) -> Error {
    match err {
        Error::DegenerateCluster { reason, .. } => Error::DegenerateCluster { cluster, reason },
        other => other,
    }
}

/// `L_X(θ, C) = Σ_k L_{C_k}(μ_k, σ_k²) − ln(w_k)·|C_k|`.
pub fn complete_nll(x: &PointSet, part: &HardPartition, theta: &SphericalMixture) -> Result<CostReport> {
    part.check_against(x)?;
    theta.check_against(x)?;
    if part.k() != theta.k() {
        return Err(Error::domain(alloc::format!(
            "partition has {} clusters but the mixture has {} components",
            part.k(),
            theta.k()
        )));
    }
    let mut per_cluster = vec![0.0; part.k()];
    let mut weight_term = 0.0;
    for (p, &l) in x.iter().zip(part.labels()) {
        let c = &theta.components[l];
        per_cluster[l] += c.cost_unchecked(p) + math::ln(c.weight);
        weight_term -= math::ln(c.weight);
    }
    let total = per_cluster.iter().sum::<f64>() + weight_term;
    Ok(CostReport {
        total,
        per_cluster,
        weight_term,
    })
}

/// `L_X(θ) = Σ_x min_k` point cost: the complete-data NLL under free reassignment.
pub fn model_nll(x: &PointSet, theta: &SphericalMixture) -> f64 {
    let terms: Vec<(f64, f64)> = theta.components.iter().map(SphericalComponent::terms).collect();
    x.iter()
        .map(|p| {
            theta
                .components
                .iter()
                .zip(&terms)
                .map(|(c, &(o, s))| o + s * sq_dist(p, &c.mean))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// `L_X(C) = Σ_k OPT(C_k,1) − ln(|C_k|/|X|)·|C_k|`, the best complete-data NLL for a fixed partition.
pub fn partition_nll(x: &PointSet, part: &HardPartition) -> Result<f64> {
    part.check_against(x)?;
    let n = x.len() as f64;
    let mut total = 0.0;
    for (k, members) in part.clusters().iter().enumerate() {
        let fit = opt_single(x.select(members)).map_err(|e| relabel(e, k))?;
        let size = members.len() as f64;
        total += fit.cost - math::ln(size / n) * size;
    }
    Ok(total)
}

/// M-step: `w_k = |C_k|/|X|`, `μ_k = μ(C_k)`, `σ_k² = (1/(d|C_k|)) Σ ‖x − μ_k‖²`.
pub fn fit_params(x: &PointSet, part: &HardPartition) -> Result<SphericalMixture> {
    part.check_against(x)?;
    let n = x.len() as f64;
    let mut comps = Vec::with_capacity(part.k());
    for (k, members) in part.clusters().iter().enumerate() {
        if members.is_empty() {
            return Err(Error::DegenerateCluster {
                cluster: k,
                reason: "empty cluster",
            });
        }
        let mu = mean(x.select(members))?;
        let var = variance(x.select(members), &mu)?;
        if !(var > 0.0) {
            return Err(Error::DegenerateCluster {
                cluster: k,
                reason: "zero variance",
            });
        }
        comps.push(SphericalComponent {
            weight: members.len() as f64 / n,
            mean: mu,
            variance: var,
        });
    }
    SphericalMixture::new(comps)
}

/// E-step: each point goes to its cheapest component, ties to the lowest index.
pub fn induce_partition(x: &PointSet, theta: &SphericalMixture) -> HardPartition {
    let terms: Vec<(f64, f64)> = theta.components.iter().map(SphericalComponent::terms).collect();
    let labels = x
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_cost = f64::INFINITY;
            for (k, (c, &(o, s))) in theta.components.iter().zip(&terms).enumerate() {
                let cost = o + s * sq_dist(p, &c.mean);
                if cost < best_cost {
                    best_cost = cost;
                    best = k;
                }
            }
            best
        })
        .collect();
    HardPartition {
        labels,
        k: theta.k(),
    }
}

/// Posterior component probabilities of `x`, evaluated in the log domain.
pub fn posterior(x: &[f64], theta: &SphericalMixture) -> Result<Vec<f64>> {
    check_dim(theta.dim(), x.len())?;
    let neg: Vec<f64> = theta.components.iter().map(|c| -c.cost_unchecked(x)).collect();
    let max = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = neg.iter().map(|v| math::exp(v - max)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Threshold `4d/π` on pairwise squared distances of a well-defined instance.
pub fn well_defined_threshold(dim: usize) -> f64 {
    4.0 * dim as f64 / core::f64::consts::PI
}

pub fn validate_instance(x: &PointSet) -> InstanceReport {
    let threshold = well_defined_threshold(x.dim());
    let min_sq_dist = x.min_sq_dist();
    InstanceReport {
        n: x.len(),
        dim: x.dim(),
        well_defined: min_sq_dist.map_or(true, |m| m >= threshold),
        min_sq_dist,
        threshold,
        max_sq_dist: x.max_sq_dist(),
    }
}

pub fn validate_balance(x: &PointSet, part: &HardPartition, prof: &BalanceProfile) -> Result<BalanceReport> {
    part.check_against(x)?;
    let n = x.len() as f64;
    let sizes = part.sizes();
    let f_balanced = sizes.iter().all(|&s| s as f64 * prof.f >= n);
    let fg_balanced = match prof.g {
        None => None,
        Some(g) => {
            let costs = part
                .clusters()
                .iter()
                .enumerate()
                .map(|(k, m)| opt_single(x.select(m)).map(|f| f.cost).map_err(|e| relabel(e, k)))
                .collect::<Result<Vec<_>>>()?;
            let total: f64 = costs.iter().sum();
            Some(f_balanced && costs.iter().all(|&c| c * g >= total))
        }
    };
    Ok(BalanceReport {
        f_balanced,
        fg_balanced,
    })
}

/// Constant separating the CMLE cost at `σ² = 1/(2β)` from the WKM cost: `|X|(d/2)·ln(π/β)`.
pub fn wkm_offset(n: usize, dim: usize, beta: f64) -> f64 {
    0.5 * (n * dim) as f64 * math::ln(core::f64::consts::PI / beta)
}

/// Best value of `objective` over all parameters for a fixed partition.
///
/// Requires clusters of at least two points; CMLE and UCMLE additionally
/// require positive variance in every cluster.
pub fn partition_objective(x: &PointSet, part: &HardPartition, objective: Objective) -> Result<f64> {
    part.check_against(x)?;
    match objective {
        Objective::Cmle => partition_nll(x, part),
        Objective::Ucmle => {
            let mut total = x.len() as f64 * math::ln(part.k() as f64);
            for (k, m) in part.clusters().iter().enumerate() {
                total += opt_single(x.select(m)).map_err(|e| relabel(e, k))?.cost;
            }
            Ok(total)
        }
        Objective::Wkm { beta } => {
            let n = x.len() as f64;
            let mut total = 0.0;
            for (k, m) in part.clusters().iter().enumerate() {
                if m.is_empty() {
                    return Err(Error::DegenerateCluster {
                        cluster: k,
                        reason: "empty cluster",
                    });
                }
                let mu = mean(x.select(m))?;
                let spread: f64 = x.select(m).map(|p| sq_dist(p, &mu)).sum();
                let size = m.len() as f64;
                total += beta * spread - math::ln(size / n) * size;
            }
            Ok(total)
        }
    }
}

/// Value of `objective` for a mixture with free reassignment of points.
///
/// For WKM only the weights and means of `theta` matter.
pub fn mixture_objective(x: &PointSet, theta: &SphericalMixture, objective: Objective) -> f64 {
    match objective {
        Objective::Cmle | Objective::Ucmle => model_nll(x, theta),
        Objective::Wkm { beta } => x
            .iter()
            .map(|p| {
                theta
                    .components
                    .iter()
                    .map(|c| beta * sq_dist(p, &c.mean) - math::ln(c.weight))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum(),
    }
}

/// Mixture attaining [`partition_objective`] for a partition.
pub fn fit_for_objective(x: &PointSet, part: &HardPartition, objective: Objective) -> Result<SphericalMixture> {
    match objective {
        Objective::Cmle => fit_params(x, part),
        Objective::Ucmle => {
            let m = fit_params(x, part)?;
            let w = 1.0 / part.k() as f64;
            let comps = m
                .components
                .into_iter()
                .map(|c| SphericalComponent { weight: w, ..c })
                .collect();
            SphericalMixture::new(comps)
        }
        Objective::Wkm { beta } => {
            let n = x.len() as f64;
            let mut comps = Vec::with_capacity(part.k());
            for (k, m) in part.clusters().iter().enumerate() {
                if m.is_empty() {
                    return Err(Error::DegenerateCluster {
                        cluster: k,
                        reason: "empty cluster",
                    });
                }
                comps.push(SphericalComponent::new(
                    m.len() as f64 / n,
                    mean(x.select(m))?,
                    0.5 / beta,
                )?);
            }
            SphericalMixture::new(comps)
        }
    }
}
