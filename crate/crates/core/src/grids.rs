//! Candidate grids for cluster sizes, likelihood estimates and variances,
//! plus the farthest-first upper bound that anchors them.

use alloc::vec::Vec;

use crate::math::{self, TWO_PI};
use crate::model::{sq_dist, BalanceProfile, PointSet};
use crate::{Error, Result};

/// Farthest-first traversal summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GonzalesCertificate {
    /// Indices of the chosen centers, in selection order.
    pub centers: Vec<usize>,
    /// Largest distance from a point to its nearest center.
    pub radius: f64,
    /// `Γ = ln(2π·radius²) + 1 + ln K`; absent when the radius is zero.
    pub gamma: Option<f64>,
}

impl GonzalesCertificate {
    /// `(|X|d/2)·Γ`, an upper bound on the optimal complete-data cost.
    pub fn cost_bound(&self, n: usize, dim: usize) -> Option<f64> {
        self.gamma.map(|g| 0.5 * (n * dim) as f64 * g)
    }
}

/// Farthest-first traversal started at point 0; ties go to the lowest index.
pub fn gonzalez(x: &PointSet, k: usize) -> Result<GonzalesCertificate> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::domain(alloc::format!(
            "farthest-first traversal needs 1 <= K <= N, got K={k}, N={n}"
        )));
    }
    let mut centers = Vec::with_capacity(k);
    let mut nearest = alloc::vec![f64::INFINITY; n];
    let mut next = 0;
    for _ in 0..k {
        centers.push(next);
        let c = x.point(next);
        let mut far = 0;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in x.iter().enumerate() {
            let d = sq_dist(p, c);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > far_d {
                far_d = nearest[i];
                far = i;
            }
        }
        next = far;
    }
    let radius = math::sqrt(nearest.iter().copied().fold(0.0, f64::max));
    let gamma = (radius > 0.0).then(|| math::ln(TWO_PI * radius * radius) + 1.0 + math::ln(k as f64));
    Ok(GonzalesCertificate {
        centers,
        radius,
        gamma,
    })
}

/// Geometric grid of candidate cluster sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeGrid {
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub n: usize,
    pub f: f64,
}

impl SizeGrid {
    /// Smallest grid value at or above `size`.
    pub fn cover(&self, size: f64) -> Option<f64> {
        self.values.iter().copied().find(|&v| v >= size)
    }
}

/// `{(1+ε)^i · N/f : i = 1..⌈log_{1+ε} f⌉}`, or `{N}` when `f = 1`.
///
/// Every size in `[N/f, N]` has a value in `[size, (1+ε)·size]`. Values are
/// real; only ratios between them are consumed downstream.
pub fn size_grid(n: usize, prof: &BalanceProfile, eps: f64) -> Result<SizeGrid> {
    check_eps(eps)?;
    let base = n as f64 / prof.f;
    let ratio = 1.0 + eps;
    let count = math::ceil_log(prof.f, ratio);
    let mut values: Vec<f64> = if count == 0 {
        alloc::vec![n as f64]
    } else {
        (1..=count).map(|i| math::powi(ratio, i as i32) * base).collect()
    };
    // Rounding in the logarithm can leave the top value a hair below N.
    while *values.last().unwrap() < n as f64 {
        let i = values.len() + 1;
        values.push(math::powi(ratio, i as i32) * base);
    }
    Ok(SizeGrid {
        values,
        epsilon: eps,
        n,
        f: prof.f,
    })
}

/// Geometric grid of estimates for `Σ_k OPT(C_k, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NllGrid {
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub n: usize,
    pub dim: usize,
    pub gamma: f64,
}

impl NllGrid {
    pub fn cover(&self, v: f64) -> Option<f64> {
        self.values.iter().copied().find(|&u| u >= v)
    }

    /// `|X|d/2`, the value the grid multiplies by powers of `1+ε`.
    pub fn base(&self) -> f64 {
        0.5 * (self.n * self.dim) as f64
    }
}

/// `{(1+ε)^i · Nd/2 : i = 1..⌈log_{1+ε} Γ⌉}` (at least one value).
pub fn nll_grid(n: usize, dim: usize, gamma: f64, eps: f64) -> Result<NllGrid> {
    check_eps(eps)?;
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::domain(alloc::format!(
            "likelihood grid needs Gamma >= 1, got {gamma}"
        )));
    }
    let base = 0.5 * (n * dim) as f64;
    let ratio = 1.0 + eps;
    let count = math::ceil_log(gamma, ratio).max(1);
    let mut values: Vec<f64> = (1..=count).map(|i| math::powi(ratio, i as i32) * base).collect();
    while *values.last().unwrap() < base * gamma {
        let i = values.len() + 1;
        values.push(math::powi(ratio, i as i32) * base);
    }
    Ok(NllGrid {
        values,
        epsilon: eps,
        n,
        dim,
        gamma,
    })
}

/// Smallest exponent `j` used by [`variance_candidates`]: `⌈−log_{1+ε} g⌉`.
pub fn variance_exponent_floor(g: f64, eps: f64) -> i32 {
    -(math::ceil_log(g, 1.0 + eps) as i32)
}

/// `exp(2(1+ε)·N̂/(n_k·d) − ln(2π) − 1)`.
pub fn variance_from_estimate(n_hat: f64, n_k: f64, eps: f64, dim: usize) -> f64 {
    math::exp(log_two_pi_variance(n_hat, n_k, eps, dim) - math::ln(TWO_PI))
}

/// `ln(2π σ̃²)` for the candidate of [`variance_from_estimate`].
pub(crate) fn log_two_pi_variance(n_hat: f64, n_k: f64, eps: f64, dim: usize) -> f64 {
    2.0 * (1.0 + eps) * n_hat / (n_k * dim as f64) - 1.0
}

/// Variance candidates for one cluster from an estimate `N_est` of the total
/// single-cluster cost and a size estimate `n_k`, one per
/// `N̂ = (1+ε)^j·N_est` with `j = ⌈−log_{1+ε} g⌉ ..= 0`, increasing.
pub fn variance_candidates(n_est: f64, n_k: f64, prof: &BalanceProfile, eps: f64, dim: usize) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let g = prof
        .g
        .ok_or_else(|| Error::domain("variance candidates need the balance constant g"))?;
    if !(n_k > 0.0 && n_est > 0.0) {
        return Err(Error::domain("size and likelihood estimates must be positive"));
    }
    let lo = variance_exponent_floor(g, eps);
    Ok((lo..=0)
        .map(|j| variance_from_estimate(math::powi(1.0 + eps, j) * n_est, n_k, eps, dim))
        .collect())
}

/// Variance grid for well-defined solutions, additive in `u = ln(2πσ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceGrid {
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub max_sq_dist: f64,
}

impl VarianceGrid {
    pub fn cover(&self, var: f64) -> Option<f64> {
        self.values.iter().copied().find(|&v| v >= var)
    }
}

/// `{e^{jε}/(2π) : j = 0..=⌈ln(2πΔ²)/ε⌉}`.
///
/// Every `σ² ∈ [1/(2π), Δ²]` has a value `σ̃² ≥ σ²` with `ln σ̃² − ln σ² ≤ ε`.
pub fn variance_grid_welldefined(max_sq_dist: f64, eps: f64) -> Result<VarianceGrid> {
    check_eps(eps)?;
    if !(max_sq_dist >= 0.0 && max_sq_dist.is_finite()) {
        return Err(Error::domain("max squared distance must be finite and non-negative"));
    }
    let span = math::ln(TWO_PI * max_sq_dist);
    let count = if span > 0.0 { math::ceil(span / eps) as usize } else { 0 };
    let mut values: Vec<f64> = (0..=count)
        .map(|j| math::exp(j as f64 * eps) / TWO_PI)
        .collect();
    while *values.last().unwrap() < max_sq_dist {
        let j = values.len();
        values.push(math::exp(j as f64 * eps) / TWO_PI);
    }
    Ok(VarianceGrid {
        values,
        epsilon: eps,
        max_sq_dist,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain("grid epsilon must be positive"));
    }
    Ok(())
}

/// Lexicographic enumeration of index tuples `(i_1, …, i_K)` with
/// `i_k < sizes[k]`; the last position varies fastest.
#[derive(Debug, Clone)]
pub struct IndexTuples {
    sizes: Vec<usize>,
    current: Vec<usize>,
    started: bool,
    done: bool,
    count: u64,
}

impl IndexTuples {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::domain("every candidate list must be non-empty"));
        }
        let mut count: u64 = 1;
        for &s in sizes {
            count = count.checked_mul(s as u64).ok_or(Error::BudgetExceeded {
                stage: "tuple enumeration",
                required: u128::MAX,
                limit: u64::MAX as u128,
            })?;
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            current: alloc::vec![0; sizes.len()],
            started: false,
            done: false,
            count,
        })
    }

    /// Total number of tuples.
    pub fn total(&self) -> u64 {
        self.count
    }

    /// Advances and borrows the next tuple.
    pub fn next_tuple(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        for pos in (0..self.sizes.len()).rev() {
            self.current[pos] += 1;
            if self.current[pos] < self.sizes[pos] {
                return Some(&self.current);
            }
            self.current[pos] = 0;
        }
        self.done = true;
        None
    }
}

impl Iterator for IndexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_tuple().map(<[usize]>::to_vec)
    }
}

/// Streams the Cartesian product of per-cluster candidate lists.
pub fn tuple_iterator<T: Clone>(lists: &[Vec<T>]) -> Result<impl Iterator<Item = Vec<T>> + '_> {
    let sizes: Vec<usize> = lists.iter().map(Vec::len).collect();
    let idx = IndexTuples::new(&sizes)?;
    Ok(idx.map(move |t| t.iter().zip(lists).map(|(&i, l)| l[i].clone()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(v: &[f64]) -> PointSet {
        PointSet::new(v.iter().map(|&c| vec![c]).collect()).unwrap()
    }

    fn prof(f: f64, g: Option<f64>) -> BalanceProfile {
        BalanceProfile::new(f, g).unwrap()
    }

    #[test]
    fn gonzalez_four_points() {
        let c = gonzalez(&line(&[0.0, 2.0, 10.0, 12.0]), 2).unwrap();
        assert_eq!(c.centers, vec![0, 3]);
        assert_eq!(c.radius, 2.0);
        let expected = libm::log(8.0 * core::f64::consts::PI) + 1.0 + core::f64::consts::LN_2;
        assert!((c.gamma.unwrap() - expected).abs() < 1e-12);
        assert!((c.gamma.unwrap() - 4.917316).abs() < 1e-5);
    }

    #[test]
    fn gonzalez_k_equals_n_has_no_gamma() {
        let c = gonzalez(&line(&[0.0, 2.0, 10.0]), 3).unwrap();
        assert_eq!(c.radius, 0.0);
        assert!(c.gamma.is_none());
        assert!(gonzalez(&line(&[0.0]), 2).is_err());
    }

    #[test]
    fn size_grid_examples() {
        let g = size_grid(16, &prof(4.0, None), 1.0).unwrap();
        assert_eq!(g.values, vec![8.0, 16.0]);
        assert_eq!(g.cover(5.0), Some(8.0));
        let g = size_grid(7, &prof(1.0, None), 0.5).unwrap();
        assert_eq!(g.values, vec![7.0]);
    }

    #[test]
    fn nll_grid_examples() {
        let g = nll_grid(4, 1, 4.917, 1.0).unwrap();
        assert_eq!(g.values, vec![4.0, 8.0, 16.0]);
        assert_eq!(g.cover(5.675754), Some(8.0));
        let g = nll_grid(4, 1, 1.0 + 1e-12, 1.0).unwrap();
        assert_eq!(g.values, vec![4.0]);
        assert!(nll_grid(4, 1, 0.5, 1.0).is_err());
    }

    #[test]
    fn variance_candidate_examples() {
        let v = variance_candidates(6.0, 2.0, &prof(2.0, Some(2.0)), 1.0, 1).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0] - libm::exp(3.16212)).abs() / v[0] < 1e-5);
        assert!((v[0] - 23.62).abs() < 0.01);
        let top = libm::exp(12.0 - libm::log(2.0 * core::f64::consts::PI) - 1.0);
        assert!((v[1] - top).abs() / top < 1e-12);
        // Quoted as ≈9527.3 from a truncated exponent; exact value ≈9529.27.
        assert!((v[1] - 9527.3).abs() / 9527.3 < 5e-4);
        let v = variance_candidates(6.0, 2.0, &prof(2.0, Some(1.0)), 1.0, 1).unwrap();
        assert_eq!(v.len(), 1);
        assert!(variance_candidates(6.0, 2.0, &prof(2.0, None), 1.0, 1).is_err());
    }

    #[test]
    fn variance_candidates_bracket_the_four_point_optimum() {
        // Optimal clusters {0,2} and {10,12}: OPT(C_k,1) = ln(2π)+1, σ_k² = 1.
        let opt_k = libm::log(TWO_PI) + 1.0;
        let total = 2.0 * opt_k;
        let eps = 0.5;
        let n_est = nll_grid(4, 1, 4.917316, eps).unwrap().cover(total).unwrap();
        let n_k = size_grid(4, &prof(2.0, None), eps).unwrap().cover(2.0).unwrap();
        let cands = variance_candidates(n_est, n_k, &prof(2.0, Some(2.0)), eps, 1).unwrap();
        let bound = ((1.0 + eps) * (1.0 + eps) - 1.0) * (2.0 / 2.0) * opt_k;
        assert!(cands
            .iter()
            .any(|&v| v >= 1.0 && libm::log(v) - libm::log(1.0) <= bound));
    }

    #[test]
    fn welldefined_grid_examples() {
        let g = variance_grid_welldefined(4.0, 0.5).unwrap();
        assert_eq!(g.values.len(), 8);
        assert!((g.values[0] - 0.159155).abs() < 1e-6);
        let u: Vec<f64> = g.values.iter().map(|v| libm::log(TWO_PI * v)).collect();
        for (j, ui) in u.iter().enumerate() {
            assert!((ui - 0.5 * j as f64).abs() < 1e-12);
        }
        let c = g.cover(0.3).unwrap();
        assert!((libm::log(TWO_PI * c) - 1.0).abs() < 1e-12);
        assert!((c - 0.4326).abs() < 1e-4);
        assert!(libm::log(c) - libm::log(0.3) <= 0.5);
        assert_eq!(g.cover(1.0 / TWO_PI), Some(1.0 / TWO_PI));
    }

    #[test]
    fn tuple_iteration() {
        let single: Vec<_> = tuple_iterator(&[vec!['a'], vec!['b']]).unwrap().collect();
        assert_eq!(single, vec![vec!['a', 'b']]);
        let six: Vec<_> = tuple_iterator(&[vec![0, 1], vec![0, 1, 2]]).unwrap().collect();
        assert_eq!(
            six,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
        let mut big = IndexTuples::new(&[10, 10, 10]).unwrap();
        assert_eq!(big.total(), 1000);
        let mut n = 0;
        while big.next_tuple().is_some() {
            n += 1;
        }
        assert_eq!(n, 1000);
        assert!(IndexTuples::new(&[usize::MAX, usize::MAX, 4]).unwrap_err().is_budget());
        assert!(IndexTuples::new(&[2, 0]).is_err());
    }
}
