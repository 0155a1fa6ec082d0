//! End-to-end solvers: the sampling-and-grid pipeline, the
//! sample-and-prune pipeline, the weighted K-means and uniform-weight
//! special cases, and the CEM baseline.
//!
//! Every pipeline enumerates candidate mixtures and keeps the one with the
//! smallest objective under free reassignment of points (`model_nll` for
//! CMLE and UCMLE, the weighted K-means cost for WKM).
//!
//! Parameter shapes (weights and variances) that provably coincide are
//! evaluated once. Grid weights `n_k/Σn_l` depend only on differences of
//! the size-grid exponents, and the sampling pipeline's variance candidate
//! `ln(2πσ̃²) = (1+ε)·f·(1+ε)^{e−i} − 1` depends only on the difference
//! between the likelihood exponent `e` and the size exponent `i`.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::abs::{abs_candidates, candidates_shape_independent, AbsConfig, FixedShape};
use crate::cem::{cem_restarts, cem_run, CemConfig, CemInit, DegeneracyPolicy};
use crate::grids::{gonzalez, nll_grid, size_grid, variance_exponent_floor, variance_grid_welldefined};
use crate::math::{self, TWO_PI};
use crate::model::{component_terms, induce_partition, mixture_objective, BalanceProfile, HardPartition, Objective, PointSet, SphericalMixture};
use crate::sampling::{approx_means_round, tuple_bits, SamplingConfig};
use crate::score::DistanceTable;
use crate::{rng_from_seed, Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Superset sampling for the means, grids for sizes, likelihood
    /// estimates and variances.
    Theorem1,
    /// Grids for weights and variances, sample-and-prune for the means.
    Theorem2,
    Cem,
    /// Weighted K-means: variances fixed to `1/(2β)`.
    Wkm,
    /// Weights fixed to `1/K`.
    Ucmle,
}

impl Algorithm {
    pub fn objective(self, beta: Option<f64>) -> Objective {
        match self {
            Algorithm::Wkm => Objective::Wkm {
                beta: beta.unwrap_or(f64::NAN),
            },
            Algorithm::Ucmle => Objective::Ucmle,
            _ => Objective::Cmle,
        }
    }
}

/// Caps and desk-scale overrides for the combinatorial stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Budgets {
    /// Subset means drawn from one multiset.
    pub max_subset_means: u128,
    /// Distinct mean tuples per pipeline (and candidates per search).
    pub max_mean_tuples: u128,
    /// Distinct parameter shapes, and grid combinations scanned to find them.
    pub max_shapes: u128,
    /// (mean tuple, shape) pairs scored.
    pub max_candidates: u128,
    /// Overrides for the sampling sizes; the defaults follow the sampling
    /// guarantee and are far beyond desk scale for small `εδ`.
    pub sample_size: Option<usize>,
    pub subset_size: Option<usize>,
    pub repeats: Option<usize>,
    pub alpha: Option<f64>,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            max_subset_means: crate::sampling::DEFAULT_MAX_SUBSET_MEANS,
            max_mean_tuples: crate::sampling::DEFAULT_MAX_TUPLES,
            max_shapes: 100_000_000,
            max_candidates: 2_000_000_000,
            sample_size: None,
            subset_size: None,
            repeats: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub balance: Option<BalanceProfile>,
    pub algorithm: Algorithm,
    /// Weighted K-means parameter; variances are `1/(2β)`.
    pub beta: Option<f64>,
    pub budgets: Budgets,
    pub seed: u64,
    /// Finish with CEM started from the result (CMLE objectives only).
    pub polish: bool,
    /// Random restarts for [`Algorithm::Cem`].
    pub cem_restarts: usize,
}

impl SolveRequest {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        Self {
            k,
            epsilon: 0.3,
            delta: 0.25,
            balance: None,
            algorithm,
            beta: None,
            budgets: Budgets::default(),
            seed: 0,
            polish: false,
            cem_restarts: 10,
        }
    }

    pub fn objective(&self) -> Objective {
        self.algorithm.objective(self.beta)
    }

    pub fn validate(&self, x: &PointSet) -> Result<()> {
        if self.k == 0 || self.k > x.len() {
            return Err(Error::domain("K must lie in 1..=N"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1)"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain("delta must lie in (0, 1)"));
        }
        if self.algorithm == Algorithm::Wkm && !self.beta.is_some_and(|b| b > 0.0 && b.is_finite()) {
            return Err(Error::domain("weighted K-means needs beta > 0"));
        }
        if let Some(a) = self.budgets.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::domain("alpha must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    fn balance(&self) -> Result<&BalanceProfile> {
        let prof = self
            .balance
            .as_ref()
            .ok_or_else(|| Error::domain("this algorithm needs the balance constant f"))?;
        if prof.f < self.k as f64 {
            return Err(Error::domain("no f-balanced partition exists when f < K"));
        }
        Ok(prof)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageCount {
    pub stage: &'static str,
    pub size: u128,
}

/// What a solver enumerated and how.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Certificate {
    /// Farthest-first bound coefficient, when computed.
    pub gamma: Option<f64>,
    /// Balance constant `g` used for the variance candidates.
    pub g: Option<f64>,
    /// Grid ratio actually used by the pipeline.
    pub epsilon_internal: Option<f64>,
    pub alpha: Option<f64>,
    pub sample_size: Option<usize>,
    pub subset_size: Option<usize>,
    pub repeats: usize,
    /// Sizes of the enumeration stages whose product is `candidate_count`.
    pub stages: Vec<StageCount>,
    pub candidate_count: u128,
    /// Weight/variance combinations before removing coinciding ones.
    pub shape_count: u128,
    pub distinct_shapes: usize,
    pub mean_tuples: usize,
    /// (mean tuple, shape) pairs actually scored.
    pub evaluations: u128,
    /// Best cost found after each repeat (cumulative).
    pub repeat_best: Vec<f64>,
    pub cem_iterations: Option<usize>,
    pub polished: bool,
}

impl Certificate {
    fn set_stages(&mut self, stages: Vec<StageCount>) {
        self.candidate_count = stages.iter().fold(1u128, |acc, s| acc.saturating_mul(s.size));
        self.stages = stages;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub mixture: SphericalMixture,
    /// Partition induced by `mixture`.
    pub partition: HardPartition,
    /// Objective of `mixture` with free reassignment.
    pub cost: f64,
    pub objective: Objective,
    pub certificate: Certificate,
}

fn stage(stage: &'static str, size: u128) -> StageCount {
    StageCount { stage, size }
}

fn pow_count(base: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// Generator for repeat `r`: the request seed on its own stream, so every
/// shape of one repeat sees the same random choices.
fn repeat_rng(seed: u64, r: usize) -> Rng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(r as u64 + 1);
    rng
}

fn shape_terms(objective: Objective, dim: usize, w: f64, var: f64) -> (f64, f64) {
    match objective {
        Objective::Wkm { beta } => (-math::ln(w), beta),
        _ => component_terms(dim, w, var),
    }
}

/// Flat storage of `(weight, variance)` per component for many shapes.
struct Shapes {
    k: usize,
    dim: usize,
    objective: Objective,
    params: Vec<(f64, f64)>,
    terms: Vec<(f64, f64)>,
}

impl Shapes {
    fn new(k: usize, dim: usize, objective: Objective) -> Self {
        Self {
            k,
            dim,
            objective,
            params: Vec::new(),
            terms: Vec::new(),
        }
    }

    fn push(&mut self, weights: &[f64], variances: &[f64]) {
        for (&w, &v) in weights.iter().zip(variances) {
            self.params.push((w, v));
            self.terms.push(shape_terms(self.objective, self.dim, w, v));
        }
    }

    fn len(&self) -> usize {
        self.params.len() / self.k
    }

    fn terms(&self, i: usize) -> &[(f64, f64)] {
        &self.terms[i * self.k..(i + 1) * self.k]
    }

    fn fixed(&self, i: usize) -> Result<FixedShape> {
        let p = &self.params[i * self.k..(i + 1) * self.k];
        FixedShape::new(p.iter().map(|c| c.1).collect(), p.iter().map(|c| c.0).collect())
    }

    fn mixture(&self, i: usize, means: &[Vec<f64>]) -> Result<SphericalMixture> {
        self.fixed(i)?.mixture(means)
    }
}

/// Running minimum over scored (mean tuple, shape) pairs; the first pair
/// in scan order wins ties.
struct Scan {
    cost: f64,
    best: Option<(Vec<Vec<f64>>, usize)>,
    evaluations: u128,
    limit: u128,
}

impl Scan {
    fn new(limit: u128) -> Self {
        Self {
            cost: f64::INFINITY,
            best: None,
            evaluations: 0,
            limit,
        }
    }

    fn score(&mut self, x: &PointSet, means: &[Vec<f64>], shapes: &Shapes, which: core::ops::Range<usize>) -> Result<()> {
        let count = which.len() as u128;
        if self.evaluations + count > self.limit {
            return Err(Error::BudgetExceeded {
                stage: "candidate evaluation",
                required: self.evaluations + count,
                limit: self.limit,
            });
        }
        self.evaluations += count;
        let table = DistanceTable::new(x, means);
        for s in which {
            if let Some(c) = table.score(shapes.terms(s), self.cost) {
                if c < self.cost {
                    self.cost = c;
                    self.best = Some((means.to_vec(), s));
                }
            }
        }
        Ok(())
    }
}

/// Exponents `i` with `value = (N/f)·r^i` for each size-grid value.
fn size_exponents(values: &[f64], n: usize, f: f64, ratio: f64) -> Vec<i32> {
    values
        .iter()
        .map(|v| libm::round(math::ln(v * f / n as f64) / math::ln(ratio)) as i32)
        .collect()
}

/// Distinct tuples `(i_k − min_l i_l)_k` over all size-exponent tuples, in
/// lexicographic order, each with its weights `r^{d_k}/Σ r^{d_l}`.
fn weight_tuples(exps: &[i32], k: usize, ratio: f64, limit: u128) -> Result<Vec<Vec<f64>>> {
    let scan = pow_count(exps.len(), k);
    if scan > limit {
        return Err(Error::BudgetExceeded {
            stage: "size tuples",
            required: scan,
            limit,
        });
    }
    let mut keys = BTreeSet::new();
    let mut idx = vec![0usize; k];
    loop {
        let tuple: Vec<i32> = idx.iter().map(|&i| exps[i]).collect();
        let lo = *tuple.iter().min().expect("K >= 1");
        keys.insert(tuple.iter().map(|e| e - lo).collect::<Vec<i32>>());
        if !advance(&mut idx, exps.len()) {
            break;
        }
    }
    Ok(keys.into_iter().map(|d| weights_from_diffs(&d, ratio)).collect())
}

fn weights_from_diffs(d: &[i32], ratio: f64) -> Vec<f64> {
    let raw: Vec<f64> = d.iter().map(|&e| math::powi(ratio, e)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Odometer over `0..base` in every position, last position fastest.
fn advance(idx: &mut [usize], base: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

fn sampling_overrides(b: &Budgets, sample: &mut usize, subset: &mut usize) {
    if let Some(s) = b.sample_size {
        *sample = s;
    }
    if let Some(m) = b.subset_size {
        *subset = m;
    }
}

fn finish(x: &PointSet, req: &SolveRequest, mut mixture: SphericalMixture, mut cert: Certificate) -> Result<SolveResult> {
    let objective = req.objective();
    let mut cost = mixture_objective(x, &mixture, objective);
    if req.polish && objective == Objective::Cmle && x.len() >= 2 * req.k {
        let cfg = CemConfig {
            init: CemInit::Mixture(mixture.clone()),
            degeneracy: DegeneracyPolicy::Reassign,
            seed: req.seed,
            ..CemConfig::default()
        };
        // A failed or worse polish leaves the pipeline's answer in place.
        if let Ok(out) = cem_run(x, req.k, &cfg) {
            if out.cost < cost {
                mixture = out.mixture;
                cost = out.cost;
            }
        }
        cert.polished = true;
    }
    Ok(SolveResult {
        partition: induce_partition(x, &mixture),
        mixture,
        cost,
        objective,
        certificate: cert,
    })
}

/// Sampling-and-grid pipeline for CMLE on f-balanced instances.
///
/// With `ε' = (1+ε)^{1/4} − 1`, the means come from superset sampling and
/// the weights, likelihood estimates and variances from grids of ratio
/// `1+ε'`; `g` defaults to `Γ·f`.
pub fn solve_theorem1(x: &PointSet, req: &SolveRequest) -> Result<SolveResult> {
    req.validate(x)?;
    let prof = req.balance()?;
    let (n, d, k) = (x.len(), x.dim(), req.k);
    let eps = libm::pow(1.0 + req.epsilon, 0.25) - 1.0;
    let ratio = 1.0 + eps;

    let cert_g = gonzalez(x, k)?;
    let gamma = cert_g
        .gamma
        .ok_or_else(|| Error::domain("every point is a center: the cost bound is undefined"))?;
    // Γ < 1 only happens on instances that are not well defined.
    let gamma_grid = gamma.max(1.0);
    let g = prof.g.unwrap_or(gamma_grid * prof.f);
    let sizes = size_grid(n, prof, eps)?;
    let nll = nll_grid(n, d, gamma_grid, eps)?;
    let j_lo = variance_exponent_floor(g, eps);
    let size_exps = size_exponents(&sizes.values, n, prof.f, ratio);
    let n_nll = nll.values.len() as i32;

    // Distinct shapes keyed by (size-exponent differences, e_k − i_k) where
    // e_k = i + j_k ranges over [1 + j_lo, n_nll] and some likelihood
    // exponent i ∈ [1, n_nll] must satisfy e_k − i ∈ [j_lo, 0] for all k.
    let e_span = (n_nll - j_lo) as usize;
    let scan = pow_count(size_exps.len(), k).saturating_mul(pow_count(e_span, k));
    if scan > req.budgets.max_shapes {
        return Err(Error::BudgetExceeded {
            stage: "variance and size tuples",
            required: scan,
            limit: req.budgets.max_shapes,
        });
    }
    let mut keys: BTreeSet<Vec<i32>> = BTreeSet::new();
    let mut si = vec![0usize; k];
    loop {
        let i_tuple: Vec<i32> = si.iter().map(|&i| size_exps[i]).collect();
        let i_lo = *i_tuple.iter().min().expect("K >= 1");
        let mut ei = vec![0usize; k];
        loop {
            let e: Vec<i32> = ei.iter().map(|&o| 1 + j_lo + o as i32).collect();
            let e_max = *e.iter().max().expect("K >= 1");
            let e_min = *e.iter().min().expect("K >= 1");
            if e_max.max(1) <= (e_min - j_lo).min(n_nll) {
                let mut key: Vec<i32> = i_tuple.iter().map(|i| i - i_lo).collect();
                key.extend(e.iter().zip(&i_tuple).map(|(e, i)| e - i));
                keys.insert(key);
            }
            if !advance(&mut ei, e_span) {
                break;
            }
        }
        if !advance(&mut si, size_exps.len()) {
            break;
        }
    }
    let objective = Objective::Cmle;
    let mut shapes = Shapes::new(k, d, objective);
    for key in &keys {
        let weights = weights_from_diffs(&key[..k], ratio);
        let variances: Vec<f64> = key[k..]
            .iter()
            .map(|&t| math::exp((1.0 + eps) * prof.f * math::powi(ratio, t) - 1.0) / TWO_PI)
            .collect();
        if variances.iter().all(|v| v.is_finite()) {
            shapes.push(&weights, &variances);
        }
    }

    let alpha = req.budgets.alpha.unwrap_or(1.0 / prof.f);
    if alpha > (1.0 / prof.f) * (1.0 + 1e-12) {
        return Err(Error::domain("alpha must not exceed 1/f"));
    }
    let mut scfg = SamplingConfig::new(alpha, eps, req.delta, k)?;
    sampling_overrides(&req.budgets, &mut scfg.sample_size, &mut scfg.subset_size);
    if let Some(r) = req.budgets.repeats {
        scfg.repeats = r;
    }
    scfg.max_subset_means = req.budgets.max_subset_means;
    scfg.max_tuples = req.budgets.max_mean_tuples;
    scfg.validate()?;

    let mut rng = rng_from_seed(req.seed);
    let mut seen = BTreeSet::new();
    let mut scan = Scan::new(req.budgets.max_candidates);
    let mut repeat_best = Vec::with_capacity(scfg.repeats);
    for _ in 0..scfg.repeats {
        let round = approx_means_round(x, k, &scfg, &mut rng)?;
        for t in round.tuples {
            if !seen.insert(tuple_bits(&t)) {
                continue;
            }
            if seen.len() as u128 > scfg.max_tuples {
                return Err(Error::BudgetExceeded {
                    stage: "mean tuple product",
                    required: seen.len() as u128,
                    limit: scfg.max_tuples,
                });
            }
            scan.score(x, &t, &shapes, 0..shapes.len())?;
        }
        repeat_best.push(scan.cost);
    }
    let (means, s) = scan.best.clone().ok_or_else(|| Error::domain("no finite candidate"))?;
    let mixture = shapes.mixture(s, &means)?;

    let j_count = (1 - j_lo) as usize;
    let mut cert = Certificate {
        gamma: Some(gamma),
        g: Some(g),
        epsilon_internal: Some(eps),
        alpha: Some(alpha),
        sample_size: Some(scfg.sample_size),
        subset_size: Some(scfg.subset_size),
        repeats: scfg.repeats,
        shape_count: pow_count(sizes.values.len(), k)
            .saturating_mul(nll.values.len() as u128)
            .saturating_mul(pow_count(j_count, k)),
        distinct_shapes: shapes.len(),
        mean_tuples: seen.len(),
        evaluations: scan.evaluations,
        repeat_best,
        ..Certificate::default()
    };
    cert.set_stages(vec![
        stage("mean tuples", seen.len() as u128),
        stage("size tuples", pow_count(sizes.values.len(), k)),
        stage("likelihood estimates", nll.values.len() as u128),
        stage("variance tuples", pow_count(j_count, k)),
    ]);
    finish(x, req, mixture, cert)
}

/// Runs the sample-and-prune search for every shape and keeps the best.
///
/// For `K ≤ 2` the candidate means do not depend on the shape, so they are
/// generated once per repeat and scored against every shape.
fn abs_pipeline(x: &PointSet, req: &SolveRequest, shapes: &Shapes, mut cert: Certificate) -> Result<SolveResult> {
    let k = req.k;
    let eps = req.epsilon / 3.0;
    let k2 = (k * k) as f64;
    let alpha = req.budgets.alpha.unwrap_or(req.epsilon / (16.0 * k2));
    let mut cfg = AbsConfig::with_alpha(alpha, eps, req.delta)?;
    sampling_overrides(&req.budgets, &mut cfg.sample_size, &mut cfg.subset_size);
    cfg.max_subset_means = req.budgets.max_subset_means;
    cfg.max_candidates = usize::try_from(req.budgets.max_mean_tuples).unwrap_or(usize::MAX);
    cfg.validate()?;
    let repeats = req
        .budgets
        .repeats
        .unwrap_or_else(|| (math::ceil(math::ln(1.0 / req.delta)) as usize).max(1));
    if shapes.len() == 0 {
        return Err(Error::domain("no admissible shape"));
    }

    let mut scan = Scan::new(req.budgets.max_candidates);
    let mut repeat_best = Vec::with_capacity(repeats);
    let mut distinct = 0usize;
    if candidates_shape_independent(k) {
        let shape = shapes.fixed(0)?;
        let mut seen = BTreeSet::new();
        for r in 0..repeats {
            let cands = abs_candidates(x, k, &shape, &cfg, &mut repeat_rng(req.seed, r))?;
            for t in cands {
                if seen.insert(tuple_bits(&t)) {
                    scan.score(x, &t, shapes, 0..shapes.len())?;
                }
            }
            repeat_best.push(scan.cost);
        }
        distinct = seen.len();
    } else {
        let mut per_repeat = vec![f64::INFINITY; repeats];
        for s in 0..shapes.len() {
            let shape = shapes.fixed(s)?;
            let mut seen = BTreeSet::new();
            for (r, best) in per_repeat.iter_mut().enumerate() {
                let cands = abs_candidates(x, k, &shape, &cfg, &mut repeat_rng(req.seed, r))?;
                for t in cands {
                    if seen.insert(tuple_bits(&t)) {
                        scan.score(x, &t, shapes, s..s + 1)?;
                    }
                }
                *best = best.min(scan.cost);
            }
            distinct += seen.len();
        }
        // Cumulative over repeats, matching the shape-independent case.
        let mut acc = f64::INFINITY;
        for b in per_repeat {
            acc = acc.min(b);
            repeat_best.push(acc);
        }
    }
    let (means, s) = scan.best.clone().ok_or_else(|| Error::domain("no finite candidate"))?;
    let mixture = shapes.mixture(s, &means)?;
    cert.epsilon_internal = Some(eps);
    cert.alpha = Some(alpha);
    cert.sample_size = Some(cfg.sample_size);
    cert.subset_size = Some(cfg.subset_size);
    cert.repeats = repeats;
    cert.distinct_shapes = shapes.len();
    cert.mean_tuples = distinct;
    cert.evaluations = scan.evaluations;
    cert.repeat_best = repeat_best;
    let mut stages = core::mem::take(&mut cert.stages);
    stages.push(stage("mean candidates", distinct as u128));
    cert.set_stages(stages);
    finish(x, req, mixture, cert)
}

fn check_shape_count(count: u128, b: &Budgets) -> Result<()> {
    if count > b.max_shapes {
        return Err(Error::BudgetExceeded {
            stage: "variance and size tuples",
            required: count,
            limit: b.max_shapes,
        });
    }
    Ok(())
}

/// Sample-and-prune pipeline for CMLE with well-defined target solutions:
/// weights from the size grid and variances from the additive log-variance
/// grid, both with ratio `ε/3`.
pub fn solve_theorem2(x: &PointSet, req: &SolveRequest) -> Result<SolveResult> {
    req.validate(x)?;
    let prof = req.balance()?;
    let (n, d, k) = (x.len(), x.dim(), req.k);
    let eps = req.epsilon / 3.0;
    let sizes = size_grid(n, prof, eps)?;
    let vgrid = variance_grid_welldefined(x.max_sq_dist(), eps)?;
    let nominal = pow_count(sizes.values.len(), k).saturating_mul(pow_count(vgrid.values.len(), k));
    check_shape_count(nominal, &req.budgets)?;
    let weights = weight_tuples(&size_exponents(&sizes.values, n, prof.f, 1.0 + eps), k, 1.0 + eps, req.budgets.max_shapes)?;
    check_shape_count((weights.len() as u128).saturating_mul(pow_count(vgrid.values.len(), k)), &req.budgets)?;
    let mut shapes = Shapes::new(k, d, Objective::Cmle);
    for w in &weights {
        let mut vi = vec![0usize; k];
        loop {
            let vars: Vec<f64> = vi.iter().map(|&i| vgrid.values[i]).collect();
            shapes.push(w, &vars);
            if !advance(&mut vi, vgrid.values.len()) {
                break;
            }
        }
    }
    let mut cert = Certificate {
        shape_count: nominal,
        ..Certificate::default()
    };
    cert.stages = vec![
        stage("variance tuples", pow_count(vgrid.values.len(), k)),
        stage("size tuples", pow_count(sizes.values.len(), k)),
    ];
    abs_pipeline(x, req, &shapes, cert)
}

/// Weighted K-means: variances fixed to `1/(2β)`, weights from the size
/// grid, means from sample-and-prune; scored by `β·Σ‖x−μ‖² − Σ ln w`.
pub fn solve_wkm(x: &PointSet, req: &SolveRequest) -> Result<SolveResult> {
    req.validate(x)?;
    if req.algorithm != Algorithm::Wkm {
        return Err(Error::domain("solve_wkm needs the wkm algorithm"));
    }
    let prof = req.balance()?;
    let beta = req.beta.expect("validated");
    let (n, d, k) = (x.len(), x.dim(), req.k);
    let eps = req.epsilon / 3.0;
    let sizes = size_grid(n, prof, eps)?;
    let nominal = pow_count(sizes.values.len(), k);
    check_shape_count(nominal, &req.budgets)?;
    let weights = weight_tuples(&size_exponents(&sizes.values, n, prof.f, 1.0 + eps), k, 1.0 + eps, req.budgets.max_shapes)?;
    let mut shapes = Shapes::new(k, d, Objective::Wkm { beta });
    let vars = vec![0.5 / beta; k];
    for w in &weights {
        shapes.push(w, &vars);
    }
    let mut cert = Certificate {
        shape_count: nominal,
        ..Certificate::default()
    };
    cert.stages = vec![stage("size tuples", nominal)];
    abs_pipeline(x, req, &shapes, cert)
}

/// Uniform weights `1/K`, variances from the additive log-variance grid,
/// means from sample-and-prune.
pub fn solve_ucmle(x: &PointSet, req: &SolveRequest) -> Result<SolveResult> {
    req.validate(x)?;
    if req.algorithm != Algorithm::Ucmle {
        return Err(Error::domain("solve_ucmle needs the ucmle algorithm"));
    }
    let (d, k) = (x.dim(), req.k);
    let eps = req.epsilon / 3.0;
    let vgrid = variance_grid_welldefined(x.max_sq_dist(), eps)?;
    let nominal = pow_count(vgrid.values.len(), k);
    check_shape_count(nominal, &req.budgets)?;
    let mut shapes = Shapes::new(k, d, Objective::Ucmle);
    let w = vec![1.0 / k as f64; k];
    let mut vi = vec![0usize; k];
    loop {
        let vars: Vec<f64> = vi.iter().map(|&i| vgrid.values[i]).collect();
        shapes.push(&w, &vars);
        if !advance(&mut vi, vgrid.values.len()) {
            break;
        }
    }
    let mut cert = Certificate {
        shape_count: nominal,
        ..Certificate::default()
    };
    cert.stages = vec![stage("variance tuples", nominal)];
    abs_pipeline(x, req, &shapes, cert)
}

/// Classification-EM from `cem_restarts` random partitions.
pub fn solve_cem(x: &PointSet, req: &SolveRequest) -> Result<SolveResult> {
    req.validate(x)?;
    let cfg = CemConfig {
        seed: req.seed,
        ..CemConfig::default()
    };
    let restarts = req.cem_restarts.max(1);
    let out = cem_restarts(x, req.k, &cfg, restarts)?;
    let cert = Certificate {
        repeats: restarts,
        cem_iterations: Some(out.trace.iterations),
        repeat_best: vec![out.cost],
        ..Certificate::default()
    };
    finish(x, req, out.mixture, cert)
}

pub fn solve(x: &PointSet, req: &SolveRequest) -> Result<SolveResult> {
    match req.algorithm {
        Algorithm::Theorem1 => solve_theorem1(x, req),
        Algorithm::Theorem2 => solve_theorem2(x, req),
        Algorithm::Cem => solve_cem(x, req),
        Algorithm::Wkm => solve_wkm(x, req),
        Algorithm::Ucmle => solve_ucmle(x, req),
    }
}
