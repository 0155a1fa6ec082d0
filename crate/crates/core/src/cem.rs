//! Classification-EM: alternate the M-step ([`fit_params`]) and the E-step
//! ([`induce_partition`]) until the labels stop changing.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::model::{fit_params, induce_partition, model_nll, sq_dist, HardPartition, PointSet, SphericalMixture};
use crate::{rng_from_seed, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum CemInit {
    /// Shuffle the points with the seeded generator and deal them
    /// round-robin into the K clusters.
    RandomPartition,
    Partition(HardPartition),
    /// Start from the partition this mixture induces.
    Mixture(SphericalMixture),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneracyPolicy {
    /// Fail with [`Error::Degeneracy`].
    Abort,
    /// Move the point farthest from its own center into the deficient
    /// cluster and refit.
    Reassign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemConfig {
    pub max_iters: usize,
    /// Stop when the cost decreases by less than `rel_tol·|cost|`.
    pub rel_tol: f64,
    pub init: CemInit,
    pub degeneracy: DegeneracyPolicy,
    pub seed: u64,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 0.0,
            init: CemInit::RandomPartition,
            degeneracy: DegeneracyPolicy::Reassign,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
    Degeneracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemTrace {
    /// `model_nll` of the mixture fitted in each round.
    pub costs: Vec<f64>,
    pub iterations: usize,
    pub terminated_by: Termination,
    /// Rounds (0-based) whose M-step ran on a repaired partition; the cost
    /// of such a round may exceed the previous one.
    pub repairs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemOutcome {
    pub mixture: SphericalMixture,
    /// Partition induced by `mixture`.
    pub partition: HardPartition,
    pub cost: f64,
    pub trace: CemTrace,
}

/// First cluster with fewer than two points or zero spread, if any.
fn deficient_cluster(x: &PointSet, part: &HardPartition) -> Option<usize> {
    part.clusters().iter().position(|m| {
        m.len() < 2 || {
            let first = x.point(m[0]);
            m.iter().all(|&i| x.point(i) == first)
        }
    })
}

/// Repairs `labels` in place until every cluster has two distinct points.
/// Returns `false` when no donor point is left.
fn repair(x: &PointSet, labels: &mut [usize], k: usize, centers: &[Vec<f64>]) -> bool {
    // Every move fills one slot of one cluster, so N moves always suffice
    // when a repair is possible at all.
    for _ in 0..=x.len() {
        let part = HardPartition::new(labels.to_vec(), k).expect("labels stay in range");
        let Some(target) = deficient_cluster(x, &part) else {
            return true;
        };
        let sizes = part.sizes();
        let target_first = part.clusters()[target].first().map(|&i| x.point(i).to_vec());
        let donor = (0..x.len())
            .filter(|&i| labels[i] != target && sizes[labels[i]] > 2)
            .filter(|&i| target_first.as_deref() != Some(x.point(i)))
            .map(|i| (sq_dist(x.point(i), &centers[labels[i]]), i))
            .fold(None::<(f64, usize)>, |best, c| match best {
                Some(b) if b.0 >= c.0 => Some(b),
                _ => Some(c),
            });
        match donor {
            Some((_, i)) => labels[i] = target,
            None => return false,
        }
    }
    false
}

fn initial_partition(x: &PointSet, k: usize, cfg: &CemConfig) -> Result<HardPartition> {
    match &cfg.init {
        CemInit::RandomPartition => {
            let mut order: Vec<usize> = (0..x.len()).collect();
            order.shuffle(&mut rng_from_seed(cfg.seed));
            let mut labels = vec![0; x.len()];
            for (slot, &i) in order.iter().enumerate() {
                labels[i] = slot % k;
            }
            HardPartition::new(labels, k)
        }
        CemInit::Partition(p) => {
            if p.k() != k || p.len() != x.len() {
                return Err(Error::domain("initial partition does not match the instance and K"));
            }
            Ok(p.clone())
        }
        CemInit::Mixture(m) => {
            if m.k() != k || m.dim() != x.dim() {
                return Err(Error::domain("initial mixture does not match the instance and K"));
            }
            Ok(induce_partition(x, m))
        }
    }
}

pub fn cem_run(x: &PointSet, k: usize, cfg: &CemConfig) -> Result<CemOutcome> {
    if k == 0 || x.len() < 2 * k {
        return Err(Error::domain("CEM needs K >= 1 and at least 2K points"));
    }
    if cfg.max_iters == 0 || !(cfg.rel_tol >= 0.0) {
        return Err(Error::domain("CEM needs max_iters >= 1 and rel_tol >= 0"));
    }
    let mut part = initial_partition(x, k, cfg)?;
    let mut costs = Vec::new();
    let mut repairs = Vec::new();
    let mut last: Option<(SphericalMixture, HardPartition)> = None;

    for round in 0..cfg.max_iters {
        if let Some(cluster) = deficient_cluster(x, &part) {
            let fixed = match (cfg.degeneracy, &last) {
                (DegeneracyPolicy::Reassign, prev) => {
                    let centers: Vec<Vec<f64>> = match prev {
                        Some((m, _)) => m.components().iter().map(|c| c.mean().to_vec()).collect(),
                        None => part
                            .clusters()
                            .iter()
                            .map(|m| crate::model::mean(x.select(m)).unwrap_or_else(|_| vec![0.0; x.dim()]))
                            .collect(),
                    };
                    let mut labels = part.labels().to_vec();
                    repair(x, &mut labels, k, &centers).then(|| HardPartition::new(labels, k)).transpose()?
                }
                (DegeneracyPolicy::Abort, _) => None,
            };
            match fixed {
                Some(p) => {
                    part = p;
                    repairs.push(round);
                }
                None => {
                    return Err(Error::Degeneracy {
                        iteration: round,
                        cluster,
                    })
                }
            }
        }
        let theta = fit_params(x, &part)?;
        let next = induce_partition(x, &theta);
        let cost = model_nll(x, &theta);
        let stable = next == part;
        let small_step = costs
            .last()
            .is_some_and(|&prev: &f64| prev - cost < cfg.rel_tol * crate::math::abs(cost));
        costs.push(cost);
        if stable || small_step {
            return Ok(CemOutcome {
                mixture: theta,
                partition: next,
                cost,
                trace: CemTrace {
                    iterations: round + 1,
                    costs,
                    terminated_by: Termination::Converged,
                    repairs,
                },
            });
        }
        part = next.clone();
        last = Some((theta, next));
    }
    let (mixture, partition) = last.expect("at least one round ran");
    let cost = *costs.last().expect("at least one round ran");
    Ok(CemOutcome {
        mixture,
        partition,
        cost,
        trace: CemTrace {
            iterations: cfg.max_iters,
            costs,
            terminated_by: Termination::MaxIters,
            repairs,
        },
    })
}

/// Runs `restarts` independent random starts with seeds `seed + i` and keeps
/// the cheapest, the earliest restart on ties.
pub fn cem_restarts(x: &PointSet, k: usize, cfg: &CemConfig, restarts: usize) -> Result<CemOutcome> {
    let mut best: Option<CemOutcome> = None;
    for i in 0..restarts.max(1) {
        let run = CemConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        let out = cem_run(x, k, &run)?;
        if best.as_ref().is_none_or(|b| out.cost < b.cost) {
            best = Some(out);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{opt_single, partition_nll};

    fn four() -> PointSet {
        PointSet::new(vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]]).unwrap()
    }

    #[test]
    fn separated_partition_is_a_fixed_point() {
        let x = four();
        let cfg = CemConfig {
            init: CemInit::Partition(HardPartition::new(vec![0, 0, 1, 1], 2).unwrap()),
            ..CemConfig::default()
        };
        let out = cem_run(&x, 2, &cfg).unwrap();
        assert_eq!(out.trace.iterations, 1);
        assert_eq!(out.trace.terminated_by, Termination::Converged);
        assert!((out.cost - 8.448343).abs() < 1e-6);
        let again = cem_run(
            &x,
            2,
            &CemConfig {
                init: CemInit::Mixture(out.mixture.clone()),
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(again.partition, out.partition);
        assert_eq!(again.mixture, out.mixture);
    }

    #[test]
    fn single_cluster_is_one_m_step() {
        let x = four();
        let out = cem_run(&x, 1, &CemConfig::default()).unwrap();
        assert_eq!(out.trace.iterations, 1);
        let opt = opt_single(x.iter()).unwrap().cost;
        assert!((out.cost - opt).abs() < 1e-12);
    }

    #[test]
    fn random_start_deals_round_robin() {
        let x = PointSet::new((0..9).map(|i| vec![3.0 * i as f64]).collect()).unwrap();
        let p = initial_partition(&x, 3, &CemConfig::default()).unwrap();
        assert_eq!(p.sizes(), vec![3, 3, 3]);
    }

    #[test]
    fn abort_and_reassign_policies() {
        // The crossed start pulls {10, 12} apart; with the far outlier the
        // E-step leaves a cluster with a single point.
        let x = PointSet::new(vec![vec![0.0], vec![2.0], vec![4.0], vec![6.0], vec![100.0]]).unwrap();
        let theta = SphericalMixture::from_parts(&[0.8, 0.2], vec![vec![3.0], vec![100.0]], &[5.0, 5.0]).unwrap();
        let base = CemConfig {
            init: CemInit::Mixture(theta),
            ..CemConfig::default()
        };
        let err = cem_run(
            &x,
            2,
            &CemConfig {
                degeneracy: DegeneracyPolicy::Abort,
                ..base.clone()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Degeneracy { iteration: 0, cluster: 1 }));
        let out = cem_run(&x, 2, &base).unwrap();
        assert_eq!(out.trace.repairs.first(), Some(&0));
        assert!(out.cost.is_finite());
    }

    #[test]
    fn restarts_keep_the_cheapest() {
        let x = PointSet::new(vec![vec![0.0], vec![2.0], vec![4.0], vec![20.0], vec![22.0], vec![25.0]]).unwrap();
        let cfg = CemConfig::default();
        let best = cem_restarts(&x, 2, &cfg, 5).unwrap();
        for i in 0..5 {
            let run = cem_run(&x, 2, &CemConfig { seed: i, ..cfg.clone() }).unwrap();
            assert!(best.cost <= run.cost);
        }
        let opt = partition_nll(&x, &HardPartition::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap()).unwrap();
        assert!(best.cost >= opt - 1e-9);
    }

    #[test]
    fn rejects_too_few_points() {
        assert!(cem_run(&four(), 3, &CemConfig::default()).is_err());
    }
}
