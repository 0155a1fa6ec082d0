//! Exhaustive solvers for small instances.

use crate::model::{fit_for_objective, partition_objective, sq_dist, HardPartition, Objective, PointSet, SphericalMixture};
use crate::partitions::{count_partitions, SetPartitions};
use crate::{math, Error, Result};

pub const DEFAULT_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_partition: HardPartition,
    pub best_mixture: SphericalMixture,
    pub opt: f64,
    /// Partitions with every cluster of size at least two.
    pub partitions_scanned: u128,
}

fn check_cap(n: usize, k: usize, min_block: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::OracleCap {
            n,
            cap,
            partitions: count_partitions(n, k, min_block),
        });
    }
    Ok(())
}

/// Minimises `objective` over all partitions of `x` into exactly `k`
/// unlabeled clusters of at least two points. Partitions containing a
/// cluster of identical points are skipped for CMLE and UCMLE.
///
/// Clusters are numbered by their smallest point index.
pub fn exact_solve(x: &PointSet, k: usize, objective: Objective, cap: usize) -> Result<OracleResult> {
    if k == 0 || 2 * k > x.len() {
        return Err(Error::domain("the oracle needs 1 <= K <= N/2"));
    }
    check_cap(x.len(), k, 2, cap)?;
    if let Objective::Wkm { beta } = objective {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain("beta must be positive"));
        }
    }
    let mut parts = SetPartitions::new(x.len(), k, 2);
    let mut scanned = 0u128;
    let mut best: Option<(f64, HardPartition)> = None;
    while let Some(labels) = parts.next_labels() {
        scanned += 1;
        let part = HardPartition::new(labels.to_vec(), k)?;
        let value = match partition_objective(x, &part, objective) {
            Ok(v) => v,
            Err(Error::DegenerateCluster { .. }) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, part));
        }
    }
    let (opt, best_partition) =
        best.ok_or_else(|| Error::domain("every partition has a cluster of identical points"))?;
    Ok(OracleResult {
        best_mixture: fit_for_objective(x, &best_partition, objective)?,
        best_partition,
        opt,
        partitions_scanned: scanned,
    })
}

/// Smallest achievable maximum cluster diameter over all partitions into
/// `k` non-empty clusters.
pub fn exact_opt_diam(x: &PointSet, k: usize, cap: usize) -> Result<f64> {
    if k == 0 || k > x.len() {
        return Err(Error::domain("OPT_diam needs 1 <= K <= N"));
    }
    check_cap(x.len(), k, 1, cap)?;
    let n = x.len();
    let mut d2 = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = sq_dist(x.point(i), x.point(j));
            d2[i * n + j] = d;
            d2[j * n + i] = d;
        }
    }
    let mut parts = SetPartitions::new(n, k, 1);
    let mut best = f64::INFINITY;
    while let Some(labels) = parts.next_labels() {
        let mut worst: f64 = 0.0;
        'scan: for i in 0..n {
            for j in 0..i {
                if labels[i] == labels[j] {
                    worst = worst.max(d2[i * n + j]);
                    if worst >= best {
                        break 'scan;
                    }
                }
            }
        }
        best = best.min(worst);
    }
    Ok(math::sqrt(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::opt_single;
    use alloc::vec;

    fn four() -> PointSet {
        PointSet::new(vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]]).unwrap()
    }

    #[test]
    fn four_point_fixture() {
        let r = exact_solve(&four(), 2, Objective::Cmle, DEFAULT_CAP).unwrap();
        assert!((r.opt - 8.448343).abs() < 1e-6);
        assert_eq!(r.best_partition.labels(), &[0, 0, 1, 1]);
        assert_eq!(r.partitions_scanned, 3);
        let w = exact_solve(&four(), 2, Objective::Wkm { beta: 0.5 }, DEFAULT_CAP).unwrap();
        assert!((w.opt - 4.772589).abs() < 1e-6);
        let u = exact_solve(&four(), 2, Objective::Ucmle, DEFAULT_CAP).unwrap();
        assert!((u.opt - 8.448343).abs() < 1e-6);
    }

    #[test]
    fn single_cluster() {
        let r = exact_solve(&four(), 1, Objective::Cmle, DEFAULT_CAP).unwrap();
        assert_eq!(r.partitions_scanned, 1);
        assert!((r.opt - opt_single(four().iter()).unwrap().cost).abs() < 1e-12);
    }

    #[test]
    fn cap_and_feasibility() {
        let big = PointSet::new((0..15).map(|i| vec![2.0 * i as f64]).collect()).unwrap();
        let err = exact_solve(&big, 2, Objective::Cmle, DEFAULT_CAP).unwrap_err();
        assert!(err.is_budget());
        assert!(matches!(err, Error::OracleCap { n: 15, cap: 14, partitions } if partitions == count_partitions(15, 2, 2)));
        assert!(exact_solve(&four(), 3, Objective::Cmle, DEFAULT_CAP).is_err());
    }

    #[test]
    fn skips_identical_clusters() {
        let x = PointSet::new(vec![vec![0.0], vec![0.0], vec![5.0], vec![9.0]]).unwrap();
        let r = exact_solve(&x, 2, Objective::Cmle, DEFAULT_CAP).unwrap();
        assert_eq!(r.best_partition.labels(), &[0, 1, 0, 1]);
        assert_eq!(r.partitions_scanned, 3);
    }

    #[test]
    fn diameters() {
        assert_eq!(exact_opt_diam(&four(), 2, DEFAULT_CAP).unwrap(), 2.0);
        assert_eq!(exact_opt_diam(&four(), 4, DEFAULT_CAP).unwrap(), 0.0);
        assert_eq!(exact_opt_diam(&four(), 1, DEFAULT_CAP).unwrap(), 12.0);
    }
}
