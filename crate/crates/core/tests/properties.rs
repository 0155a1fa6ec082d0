use cmle_core::cem::{cem_run, CemConfig};
use cmle_core::model::{
    complete_nll, fit_params, induce_partition, mean, model_nll, opt_single, partition_nll, point_cost, sq_dist,
    validate_instance, variance,
};
use cmle_core::partitions::{count_partitions, SetPartitions};
use cmle_core::{HardPartition, PointSet};
use proptest::prelude::*;

fn points(max_n: usize, max_d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_n, 1..=max_d).prop_flat_map(|(n, d)| prop::collection::vec(prop::collection::vec(-20.0..20.0f64, d), n))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Labels `0..k` for `n` points with every cluster non-empty.
fn labels_for(n: usize, k: usize, seed: &[usize]) -> Vec<usize> {
    (0..n).map(|i| if i < k { i } else { seed[i % seed.len()] % k }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pairwise_and_bias_variance_identities(rows in points(20, 4), z in prop::collection::vec(-20.0..20.0f64, 4)) {
        let x = PointSet::new(rows).unwrap();
        let all: Vec<&[f64]> = x.iter().collect();
        let mu = mean(all.iter().copied()).unwrap();
        let n = x.len() as f64;
        let scatter: f64 = all.iter().map(|p| sq_dist(p, &mu)).sum();
        let pairs: f64 = all.iter().flat_map(|p| all.iter().map(move |q| sq_dist(p, q))).sum();
        prop_assert!(close(scatter, pairs / (2.0 * n), 1e-9));
        let z = &z[..x.dim()];
        let around_z: f64 = all.iter().map(|p| sq_dist(p, z)).sum();
        prop_assert!(close(around_z, scatter + n * sq_dist(z, &mu), 1e-9));
    }

    #[test]
    fn well_defined_subsets_respect_the_variance_floor(rows in points(10, 3), pick in prop::collection::vec(any::<bool>(), 10)) {
        let x = PointSet::new(rows).unwrap();
        prop_assume!(validate_instance(&x).well_defined);
        let idx: Vec<usize> = (0..x.len()).filter(|&i| pick[i]).collect();
        prop_assume!(idx.len() >= 2);
        let mu = mean(x.select(&idx)).unwrap();
        let v = variance(x.select(&idx), &mu).unwrap();
        prop_assert!(v >= 1.0 / (2.0 * std::f64::consts::PI) - 1e-12);
    }

    #[test]
    fn fitted_partition_cost_and_free_reassignment(rows in points(12, 3), k in 1usize..=3, seed in prop::collection::vec(0usize..3, 1..6)) {
        let x = PointSet::new(rows).unwrap();
        prop_assume!(x.len() >= 2 * k && validate_instance(&x).well_defined);
        // Pair points up so every cluster holds at least two of them.
        let labels: Vec<usize> = labels_for(x.len(), k, &seed).into_iter().enumerate()
            .map(|(i, l)| if i < 2 * k { i % k } else { l })
            .collect();
        let part = HardPartition::new(labels, k).unwrap();
        let theta = fit_params(&x, &part).unwrap();
        let complete = complete_nll(&x, &part, &theta).unwrap().total;
        // The M-step attains the best cost for its partition.
        prop_assert!(close(complete, partition_nll(&x, &part).unwrap(), 1e-9));
        let singles: f64 = part.clusters().iter().map(|c| opt_single(x.select(c)).unwrap().cost).sum();
        let weights: f64 = part.sizes().iter().map(|&s| -(s as f64) * (s as f64 / x.len() as f64).ln()).sum();
        prop_assert!(close(complete, singles + weights, 1e-9));
        // Free reassignment never costs more, and the E-step picks each point's argmin.
        prop_assert!(model_nll(&x, &theta) <= complete + 1e-9 * complete.abs().max(1.0));
        let induced = induce_partition(&x, &theta);
        for (i, p) in x.iter().enumerate() {
            let costs: Vec<f64> = theta.components().iter().map(|c| point_cost(p, c).unwrap()).collect();
            let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(costs[induced.labels()[i]] <= best + 1e-12 * best.abs().max(1.0));
        }
    }

    #[test]
    fn cem_costs_never_increase_outside_repairs(rows in points(16, 3), k in 1usize..=3, seed in any::<u64>()) {
        let x = PointSet::new(rows).unwrap();
        prop_assume!(x.len() >= 2 * k && validate_instance(&x).well_defined);
        let out = cem_run(&x, k, &CemConfig { seed, ..CemConfig::default() }).unwrap();
        let costs = &out.trace.costs;
        for t in 1..costs.len() {
            if !out.trace.repairs.contains(&t) {
                prop_assert!(costs[t] <= costs[t - 1] + 1e-9 * costs[t - 1].abs().max(1.0), "round {}: {:?}", t, costs);
            }
        }
        prop_assert!(close(out.cost, model_nll(&x, &out.mixture), 1e-12));
        prop_assert_eq!(&out.partition, &induce_partition(&x, &out.mixture));
    }

    #[test]
    fn enumeration_matches_the_partition_count(n in 1usize..=9, k in 1usize..=4, m in 1usize..=3) {
        let mut it = SetPartitions::new(n, k, m);
        let mut seen = 0u128;
        while let Some(labels) = it.next_labels() {
            let mut sizes = vec![0usize; k];
            for &l in labels {
                sizes[l] += 1;
            }
            prop_assert!(sizes.iter().all(|&s| s >= m));
            seen += 1;
        }
        prop_assert_eq!(seen, count_partitions(n, k, m));
    }
}
