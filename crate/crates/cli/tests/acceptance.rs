//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::seq::index::sample as index_sample;
use rand::Rng as _;
use statrs::distribution::{Binomial, DiscreteCDF};

use cmle_cli::generator::{generate, GenConfig};
use cmle_core::abs::{abs_branch, AbsConfig, FixedShape};
use cmle_core::cem::{cem_run, CemConfig, CemInit};
use cmle_core::grids::{gonzalez, nll_grid, size_grid, variance_candidates, variance_grid_welldefined};
use cmle_core::model::{mean, sq_dist, validate_instance, variance, well_defined_threshold};
use cmle_core::oracle::{exact_opt_diam, exact_solve, DEFAULT_CAP};
use cmle_core::sampling::{sample_multiset, subset_means};
use cmle_core::solvers::{solve, Algorithm, SolveRequest};
use cmle_core::{rng_from_seed, BalanceProfile, Objective, PointSet, Rng};

type Outcome = Result<String, String>;

fn uniform_points(rng: &mut Rng, n: usize, d: usize, side: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>() * side).collect()).collect()
}

/// Uniform points scaled so the closest pair sits right at the
/// well-definedness threshold.
fn tight_instance(rng: &mut Rng, n: usize, d: usize) -> PointSet {
    let rows = uniform_points(rng, n, d, 1.0);
    let x = PointSet::new(rows.clone()).unwrap();
    let min = x.min_sq_dist().unwrap();
    let mut scale = (well_defined_threshold(d) / min).sqrt();
    loop {
        let x = PointSet::new(rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect()).unwrap();
        if validate_instance(&x).well_defined {
            return x;
        }
        scale *= 1.0 + 1e-12;
    }
}

/// Well-defined uniform instance, redrawn until it clears the threshold.
fn loose_instance(rng: &mut Rng, n: usize, d: usize) -> PointSet {
    loop {
        let x = PointSet::new(uniform_points(rng, n, d, 6.0 * n as f64)).unwrap();
        if validate_instance(&x).well_defined {
            return x;
        }
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let d = rng.random_range(1..=5);
        let rows = uniform_points(&mut rng, n, d, 100.0);
        let z: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 100.0).collect();
        let mu = mean(rows.iter().map(Vec::as_slice)).unwrap();
        let scatter: f64 = rows.iter().map(|p| sq_dist(p, &mu)).sum();
        let pairs: f64 = rows.iter().flat_map(|p| rows.iter().map(move |q| sq_dist(p, q))).sum();
        let around_z: f64 = rows.iter().map(|p| sq_dist(p, &z)).sum();
        let pairwise = (scatter - pairs / (2.0 * n as f64)).abs() / scatter;
        let bias = (around_z - scatter - n as f64 * sq_dist(&z, &mu)).abs() / around_z;
        worst = worst.max(pairwise).max(bias);
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("1000 sets, worst relative error {worst:.2e}, {secs:.2}s");
    if worst <= 1e-9 && secs < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(2);
    let floor = 1.0 / (2.0 * PI) - 1e-12;
    let mut lowest = f64::INFINITY;
    let mut checked = 0usize;
    for _ in 0..500 {
        let n = rng.random_range(2..=20);
        let d = rng.random_range(1..=3);
        let x = tight_instance(&mut rng, n, d);
        for _ in 0..200 {
            let size = rng.random_range(2..=n);
            let idx = index_sample(&mut rng, n, size).into_vec();
            let mu = mean(x.select(&idx)).unwrap();
            lowest = lowest.min(variance(x.select(&idx), &mu).unwrap());
            checked += 1;
        }
    }
    let detail = format!("{checked} subsets, smallest variance {lowest:.12} vs floor {:.12}", 1.0 / (2.0 * PI));
    if lowest >= floor {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let x = PointSet::new(vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]]).unwrap();
    let cmle = exact_solve(&x, 2, Objective::Cmle, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let wkm = exact_solve(&x, 2, Objective::Wkm { beta: 0.5 }, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let ucmle = exact_solve(&x, 2, Objective::Ucmle, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let clusters = cmle.best_partition.clusters();
    let ok = (cmle.opt - 8.448343).abs() <= 1e-6
        && clusters == vec![vec![0, 1], vec![2, 3]]
        && (wkm.opt - 4.772589).abs() <= 1e-6
        && (ucmle.opt - 8.448343).abs() <= 1e-6;
    let detail = format!(
        "CMLE {:.6} {:?}, WKM {:.6}, UCMLE {:.6}",
        cmle.opt, clusters, wkm.opt, ucmle.opt
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut rounds = 0usize;
    let mut increases = Vec::new();
    let mut fixed_point_checks = 0usize;
    let mut moved = Vec::new();
    for i in 0..100u64 {
        let k = rng.random_range(1..=3);
        // Every fourth instance is small enough for the oracle.
        let n = if i % 4 == 0 { rng.random_range(2 * k..=10) } else { rng.random_range(2 * k..=40) };
        let d = rng.random_range(1..=3);
        let x = if i % 2 == 0 {
            loose_instance(&mut rng, n, d)
        } else {
            generate(&GenConfig {
                n,
                dim: d,
                k,
                separation: 4.0,
                sigma: 1.0,
                weights: None,
                seed: i,
            })
            .map_err(|e| e.to_string())?
            .points
        };
        let out = cem_run(&x, k, &CemConfig { seed: i, ..CemConfig::default() }).map_err(|e| e.to_string())?;
        let costs = &out.trace.costs;
        for t in 1..costs.len() {
            if out.trace.repairs.contains(&t) {
                continue;
            }
            rounds += 1;
            if costs[t] > costs[t - 1] + 1e-9 * costs[t - 1].abs().max(1.0) {
                increases.push((i, t));
            }
        }
        if n <= 10 {
            let opt = exact_solve(&x, k, Objective::Cmle, DEFAULT_CAP).map_err(|e| e.to_string())?;
            let cfg = CemConfig {
                init: CemInit::Mixture(opt.best_mixture.clone()),
                ..CemConfig::default()
            };
            let again = cem_run(&x, k, &cfg).map_err(|e| e.to_string())?;
            fixed_point_checks += 1;
            if again.partition != opt.best_partition || !rel_close(again.cost, opt.opt, 1e-9) {
                moved.push(i);
            }
        }
    }
    let detail = format!(
        "{rounds} rounds, increases {increases:?}; {fixed_point_checks} optimum starts, moved {moved:?}"
    );
    if increases.is_empty() && moved.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(5);
    let draws = 10_000;
    let mut failures = [0usize; 4];
    for _ in 0..draws {
        let eps = rng.random_range(0.01..1.0);
        let n = rng.random_range(2..=1000usize);

        let f = rng.random_range(1.0..10.0);
        let grid = size_grid(n, &BalanceProfile::new(f, None).unwrap(), eps).unwrap();
        let size = rng.random_range(n as f64 / f..=n as f64);
        match grid.cover(size) {
            Some(v) if v >= size && v <= (1.0 + eps) * size => {}
            _ => failures[0] += 1,
        }

        let d = rng.random_range(1..=5usize);
        let gamma = rng.random_range(1.0..20.0);
        let grid = nll_grid(n, d, gamma, eps).unwrap();
        let v = rng.random_range(grid.base()..=grid.base() * gamma);
        match grid.cover(v) {
            Some(u) if u >= v && u <= (1.0 + eps) * v => {}
            _ => failures[1] += 1,
        }

        // Variance candidates from a bracketed likelihood estimate and
        // cluster size, for a cluster of an (f,g)-balanced solution.
        let k = rng.random_range(1..=4usize);
        let sizes: Vec<f64> = (0..k).map(|_| rng.random_range(2..=50usize) as f64).collect();
        let vars: Vec<f64> = (0..k).map(|_| (rng.random_range(0.0..8.0f64)).exp() / (2.0 * PI)).collect();
        let opts: Vec<f64> = sizes
            .iter()
            .zip(&vars)
            .map(|(c, s2)| 0.5 * c * d as f64 * ((2.0 * PI * s2).ln() + 1.0))
            .collect();
        let total: f64 = opts.iter().sum();
        let least = opts.iter().copied().fold(f64::INFINITY, f64::min);
        let g = total / least * rng.random_range(1.0..2.0);
        let n_est = total * (1.0 + eps).powf(rng.random::<f64>());
        let kk = rng.random_range(0..k);
        let n_k = sizes[kk] * (1.0 + eps).powf(rng.random::<f64>());
        let cands = variance_candidates(n_est, n_k, &BalanceProfile::new(1.0, Some(g)).unwrap(), eps, d).unwrap();
        let allowed = ((1.0 + eps).powi(2) - 1.0) * 2.0 / (sizes[kk] * d as f64) * opts[kk];
        let covered = cands
            .iter()
            .any(|&c| c >= vars[kk] && c.ln() - vars[kk].ln() <= allowed * (1.0 + 1e-12));
        if !covered {
            failures[2] += 1;
        }

        let delta_sq = rng.random_range(well_defined_threshold(d)..1e4);
        let grid = variance_grid_welldefined(delta_sq, eps).unwrap();
        let s2 = ((1.0 / (2.0 * PI)).ln() + rng.random::<f64>() * (2.0 * PI * delta_sq).ln()).exp().min(delta_sq);
        match grid.cover(s2) {
            Some(v) if v >= s2 && v.ln() - s2.ln() <= eps + 1e-12 => {}
            _ => failures[3] += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{draws} draws per grid; misses size {} nll {} fg-variance {} well-defined variance {}; {secs:.2}s",
        failures[0], failures[1], failures[2], failures[3]
    );
    if failures.iter().all(|&f| f == 0) && secs < 30.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut radius_fail = Vec::new();
    let mut bound_fail = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for i in 0..50u64 {
        let k = rng.random_range(1..=3usize);
        let n = rng.random_range((2 * k).max(3)..=8);
        let d = rng.random_range(1..=3);
        let x = if i % 2 == 0 {
            loose_instance(&mut rng, n, d)
        } else {
            generate(&GenConfig {
                n,
                dim: d,
                k,
                separation: rng.random_range(2.0..10.0),
                sigma: 1.0,
                weights: None,
                seed: i,
            })
            .map_err(|e| e.to_string())?
            .points
        };
        let g = gonzalez(&x, k).map_err(|e| e.to_string())?;
        let diam = exact_opt_diam(&x, k, DEFAULT_CAP).map_err(|e| e.to_string())?;
        if g.radius > 4.0 * diam {
            radius_fail.push(i);
        }
        let opt = exact_solve(&x, k, Objective::Cmle, DEFAULT_CAP).map_err(|e| e.to_string())?.opt;
        match g.cost_bound(n, d) {
            Some(b) if b >= opt => worst_ratio = worst_ratio.max(opt / b),
            _ => bound_fail.push(i),
        }
    }
    let detail = format!(
        "50 instances; radius > 4·diam at {radius_fail:?}; bound < OPT at {bound_fail:?}; max OPT/bound {worst_ratio:.3}"
    );
    if radius_fail.is_empty() && bound_fail.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    // α = 1, ε = 1, δ = 0.5 give subsets of m = 2 from multisets of s = 4.
    let (alpha, eps, delta) = (1.0, 1.0, 0.5);
    let m = cmle_core::sampling::default_subset_size(eps, delta);
    let s = cmle_core::sampling::default_sample_size(alpha, eps, delta);
    let mut rng = rng_from_seed(7);
    let x = loose_instance(&mut rng, 20, 2);
    let all: Vec<usize> = (0..x.len()).collect();
    let mu = mean(x.iter()).unwrap();
    let spread: f64 = x.iter().map(|p| sq_dist(p, &mu)).sum::<f64>() / x.len() as f64;
    let trials = 200u64;
    let mut hits = 0u64;
    for _ in 0..trials {
        let sample = sample_multiset(&all, s, &mut rng).map_err(|e| e.to_string())?;
        let means = subset_means(&x, &sample, m, u128::MAX, false).map_err(|e| e.to_string())?;
        if means.iter().any(|c| sq_dist(c, &mu) <= eps * spread) {
            hits += 1;
        }
    }
    let p0 = (1.0 - delta) / 5.0;
    // One-sided test of H0: p ≥ p0 against p < p0.
    let p_value = Binomial::new(p0, trials).unwrap().cdf(hits);
    let detail = format!("m={m} s={s}: {hits}/{trials} successes vs bound {p0}, p-value {p_value:.3e}");
    if p_value >= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The seeded instance family shared by the pipeline criteria.
fn family() -> Vec<PointSet> {
    (0..20u64)
        .map(|i| {
            generate(&GenConfig {
                n: 12,
                dim: 1 + (i as usize % 2),
                k: 2,
                separation: 8.0,
                sigma: 1.0,
                weights: None,
                seed: 1000 + i,
            })
            .unwrap()
            .points
        })
        .collect()
}

/// Desk-scale request: ε = 0.3, δ = 0.25, f = 2, α = 1/(2K), and sampling
/// sizes small enough for a single core.
fn desk_request(algorithm: Algorithm, seed: u64) -> SolveRequest {
    let mut req = SolveRequest::new(algorithm, 2);
    req.epsilon = 0.3;
    req.delta = 0.25;
    req.balance = Some(BalanceProfile::new(2.0, None).unwrap());
    req.beta = Some(0.5);
    req.seed = seed;
    req.budgets.alpha = Some(0.25);
    req.budgets.sample_size = Some(6);
    req.budgets.subset_size = Some(2);
    req.budgets.repeats = Some(2);
    req
}

fn pipeline(algorithm: Algorithm, objective: Objective) -> Result<(usize, String), String> {
    let start = Instant::now();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    let mut candidates = 0u128;
    for (i, x) in family().iter().enumerate() {
        let opt = exact_solve(x, 2, objective, DEFAULT_CAP).map_err(|e| e.to_string())?.opt;
        let res = solve(x, &desk_request(algorithm, i as u64)).map_err(|e| e.to_string())?;
        let ratio = res.cost / opt;
        worst = worst.max(ratio);
        candidates = candidates.max(res.certificate.evaluations);
        if res.cost <= 1.3 * opt {
            ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        ok,
        format!("{ok}/20 within 1.3×OPT, worst ratio {worst:.4}, max evaluations {candidates}, {secs:.1}s"),
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let (ok, detail) = pipeline(Algorithm::Theorem1, Objective::Cmle)?;
    if ok >= 15 && start.elapsed().as_secs_f64() < 300.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn base_cases() -> Result<(), String> {
    let x = PointSet::new(vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]]).unwrap();
    let shape = FixedShape::new(vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
    let cfg = AbsConfig::with_alpha(1.0, 1.0, 0.5).unwrap();
    let mut rng = rng_from_seed(9);
    let e = |e: cmle_core::Error| e.to_string();
    let prefix = vec![vec![1.0], vec![11.0]];
    if abs_branch(&x, 2, &shape, &cfg, &mut rng, &[0, 1, 2, 3], 0, &prefix).map_err(e)? != vec![prefix.clone()] {
        return Err("l = 0 must return the prefix".into());
    }
    let out = abs_branch(&x, 2, &shape, &cfg, &mut rng, &[3], 1, &prefix[..1]).map_err(e)?;
    if out != vec![vec![vec![1.0], vec![12.0]]] {
        return Err("l ≥ |R| must append R to the prefix".into());
    }
    let out = abs_branch(&x, 2, &shape, &cfg, &mut rng, &[0, 2], 2, &[]).map_err(e)?;
    if out != vec![vec![vec![0.0], vec![10.0]]] {
        return Err("l = |R| with an empty prefix must return R".into());
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    base_cases()?;
    let (ok, detail) = pipeline(Algorithm::Theorem2, Objective::Cmle)?;
    let detail = format!("base cases exact; {detail}");
    if ok >= 15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10() -> Outcome {
    let (wkm, wkm_detail) = pipeline(Algorithm::Wkm, Objective::Wkm { beta: 0.5 })?;
    let (ucmle, ucmle_detail) = pipeline(Algorithm::Ucmle, Objective::Ucmle)?;
    let mut dominated = Vec::new();
    for (i, x) in family().iter().enumerate() {
        let c = exact_solve(x, 2, Objective::Cmle, DEFAULT_CAP).map_err(|e| e.to_string())?.opt;
        let u = exact_solve(x, 2, Objective::Ucmle, DEFAULT_CAP).map_err(|e| e.to_string())?.opt;
        if u < c - 1e-9 * c.abs() {
            dominated.push(i);
        }
    }
    let detail = format!("WKM(β=0.5) {wkm_detail}; UCMLE {ucmle_detail}; UCMLE OPT < CMLE OPT at {dominated:?}");
    if wkm >= 15 && ucmle >= 15 && dominated.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_11() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let input = dir.path().join("x.txt");
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_cmle"))
            .args(args)
            .env_remove("CMLE_THREADS")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };
    let gen = ["gen", "--n", "12", "--d", "2", "--k", "2", "--separation", "8", "--seed", "42"];
    let first = run(&gen)?;
    if first != run(&gen)? {
        return Err("gen output differs between runs".into());
    }
    std::fs::write(&input, &first).map_err(|e| e.to_string())?;
    let path = input.to_string_lossy().into_owned();
    let mut checked = vec!["gen"];
    for alg in ["theorem1", "theorem2", "cem", "wkm", "ucmle"] {
        let args = [
            "solve", "--input", &path, "--k", "2", "--algorithm", alg, "--seed", "5", "--f", "2", "--beta", "0.5",
            "--alpha", "0.25", "--sample-size", "6", "--subset-size", "2", "--repeats", "2",
        ];
        if run(&args)? != run(&args)? {
            return Err(format!("solve --algorithm {alg} output differs between runs"));
        }
        checked.push(alg);
    }
    let oracle = ["oracle", "--input", &path, "--k", "2"];
    if run(&oracle)? != run(&oracle)? {
        return Err("oracle output differs between runs".into());
    }
    checked.push("oracle");
    Ok(format!("byte-identical repeats: {}", checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("identity suite", criterion_1),
        ("variance floor", criterion_2),
        ("oracle fixture", criterion_3),
        ("CEM monotonicity", criterion_4),
        ("grid coverage", criterion_5),
        ("farthest-first bounds", criterion_6),
        ("superset-sampling statistics", criterion_7),
        ("sampling-and-grid pipeline", criterion_8),
        ("sample-and-prune pipeline", criterion_9),
        ("special cases", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name} ... PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name} ... FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
