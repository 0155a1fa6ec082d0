//! Argument parsing and the four commands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cmle_core::model::{validate_balance, validate_instance};
use cmle_core::oracle::{exact_solve, DEFAULT_CAP};
use cmle_core::solvers::{solve, Algorithm, SolveRequest};
use cmle_core::{BalanceProfile, HardPartition, Objective};

use crate::document::ResultDocument;
use crate::generator::{generate, GenConfig};
use crate::instance::{format_instance, read_instance, read_labels};
use crate::CliError;

/// Environment variable consulted for `--threads` when the flag is absent.
pub const THREADS_ENV: &str = "CMLE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cmle", version, about = "Hard-clustering maximum likelihood for spherical Gaussian mixtures")]
pub struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a solver and write a result document.
    Solve(SolveArgs),
    /// Solve exactly by enumerating all partitions (small instances only).
    Oracle(OracleArgs),
    /// Generate a synthetic instance and its ground truth.
    Gen(GenArgs),
    /// Report well-definedness and, given labels, balance of an instance.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgorithmArg {
    Theorem1,
    Theorem2,
    Cem,
    Wkm,
    Ucmle,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Theorem1 => Algorithm::Theorem1,
            AlgorithmArg::Theorem2 => Algorithm::Theorem2,
            AlgorithmArg::Cem => Algorithm::Cem,
            AlgorithmArg::Wkm => Algorithm::Wkm,
            AlgorithmArg::Ucmle => Algorithm::Ucmle,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Cmle,
    Wkm,
    Ucmle,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum)]
    pub algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Balance constant: every cluster holds at least N/f points.
    #[arg(long)]
    pub f: Option<f64>,
    /// Cost-balance constant; defaults to Γ·f where needed.
    #[arg(long)]
    pub g: Option<f64>,
    /// Weighted K-means parameter (variances 1/(2β)).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// Cap on scored (mean tuple, shape) pairs.
    #[arg(long)]
    pub budget_candidates: Option<u128>,
    /// Size of each sampled multiset.
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Size of the subsets whose means become candidates.
    #[arg(long)]
    pub subset_size: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Assumed minimum cluster fraction for sampling.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Random restarts for CEM.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Finish with CEM started from the result.
    #[arg(long)]
    pub polish: bool,
    /// Record wall time in the document (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "cmle")]
    pub objective: ObjectiveArg,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Largest number of points the enumeration accepts.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    /// Distance between neighbouring means in units of sigma.
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Comma-separated mixing weights (uniform when absent).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub output: String,
    /// Ground-truth document; defaults to `<output>.truth.json` for file output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// 1-based cluster labels, one per point.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub f: f64,
    #[arg(long)]
    pub g: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    n: usize,
    dim: usize,
    well_defined: bool,
    min_sq_dist: Option<f64>,
    threshold: f64,
    max_sq_dist: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    partition: Option<PartitionReport>,
}

#[derive(Debug, Serialize)]
struct PartitionReport {
    k: usize,
    sizes: Vec<usize>,
    well_defined_partition: bool,
    f: f64,
    f_balanced: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fg_balanced: Option<bool>,
}

fn emit(output: &str, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    if output == "-" {
        stdout.write_all(text.as_bytes())?;
    } else {
        std::fs::write(output, text).map_err(|e| CliError::input(format!("cannot write {output}: {e}")))?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let x = read_instance(&a.input)?;
    let algorithm = Algorithm::from(a.algorithm);
    if algorithm == Algorithm::Wkm && a.beta.is_none() {
        return Err(CliError::input("--algorithm wkm requires --beta"));
    }
    let mut req = SolveRequest::new(algorithm, a.k);
    req.epsilon = a.epsilon;
    req.delta = a.delta;
    req.balance = a.f.map(|f| BalanceProfile::new(f, a.g)).transpose()?;
    req.beta = a.beta;
    req.seed = a.seed;
    req.polish = a.polish;
    req.cem_restarts = a.restarts;
    if let Some(c) = a.budget_candidates {
        req.budgets.max_candidates = c;
    }
    req.budgets.sample_size = a.sample_size;
    req.budgets.subset_size = a.subset_size;
    req.budgets.repeats = a.repeats;
    req.budgets.alpha = a.alpha;
    let start = Instant::now();
    let res = solve(&x, &req)?;
    let mut doc = ResultDocument::from_solve(&x, &req, &res);
    if a.timing {
        doc.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    emit(&a.output, &doc.to_json(), stdout)
}

fn cmd_oracle(a: &OracleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let x = read_instance(&a.input)?;
    let objective = match a.objective {
        ObjectiveArg::Cmle => Objective::Cmle,
        ObjectiveArg::Ucmle => Objective::Ucmle,
        ObjectiveArg::Wkm => Objective::Wkm {
            beta: a.beta.ok_or_else(|| CliError::input("--objective wkm requires --beta"))?,
        },
    };
    let start = Instant::now();
    let res = exact_solve(&x, a.k, objective, a.cap)?;
    let mut doc = ResultDocument::from_oracle(&x, a.k, objective, a.cap, &res);
    if a.timing {
        doc.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    emit(&a.output, &doc.to_json(), stdout)
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let g = generate(&GenConfig {
        n: a.n,
        dim: a.d,
        k: a.k,
        separation: a.separation,
        sigma: a.sigma,
        weights: a.weights.clone(),
        seed: a.seed,
    })?;
    emit(&a.output, &format_instance(&g.points), stdout)?;
    let truth_path = match (&a.truth, a.output.as_str()) {
        (Some(p), _) => Some(p.clone()),
        (None, "-") => None,
        (None, out) => Some(PathBuf::from(format!("{out}.truth.json"))),
    };
    if let Some(p) = truth_path {
        let mut text = serde_json::to_string_pretty(&g.truth).expect("truth always serializes");
        text.push('\n');
        emit(&p.to_string_lossy(), &text, stdout)?;
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let x = read_instance(&a.input)?;
    let r = validate_instance(&x);
    let partition = match &a.labels {
        None => None,
        Some(path) => Some(partition_report(&x, path, a.f, a.g)?),
    };
    let report = CheckReport {
        n: r.n,
        dim: r.dim,
        well_defined: r.well_defined,
        min_sq_dist: r.min_sq_dist,
        threshold: r.threshold,
        max_sq_dist: r.max_sq_dist,
        partition,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("reports always serialize");
    text.push('\n');
    emit("-", &text, stdout)
}

fn partition_report(x: &cmle_core::PointSet, path: &Path, f: f64, g: Option<f64>) -> Result<PartitionReport, CliError> {
    let (labels, k) = read_labels(path)?;
    if labels.len() != x.len() {
        return Err(CliError::input(format!(
            "{}: {} labels for {} points",
            path.display(),
            labels.len(),
            x.len()
        )));
    }
    let part = HardPartition::new(labels, k)?;
    let well_defined_partition = part.is_well_defined();
    let prof = BalanceProfile::new(f, g)?;
    // The cost-balance check needs non-degenerate clusters; report it only
    // when it can be evaluated.
    let report = validate_balance(x, &part, &prof).or_else(|_| validate_balance(x, &part, &BalanceProfile::new(f, None)?))?;
    Ok(PartitionReport {
        k,
        sizes: part.sizes(),
        well_defined_partition,
        f,
        f_balanced: report.f_balanced,
        g,
        fg_balanced: report.fg_balanced,
    })
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to `stderr` as
/// `error[<kind>]: <message>`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = write!(stderr, "error[input]: {e}");
            return 1;
        }
    };
    if cli.threads == Some(0) {
        let _ = writeln!(stderr, "error[input]: --threads must be at least 1");
        return 1;
    }
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, stdout),
        Command::Oracle(a) => cmd_oracle(a, stdout),
        Command::Gen(a) => cmd_gen(a, stdout),
        Command::Check(a) => cmd_check(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
