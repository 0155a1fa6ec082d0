//! The JSON result document written by `solve` and `oracle`.
//!
//! Labels in documents are 1-based; the library API is 0-based.

use serde::{Deserialize, Serialize};

use cmle_core::model::{induce_partition, mixture_objective, validate_instance};
use cmle_core::oracle::OracleResult;
use cmle_core::solvers::{Algorithm, Certificate, SolveRequest, SolveResult};
use cmle_core::{Objective, PointSet, SphericalMixture};

use crate::CliError;

pub const FORMAT: &str = "cmle-result/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDigest {
    pub n: usize,
    pub dim: usize,
    pub max_sq_dist: f64,
    pub well_defined: bool,
    pub min_sq_dist: Option<f64>,
    pub threshold: f64,
}

impl InstanceDigest {
    pub fn of(x: &PointSet) -> Self {
        let r = validate_instance(x);
        Self {
            n: r.n,
            dim: r.dim,
            max_sq_dist: r.max_sq_dist,
            well_defined: r.well_defined,
            min_sq_dist: r.min_sq_dist,
            threshold: r.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObjectiveDoc {
    Cmle,
    Wkm { beta: f64 },
    Ucmle,
}

impl From<Objective> for ObjectiveDoc {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Cmle => ObjectiveDoc::Cmle,
            Objective::Wkm { beta } => ObjectiveDoc::Wkm { beta },
            Objective::Ucmle => ObjectiveDoc::Ucmle,
        }
    }
}

impl From<&ObjectiveDoc> for Objective {
    fn from(o: &ObjectiveDoc) -> Self {
        match *o {
            ObjectiveDoc::Cmle => Objective::Cmle,
            ObjectiveDoc::Wkm { beta } => Objective::Wkm { beta },
            ObjectiveDoc::Ucmle => Objective::Ucmle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetsDoc {
    pub max_subset_means: u128,
    pub max_mean_tuples: u128,
    pub max_shapes: u128,
    pub max_candidates: u128,
    pub sample_size: Option<usize>,
    pub subset_size: Option<usize>,
    pub repeats: Option<usize>,
    pub alpha: Option<f64>,
}

/// Echo of the parameters that produced the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestEcho {
    pub algorithm: String,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<BudgetsDoc>,
    #[serde(default)]
    pub polish: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDoc {
    pub stage: String,
    pub size: u128,
}

/// Solver or oracle bookkeeping; fields a command does not produce are
/// omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_internal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_count: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_count: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distinct_shapes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_tuples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<u128>,
    /// Best cost after each repeat; `null` before any finite candidate.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub repeat_best: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cem_iterations: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub polished: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partitions_scanned: Option<u128>,
}

impl From<&Certificate> for CertificateDoc {
    fn from(c: &Certificate) -> Self {
        let nonzero = |v: u128| (v > 0).then_some(v);
        Self {
            gamma: c.gamma,
            g: c.g,
            epsilon_internal: c.epsilon_internal,
            alpha: c.alpha,
            sample_size: c.sample_size,
            subset_size: c.subset_size,
            repeats: Some(c.repeats),
            stages: c
                .stages
                .iter()
                .map(|s| StageDoc {
                    stage: s.stage.to_string(),
                    size: s.size,
                })
                .collect(),
            candidate_count: (!c.stages.is_empty()).then_some(c.candidate_count),
            shape_count: nonzero(c.shape_count),
            distinct_shapes: (c.distinct_shapes > 0).then_some(c.distinct_shapes),
            mean_tuples: (c.mean_tuples > 0).then_some(c.mean_tuples),
            evaluations: nonzero(c.evaluations),
            repeat_best: c.repeat_best.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            cem_iterations: c.cem_iterations,
            polished: c.polished,
            partitions_scanned: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format: String,
    pub command: String,
    pub instance: InstanceDigest,
    pub request: RequestEcho,
    pub objective: ObjectiveDoc,
    pub mixture: Vec<ComponentDoc>,
    /// 1-based cluster label of every point under the mixture.
    pub labels: Vec<usize>,
    pub cost: f64,
    pub certificate: CertificateDoc,
    /// Only present when timing was requested, so that repeated runs
    /// produce byte-identical documents by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

pub fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Theorem1 => "theorem1",
        Algorithm::Theorem2 => "theorem2",
        Algorithm::Cem => "cem",
        Algorithm::Wkm => "wkm",
        Algorithm::Ucmle => "ucmle",
    }
}

fn mixture_doc(m: &SphericalMixture) -> Vec<ComponentDoc> {
    m.components()
        .iter()
        .map(|c| ComponentDoc {
            weight: c.weight(),
            mean: c.mean().to_vec(),
            variance: c.variance(),
        })
        .collect()
}

impl ResultDocument {
    pub fn from_solve(x: &PointSet, req: &SolveRequest, res: &SolveResult) -> Self {
        let b = &req.budgets;
        Self {
            format: FORMAT.to_string(),
            command: "solve".to_string(),
            instance: InstanceDigest::of(x),
            request: RequestEcho {
                algorithm: algorithm_name(req.algorithm).to_string(),
                k: req.k,
                epsilon: Some(req.epsilon),
                delta: Some(req.delta),
                f: req.balance.as_ref().map(|p| p.f),
                g: req.balance.as_ref().and_then(|p| p.g),
                beta: req.beta,
                seed: Some(req.seed),
                budgets: Some(BudgetsDoc {
                    max_subset_means: b.max_subset_means,
                    max_mean_tuples: b.max_mean_tuples,
                    max_shapes: b.max_shapes,
                    max_candidates: b.max_candidates,
                    sample_size: b.sample_size,
                    subset_size: b.subset_size,
                    repeats: b.repeats,
                    alpha: b.alpha,
                }),
                polish: req.polish,
                restarts: (req.algorithm == Algorithm::Cem).then_some(req.cem_restarts),
                cap: None,
            },
            objective: res.objective.into(),
            mixture: mixture_doc(&res.mixture),
            labels: res.partition.labels().iter().map(|l| l + 1).collect(),
            cost: res.cost,
            certificate: (&res.certificate).into(),
            wall_time_seconds: None,
        }
    }

    pub fn from_oracle(x: &PointSet, k: usize, objective: Objective, cap: usize, res: &OracleResult) -> Self {
        let doc = ObjectiveDoc::from(objective);
        let beta = match objective {
            Objective::Wkm { beta } => Some(beta),
            _ => None,
        };
        Self {
            format: FORMAT.to_string(),
            command: "oracle".to_string(),
            instance: InstanceDigest::of(x),
            request: RequestEcho {
                algorithm: "oracle".to_string(),
                k,
                epsilon: None,
                delta: None,
                f: None,
                g: None,
                beta,
                seed: None,
                budgets: None,
                polish: false,
                restarts: None,
                cap: Some(cap),
            },
            objective: doc,
            mixture: mixture_doc(&res.best_mixture),
            labels: res.best_partition.labels().iter().map(|l| l + 1).collect(),
            cost: res.opt,
            certificate: CertificateDoc {
                partitions_scanned: Some(res.partitions_scanned),
                ..CertificateDoc::default()
            },
            wall_time_seconds: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("malformed result document: {e}")))
    }

    pub fn mixture(&self) -> Result<SphericalMixture, CliError> {
        let weights: Vec<f64> = self.mixture.iter().map(|c| c.weight).collect();
        let means = self.mixture.iter().map(|c| c.mean.clone()).collect();
        let vars: Vec<f64> = self.mixture.iter().map(|c| c.variance).collect();
        Ok(SphericalMixture::from_parts(&weights, means, &vars)?)
    }

    /// Recomputes every derivable field from `x` and the stored mixture.
    ///
    /// Oracle documents store the partition optimum; for them only the
    /// instance digest and the mixture's validity are checked against the
    /// cost, which must not undercut the mixture's own objective.
    pub fn verify(&self, x: &PointSet) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::input(format!("document does not match the instance: {what}")));
        if self.instance != InstanceDigest::of(x) {
            return bad("instance digest");
        }
        let mixture = self.mixture()?;
        if mixture.dim() != x.dim() {
            return bad("mixture dimension");
        }
        let objective = Objective::from(&self.objective);
        let cost = mixture_objective(x, &mixture, objective);
        let tol = 1e-9 * cost.abs().max(1.0);
        match self.command.as_str() {
            "solve" => {
                if (cost - self.cost).abs() > tol {
                    return bad("cost");
                }
                let labels: Vec<usize> = induce_partition(x, &mixture).labels().iter().map(|l| l + 1).collect();
                if labels != self.labels {
                    return bad("labels");
                }
            }
            "oracle" => {
                if cost > self.cost + tol {
                    return bad("cost");
                }
            }
            other => return Err(CliError::input(format!("unknown command `{other}` in document"))),
        }
        Ok(())
    }
}
