//! JSON report shapes. Indices are 1-based; `null` stands for `+∞`.

use interdesign::oracle::Check;
use interdesign::relax::SolverCertificate;
use interdesign::{FractionalSolution, ObjectiveKind, ObjectiveScore, RoundingResult};
use serde::Serialize;

use crate::io::SCHEMA;

pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Serialize)]
pub struct Objective {
    pub objective: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_prime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
}

impl From<ObjectiveKind> for Objective {
    fn from(kind: ObjectiveKind) -> Self {
        match kind {
            ObjectiveKind::Ratio { l_prime, l } => Self {
                objective: "ratio".into(),
                l_prime: Some(l_prime),
                l: Some(l),
            },
            other => Self {
                objective: other.to_string(),
                l_prime: None,
                l: None,
            },
        }
    }
}

#[derive(Serialize)]
pub struct Certificate {
    pub method: &'static str,
    pub measure: Option<f64>,
    pub threshold: f64,
    pub certified: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_bound: Option<f64>,
}

impl From<&SolverCertificate> for Certificate {
    fn from(c: &SolverCertificate) -> Self {
        Self {
            method: c.method,
            measure: finite(c.measure),
            threshold: c.threshold,
            certified: c.certified,
            iterations: c.iterations,
            dual_bound: c.dual_bound,
        }
    }
}

#[derive(Serialize)]
pub struct Fractional {
    /// `solved` or `given`.
    pub source: &'static str,
    pub objective_value: Option<f64>,
    pub x: Vec<f64>,
    pub certificate: Option<Certificate>,
}

impl Fractional {
    pub fn new(frac: &FractionalSolution, source: &'static str) -> Self {
        Self {
            source,
            objective_value: finite(frac.objective_value),
            x: frac.x.clone(),
            certificate: frac.certificate.as_ref().map(Certificate::from),
        }
    }
}

#[derive(Serialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_ms: Option<f64>,
    pub total_ms: f64,
}

#[derive(Serialize)]
pub struct Header {
    pub schema: u32,
    pub command: &'static str,
    pub instance_digest: String,
    pub d: usize,
    pub k: usize,
    pub m: usize,
}

impl Header {
    pub fn new(command: &'static str, digest: String, d: usize, k: usize, m: usize) -> Self {
        Self {
            schema: SCHEMA,
            command,
            instance_digest: digest,
            d,
            k,
            m,
        }
    }
}

#[derive(Serialize)]
pub struct SolveReport {
    #[serde(flatten)]
    pub header: Header,
    #[serde(flatten)]
    pub objective: Objective,
    pub fractional: Fractional,
    pub timings: Timings,
}

#[derive(Serialize)]
pub struct Level {
    pub level: usize,
    pub selected: usize,
    pub parent_score: Option<f64>,
    pub selected_score: Option<f64>,
}

fn score(s: ObjectiveScore) -> Option<f64> {
    finite(s.value())
}

#[derive(Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub header: Header,
    #[serde(flatten)]
    pub objective: Objective,
    pub fractional_objective: Option<f64>,
    pub selection: Vec<usize>,
    pub integral_objective: Option<f64>,
    pub certified_ratio: Option<f64>,
    pub theorem_bound: f64,
    pub certified: bool,
    pub root_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_lambda_min: Option<f64>,
    pub levels: Vec<Level>,
    pub fractional: Fractional,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(
        header: Header,
        res: &RoundingResult,
        certified: bool,
        fractional: Fractional,
        timings: Timings,
    ) -> Self {
        Self {
            header,
            objective: res.kind.into(),
            fractional_objective: finite(res.fractional_objective),
            selection: res.selection.iter().map(|s| s + 1).collect(),
            integral_objective: finite(res.integral_objective),
            certified_ratio: finite(res.certified_ratio),
            theorem_bound: res.theorem_bound,
            certified,
            root_score: score(res.root_score),
            normalized_lambda_min: res.normalized_lambda_min,
            levels: res
                .levels
                .iter()
                .enumerate()
                .map(|(i, l)| Level {
                    level: i + 1,
                    selected: l.selected + 1,
                    parent_score: score(l.parent_score),
                    selected_score: score(l.selected_score),
                })
                .collect(),
            fractional,
            timings,
        }
    }
}

#[derive(Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl From<Check> for CheckEntry {
    fn from(c: Check) -> Self {
        Self {
            name: c.name,
            passed: c.passed,
            detail: c.detail,
        }
    }
}

#[derive(Serialize)]
pub struct VerifyBlock {
    #[serde(flatten)]
    pub objective: Objective,
    pub fractional_source: &'static str,
    pub expected_lambda_min: f64,
    pub checks: Vec<CheckEntry>,
}

#[derive(Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub header: Header,
    pub max_leaves: usize,
    pub leaves: usize,
    pub passed: bool,
    pub objectives: Vec<VerifyBlock>,
    pub timings: Timings,
}

#[derive(Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub instance_digest: String,
    #[serde(flatten)]
    pub objective: Objective,
    pub solver_certified: bool,
    pub fractional_objective: Option<f64>,
    pub integral_objective: Option<f64>,
    pub certified_ratio: Option<f64>,
    pub theorem_bound: f64,
    pub within_bound: bool,
}

#[derive(Serialize)]
pub struct BenchReport {
    pub schema: u32,
    pub command: &'static str,
    pub generator: String,
    pub seed: u64,
    pub all_within_bounds: bool,
    pub rows: Vec<BenchRow>,
    pub timings: Timings,
}
