use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use interdesign::oracle::{self, DEFAULT_MAX_LEAVES};
use interdesign::relax::{DEFAULT_MAX_ITERS, DEFAULT_TOL};
use interdesign::{
    certify, round_design, solve_relaxation_with, validate_fractional, Error, FamilyContext,
    FractionalSolution, Generator, Instance, ObjectiveKind, SolverOptions,
};

use crate::error::{CliError, EXIT_GUARANTEE, EXIT_OTHER, EXIT_VERIFY};
use crate::io::{instance_digest, load_x, objective_from_parts, InstanceFile, SCHEMA};
use crate::report::*;

/// What a command produced: the JSON report, a human summary and the exit code.
pub struct Outcome {
    pub json: String,
    pub summary: String,
    pub code: i32,
}

impl Outcome {
    fn new(report: &impl serde::Serialize, summary: String, code: i32) -> Self {
        Self {
            json: serde_json::to_string_pretty(report).expect("report serializes"),
            summary,
            code,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "verbatim")]
pub enum ObjectiveName {
    D,
    A,
    E,
    #[value(name = "ratio")]
    Ratio,
}

#[derive(Args, Debug, Clone)]
pub struct ObjectiveArgs {
    /// Design objective; defaults to the one in the instance file.
    #[arg(long, value_enum, ignore_case = true)]
    pub objective: Option<ObjectiveName>,
    /// l' for the ratio objective.
    #[arg(long)]
    pub lprime: Option<usize>,
    /// l for the ratio objective.
    #[arg(long)]
    pub l: Option<usize>,
}

impl ObjectiveArgs {
    /// The objective from the flags, falling back to the instance file.
    fn resolve(&self, file: Option<&InstanceFile>) -> Result<Option<ObjectiveKind>, CliError> {
        match self.objective {
            Some(name) => {
                let name = match name {
                    ObjectiveName::D => "D",
                    ObjectiveName::A => "A",
                    ObjectiveName::E => "E",
                    ObjectiveName::Ratio => "ratio",
                };
                objective_from_parts(name, self.lprime, self.l).map(Some)
            }
            None => match file {
                Some(f) => f.objective_kind(),
                None => Ok(None),
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Relative tolerance of the relaxation certificate.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Iteration budget of the relaxation solver.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance file (JSON).
    pub instance: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct RoundArgs {
    /// Instance file (JSON).
    pub instance: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Fractional weights to round: an array, `{"x": [...]}` or a solve report.
    #[arg(long)]
    pub input_x: Option<PathBuf>,
    /// Solve the relaxation even if the instance file carries weights.
    #[arg(long, conflicts_with = "input_x")]
    pub solve_first: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Instance file (JSON).
    pub instance: PathBuf,
    /// Check a single objective instead of E, D, A and every ratio.
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Fractional weights to enumerate; solved per objective otherwise.
    #[arg(long)]
    pub input_x: Option<PathBuf>,
    /// Refuse instances with more than this many leaves.
    #[arg(long, default_value_t = DEFAULT_MAX_LEAVES)]
    pub max_leaves: usize,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// gaussian, basis-copies or clustered.
    #[arg(long, default_value = "gaussian")]
    pub generator: String,
    /// Dimensions: comma-separated values or inclusive ranges like `2..=6`.
    #[arg(long, default_value = "4")]
    pub d: String,
    /// Budgets, same syntax as `--d`.
    #[arg(long, default_value = "8")]
    pub k: String,
    /// Vector counts, same syntax as `--d`; defaults to `2k`.
    #[arg(long)]
    pub m: Option<String>,
    /// Seed of the first instance per size.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per size, seeded `seed, seed+1, …`.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Benchmark a single objective instead of E, D and A.
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Solves the relaxation; running out of iterations yields the best iterate.
fn solve_or_best(
    inst: &Instance,
    kind: ObjectiveKind,
    opts: SolverOptions,
) -> Result<FractionalSolution, CliError> {
    match solve_relaxation_with(inst, kind, opts) {
        Ok(frac) => Ok(frac),
        Err(Error::IterationLimit { best, .. }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

fn require_kind(kind: Option<ObjectiveKind>) -> Result<ObjectiveKind, CliError> {
    kind.ok_or_else(|| {
        CliError::parse("no objective given; pass --objective or set it in the instance file")
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("inf".to_string(), |v| format!("{v:.6}"))
}

pub fn solve(args: &SolveArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance()?;
    let kind = require_kind(args.objective.resolve(Some(&file))?)?;
    let frac = solve_or_best(&inst, kind, args.solver.options())?;
    let certified = frac.is_certified();
    let report = SolveReport {
        header: Header::new(
            "solve",
            instance_digest(&inst),
            inst.d(),
            inst.k(),
            inst.m(),
        ),
        objective: kind.into(),
        fractional: Fractional::new(&frac, "solved"),
        timings: Timings {
            solve_ms: Some(ms(start)),
            round_ms: None,
            verify_ms: None,
            total_ms: ms(start),
        },
    };
    let cert = frac
        .certificate
        .as_ref()
        .expect("solver attaches a certificate");
    let summary = format!(
        "{kind} relaxation: objective {}, {} after {} iterations (measure {:.3e})",
        fmt_opt(finite(frac.objective_value)),
        if certified {
            "certified"
        } else {
            "NOT certified"
        },
        cert.iterations,
        cert.measure
    );
    Ok(Outcome::new(
        &report,
        summary,
        if certified { 0 } else { EXIT_OTHER },
    ))
}

pub fn round(args: &RoundArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance()?;
    let kind = require_kind(args.objective.resolve(Some(&file))?)?;
    let given = match &args.input_x {
        Some(path) => Some(load_x(path)?),
        None if !args.solve_first => file.x.clone(),
        None => None,
    };
    let (frac, source, solve_ms) = match given {
        Some(x) => (validate_fractional(&inst, &x, kind)?, "given", None),
        None => {
            let t = Instant::now();
            let frac = solve_or_best(&inst, kind, args.solver.options())?;
            (frac, "solved", Some(ms(t)))
        }
    };
    let t = Instant::now();
    let res = round_design(&inst, &frac, kind)?;
    let round_ms = ms(t);
    let certified = certify(&res, &frac, kind);
    let report = RunReport::new(
        Header::new(
            "round",
            instance_digest(&inst),
            inst.d(),
            inst.k(),
            inst.m(),
        ),
        &res,
        certified,
        Fractional::new(&frac, source),
        Timings {
            solve_ms,
            round_ms: Some(round_ms),
            verify_ms: None,
            total_ms: ms(start),
        },
    );
    let one_based: Vec<String> = res.selection.iter().map(|s| (s + 1).to_string()).collect();
    let summary = format!(
        "{kind}: selection ({}), ratio {} vs bound {:.6}: {}",
        one_based.join(", "),
        fmt_opt(finite(res.certified_ratio)),
        res.theorem_bound,
        if certified {
            "certified"
        } else {
            "GUARANTEE NOT MET"
        }
    );
    Ok(Outcome::new(
        &report,
        summary,
        if certified { 0 } else { EXIT_GUARANTEE },
    ))
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance()?;
    let leaves = (inst.m() as f64).powi(inst.k() as i32);
    if leaves > args.max_leaves as f64 {
        return Err(Error::TooLarge {
            leaves,
            limit: args.max_leaves,
        }
        .into());
    }
    let kinds = match args.objective.resolve(None)? {
        Some(kind) => vec![kind],
        None => {
            let mut v = vec![ObjectiveKind::E, ObjectiveKind::D, ObjectiveKind::A];
            v.extend(
                ObjectiveKind::all_ratios(inst.d())
                    .into_iter()
                    .filter(|k| k.validate(inst.d(), inst.k()).is_ok()),
            );
            v
        }
    };
    let given = match &args.input_x {
        Some(path) => Some(load_x(path)?),
        None => file.x.clone(),
    };

    let mut blocks = Vec::new();
    let mut summary = String::new();
    let mut passed = true;
    for kind in kinds {
        let (frac, source) = match &given {
            Some(x) => (validate_fractional(&inst, x, kind)?, "given"),
            None => (solve_or_best(&inst, kind, args.solver.options())?, "solved"),
        };
        let checks = oracle::verify(&inst, &frac, kind, args.max_leaves)?;
        let ctx = FamilyContext::new(inst.vectors().to_vec(), frac.x.clone(), inst.k())?;
        let table = oracle::enumerate_leaves_with_limit(&ctx, args.max_leaves)?;
        for c in &checks {
            passed &= c.passed;
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(summary, "{status} [{kind}] {}: {}", c.name, c.detail);
        }
        blocks.push(VerifyBlock {
            objective: kind.into(),
            fractional_source: source,
            expected_lambda_min: oracle::expected_lambda_min(&table),
            checks: checks.into_iter().map(CheckEntry::from).collect(),
        });
    }
    let report = VerifyReport {
        header: Header::new(
            "verify",
            instance_digest(&inst),
            inst.d(),
            inst.k(),
            inst.m(),
        ),
        max_leaves: args.max_leaves,
        leaves: leaves as usize,
        passed,
        objectives: blocks,
        timings: Timings {
            solve_ms: None,
            round_ms: None,
            verify_ms: Some(ms(start)),
            total_ms: ms(start),
        },
    };
    let _ = write!(
        summary,
        "{}",
        if passed {
            "all checks passed"
        } else {
            "SOME CHECKS FAILED"
        }
    );
    Ok(Outcome::new(
        &report,
        summary,
        if passed { 0 } else { EXIT_VERIFY },
    ))
}

/// Parses `3`, `2,4,6` or `2..=6` (items may be mixed).
pub fn parse_list(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::parse(format!("cannot parse size list '{spec}'"));
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        match item.split_once("..=") {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

pub fn bench(args: &BenchArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let generator: Generator = args.generator.parse()?;
    let ds = parse_list(&args.d)?;
    let ks = parse_list(&args.k)?;
    let ms_list = args.m.as_deref().map(parse_list).transpose()?;
    let kinds = match args.objective.resolve(None)? {
        Some(kind) => vec![kind],
        None => vec![ObjectiveKind::E, ObjectiveKind::D, ObjectiveKind::A],
    };

    let mut rows = Vec::new();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{:<13} {:>3} {:>3} {:>4} {:>5} {:<11} {:>12} {:>12}  ok",
        "generator", "d", "k", "m", "seed", "objective", "ratio", "bound"
    );
    for &d in &ds {
        for &k in &ks {
            if k < d {
                continue;
            }
            let sizes = ms_list.clone().unwrap_or_else(|| vec![2 * k]);
            for &m in &sizes {
                for seed in args.seed..args.seed + args.count {
                    let inst = generator.generate(d, k, m, seed)?;
                    let digest = instance_digest(&inst);
                    for &kind in &kinds {
                        if kind.validate(d, k).is_err() {
                            continue;
                        }
                        let frac = solve_or_best(&inst, kind, args.solver.options())?;
                        let res = round_design(&inst, &frac, kind)?;
                        let within = certify(&res, &frac, kind);
                        let _ = writeln!(
                            summary,
                            "{:<13} {:>3} {:>3} {:>4} {:>5} {:<11} {:>12} {:>12.6}  {}",
                            generator.to_string(),
                            d,
                            k,
                            inst.m(),
                            seed,
                            kind.to_string(),
                            fmt_opt(finite(res.certified_ratio)),
                            res.theorem_bound,
                            if within { "yes" } else { "NO" }
                        );
                        rows.push(BenchRow {
                            d,
                            k,
                            m: inst.m(),
                            seed,
                            instance_digest: digest.clone(),
                            objective: kind.into(),
                            solver_certified: frac.is_certified(),
                            fractional_objective: finite(res.fractional_objective),
                            integral_objective: finite(res.integral_objective),
                            certified_ratio: finite(res.certified_ratio),
                            theorem_bound: res.theorem_bound,
                            within_bound: within,
                        });
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::parse(
            "no valid (d, k) combination in the requested sizes",
        ));
    }
    let all_within = rows.iter().all(|r| r.within_bound);
    let _ = write!(
        summary,
        "{} runs, {}",
        rows.len(),
        if all_within {
            "all within bounds"
        } else {
            "SOME RATIOS EXCEED THEIR BOUNDS"
        }
    );
    let report = BenchReport {
        schema: SCHEMA,
        command: "bench",
        generator: generator.to_string(),
        seed: args.seed,
        all_within_bounds: all_within,
        rows,
        timings: Timings {
            solve_ms: None,
            round_ms: None,
            verify_ms: None,
            total_ms: ms(start),
        },
    };
    Ok(Outcome::new(
        &report,
        summary,
        if all_within { 0 } else { EXIT_GUARANTEE },
    ))
}
