//! Convex relaxations of the experimental design problems.
//!
//! All objectives are handled in minimization form:
//!
//! | kind | value |
//! |------|-------|
//! | D | `det(X)^{-1/d}` |
//! | A | `tr(X^{-1})` |
//! | E | `λ_min(X)^{-1}` |
//! | Ratio(l', l) | `(E_{l'}(X) / E_l(X))^{1/(l-l')}` |
//!
//! where `X = Σ x(i) v_i v_i^T` and `Σ x(i) = k`.

mod solver;
mod spectral;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix, DEFAULT_REL_CUTOFF, SINGULAR_REL_CUTOFF};

pub use solver::{multiplicative_a_step, multiplicative_d_step};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 200_000;

/// Vectors `v_1..v_m` in `R^d` together with the budget `k >= d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    d: usize,
    k: usize,
    vectors: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(d: usize, k: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInstance("dimension d must be >= 1".into()));
        }
        if k < d {
            return Err(Error::InvalidInstance(format!(
                "budget k = {k} is smaller than the dimension d = {d}"
            )));
        }
        if vectors.is_empty() {
            return Err(Error::InvalidInstance("instance has no vectors".into()));
        }
        if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
            return Err(Error::InvalidInstance(format!(
                "vector {bad} has length {}, expected {d}",
                vectors[bad].len()
            )));
        }
        if vectors.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance(
                "vector entries must be finite".into(),
            ));
        }
        Ok(Self { d, k, vectors })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn uniform_weights(&self) -> Vec<f64> {
        vec![self.k as f64 / self.m() as f64; self.m()]
    }

    /// Whether the vectors span `R^d`, judged on the uniform-weight gram.
    pub fn spans(&self) -> bool {
        let g = linalg::gram(&self.uniform_weights(), &self.vectors).expect("validated instance");
        match linalg::sym_eigen(&g) {
            Ok(s) => s.max() > 0.0 && s.min() > DEFAULT_REL_CUTOFF * s.max(),
            Err(_) => false,
        }
    }
}

/// Which experimental design objective to optimize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    D,
    A,
    E,
    /// `(E_{l'} / E_l)^{1/(l - l')}` with `0 <= l' < l <= d`.
    Ratio {
        l_prime: usize,
        l: usize,
    },
}

impl ObjectiveKind {
    pub fn validate(&self, d: usize, k: usize) -> Result<()> {
        if let ObjectiveKind::Ratio { l_prime, l } = *self {
            if l_prime >= l || l > d {
                return Err(Error::InvalidInstance(format!(
                    "ratio objective needs 0 <= l' < l <= d, got l' = {l_prime}, l = {l}, d = {d}"
                )));
            }
            if k < l {
                return Err(Error::InvalidInstance(format!(
                    "ratio objective needs k >= l, got k = {k}, l = {l}"
                )));
            }
        }
        Ok(())
    }

    /// The `(l', l)` pair this objective corresponds to, if it is a ratio of
    /// elementary symmetric polynomials.
    pub fn ratio_orders(&self, d: usize) -> Option<(usize, usize)> {
        match *self {
            ObjectiveKind::D => Some((0, d)),
            ObjectiveKind::A => Some((d - 1, d)),
            ObjectiveKind::Ratio { l_prime, l } => Some((l_prime, l)),
            ObjectiveKind::E => None,
        }
    }

    /// True for objectives whose relaxation needs the vectors to span `R^d`.
    pub fn needs_full_rank(&self, d: usize) -> bool {
        match *self {
            ObjectiveKind::Ratio { l, .. } => l == d,
            _ => true,
        }
    }

    /// All valid `(l', l)` ratio objectives in dimension `d`.
    pub fn all_ratios(d: usize) -> Vec<ObjectiveKind> {
        (1..=d)
            .flat_map(|l| (0..l).map(move |l_prime| ObjectiveKind::Ratio { l_prime, l }))
            .collect()
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::D => f.write_str("D"),
            ObjectiveKind::A => f.write_str("A"),
            ObjectiveKind::E => f.write_str("E"),
            ObjectiveKind::Ratio { l_prime, l } => write!(f, "ratio({l_prime},{l})"),
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    /// Parses `D`, `A`, `E` or `ratio(l',l)` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "d" => return Ok(ObjectiveKind::D),
            "a" => return Ok(ObjectiveKind::A),
            "e" => return Ok(ObjectiveKind::E),
            _ => {}
        }
        let inner = t
            .strip_prefix("ratio(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidInstance(format!("unknown objective '{s}'")))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => {
                let l_prime = a.parse().map_err(|_| bad_ratio(s))?;
                let l = b.parse().map_err(|_| bad_ratio(s))?;
                Ok(ObjectiveKind::Ratio { l_prime, l })
            }
            _ => Err(bad_ratio(s)),
        }
    }
}

fn bad_ratio(s: &str) -> Error {
    Error::InvalidInstance(format!("cannot parse ratio objective '{s}'"))
}

/// Evidence that a fractional solution is near-optimal.
///
/// `measure` is a relative optimality gap; the solution is certified when
/// `measure <= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverCertificate {
    pub measure: f64,
    pub threshold: f64,
    pub certified: bool,
    pub iterations: usize,
    pub method: &'static str,
    /// For E-design: an upper bound on the relaxation optimum of `λ_min`.
    pub dual_bound: Option<f64>,
}

/// Nonnegative weights summing to `k` with their aggregate gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    pub x: Vec<f64>,
    pub gram: SymMatrix,
    pub objective_value: f64,
    pub kind: ObjectiveKind,
    pub certificate: Option<SolverCertificate>,
}

impl FractionalSolution {
    pub fn is_certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.certified)
    }
}

/// Tuning for [`solve_relaxation_with`].
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

pub fn solve_relaxation(
    inst: &Instance,
    kind: ObjectiveKind,
    tol: f64,
    max_iters: usize,
) -> Result<FractionalSolution> {
    solve_relaxation_with(inst, kind, SolverOptions { tol, max_iters })
}

/// Solves the relaxation for `kind`, returning a solution that carries its
/// optimality certificate. Running out of iterations yields
/// [`Error::IterationLimit`] holding the best iterate.
pub fn solve_relaxation_with(
    inst: &Instance,
    kind: ObjectiveKind,
    opts: SolverOptions,
) -> Result<FractionalSolution> {
    kind.validate(inst.d(), inst.k())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInstance(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if kind.needs_full_rank(inst.d()) && !inst.spans() {
        return Err(Error::Infeasible);
    }
    let outcome = match kind {
        ObjectiveKind::E => solver::solve_e(inst, opts)?,
        ObjectiveKind::D => solver::solve_d(inst, opts)?,
        ObjectiveKind::A => solver::solve_a(inst, opts)?,
        ObjectiveKind::Ratio { l_prime, l } => solver::solve_ratio(inst, l_prime, l, opts)?,
    };
    let solver::Outcome { x, certificate } = outcome;
    let mut sol = build_solution(inst, rescale(x, inst.k())?, kind)?;
    let certified = certificate.certified;
    let iterations = certificate.iterations;
    sol.certificate = Some(certificate);
    if certified {
        Ok(sol)
    } else {
        Err(Error::IterationLimit {
            iterations,
            best: Box::new(sol),
        })
    }
}

/// Accepts an externally supplied `x`: checks nonnegativity, rescales to
/// `Σ x = k` and computes the gram matrix and objective.
pub fn validate_fractional(
    inst: &Instance,
    x: &[f64],
    kind: ObjectiveKind,
) -> Result<FractionalSolution> {
    kind.validate(inst.d(), inst.k())?;
    if x.len() != inst.m() {
        return Err(Error::InvalidInstance(format!(
            "fractional solution has {} entries for {} vectors",
            x.len(),
            inst.m()
        )));
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeWeight { index, value });
    }
    build_solution(inst, rescale(x.to_vec(), inst.k())?, kind)
}

fn rescale(mut x: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    let sum: f64 = x.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::ZeroSum);
    }
    let factor = k as f64 / sum;
    for v in x.iter_mut() {
        *v *= factor;
    }
    Ok(x)
}

fn build_solution(inst: &Instance, x: Vec<f64>, kind: ObjectiveKind) -> Result<FractionalSolution> {
    let gram = linalg::gram(&x, inst.vectors())?;
    let objective_value = fractional_objective(&gram, kind)?;
    Ok(FractionalSolution {
        x,
        gram,
        objective_value,
        kind,
        certificate: None,
    })
}

/// Minimization-form objective of a PSD matrix.
///
/// D, A and full-rank ratio objectives fail with `SingularMatrix` on singular
/// input; E returns `+∞` when `λ_min` vanishes.
pub fn fractional_objective(m: &SymMatrix, kind: ObjectiveKind) -> Result<f64> {
    let spec = linalg::sym_eigen(m)?;
    let d = m.dim();
    let (lo, hi) = (spec.min(), spec.max());
    let singular = hi <= 0.0 || lo <= SINGULAR_REL_CUTOFF * hi;
    let singular_err = || Error::SingularMatrix {
        min_eig: lo,
        max_eig: hi,
    };
    match kind {
        ObjectiveKind::E => Ok(if singular { f64::INFINITY } else { 1.0 / lo }),
        ObjectiveKind::D => {
            if singular {
                return Err(singular_err());
            }
            let mean_log = spec.eigenvalues.iter().map(|l| l.ln()).sum::<f64>() / d as f64;
            Ok((-mean_log).exp())
        }
        ObjectiveKind::A => {
            if singular {
                return Err(singular_err());
            }
            Ok(spec.eigenvalues.iter().map(|l| 1.0 / l).sum())
        }
        ObjectiveKind::Ratio { l_prime, l } => {
            kind.validate(d, l)?;
            if l == d && singular {
                return Err(singular_err());
            }
            let e = linalg::elementary_symmetric(&spec.eigenvalues, l);
            if !(e[l] > 0.0) {
                return Err(singular_err());
            }
            Ok((e[l_prime] / e[l]).powf(1.0 / (l - l_prime) as f64))
        }
    }
}

/// Like [`fractional_objective`] but maps singular matrices to `+∞`.
pub fn objective_or_infinity(m: &SymMatrix, kind: ObjectiveKind) -> Result<f64> {
    match fractional_objective(m, kind) {
        Err(Error::SingularMatrix { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// First-order optimality certificate of `x` for the smooth objectives
/// (D, A, Ratio), computed from `x` alone.
///
/// * D: `k · max_i v_i^T X^{-1} v_i / d - 1`
/// * A: `k · max_i v_i^T X^{-2} v_i / tr(X^{-1}) - 1`
/// * Ratio: Frank-Wolfe gap of `log E_{l'} - log E_l`
pub fn smooth_certificate_measure(inst: &Instance, x: &[f64], kind: ObjectiveKind) -> Result<f64> {
    solver::smooth_gap(inst, x, kind)
}
