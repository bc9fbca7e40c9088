//! Greedy descent of the interlacing family.
//!
//! At each of the `k` levels every child of the current node is scored and
//! the best one is fixed. The score per objective is a quantity of the node
//! polynomial `p` that never gets worse along the chosen path:
//!
//! | kind | score | direction |
//! |------|-------|-----------|
//! | E | `λ_min(p)` | max |
//! | D | `(-1)^d p(0)` | max |
//! | A | `-p'(0)/p(0)` | min |
//! | Ratio(l', l) | `(-1)^{l'-l} [x^{d-l'}]p / [x^{d-l}]p` | min |

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{self, FamilyContext};
use crate::linalg::{self, DEFAULT_REL_CUTOFF};
use crate::poly::{RealRootedPoly, DEFAULT_ROOT_EPS};
use crate::relax::{objective_or_infinity, FractionalSolution, Instance, ObjectiveKind};

const TIE_REL: f64 = 1e-12;
const MONOTONE_TOL: f64 = 1e-6;
const CERTIFY_TOL: f64 = 1e-6;
// Coefficients below this fraction of their largest possible size are noise.
const COEFF_ZERO_REL: f64 = 1e-9;

/// A score that may be `+∞` (a node polynomial vanishing at the origin).
/// `+∞` is strictly greater than every finite value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectiveScore {
    Finite(f64),
    Infinite,
}

impl ObjectiveScore {
    pub fn value(&self) -> f64 {
        match *self {
            ObjectiveScore::Finite(v) => v,
            ObjectiveScore::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ObjectiveScore::Infinite)
    }

    fn key(&self) -> (bool, f64) {
        match *self {
            ObjectiveScore::Finite(v) => (false, v),
            ObjectiveScore::Infinite => (true, 0.0),
        }
    }
}

impl PartialOrd for ObjectiveScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.key().partial_cmp(&other.key())
    }
}

fn maximizes(kind: ObjectiveKind) -> bool {
    matches!(kind, ObjectiveKind::E | ObjectiveKind::D)
}

/// Per-objective score of a node polynomial of degree `d`.
pub fn node_score(p: &RealRootedPoly, kind: ObjectiveKind) -> Result<ObjectiveScore> {
    node_score_with(p, kind, DEFAULT_ROOT_EPS)
}

pub fn node_score_with(
    p: &RealRootedPoly,
    kind: ObjectiveKind,
    eps: f64,
) -> Result<ObjectiveScore> {
    let d = p.degree();
    let ratio = |top: usize, bottom: usize, sign: f64| {
        let den = p.coeff(bottom);
        if negligible(p, bottom) {
            ObjectiveScore::Infinite
        } else {
            ObjectiveScore::Finite(sign * p.coeff(top) / den)
        }
    };
    Ok(match kind {
        ObjectiveKind::E => ObjectiveScore::Finite(p.min_root(eps)?),
        ObjectiveKind::D => {
            let sign = if d.is_multiple_of(2) { 1.0 } else { -1.0 };
            ObjectiveScore::Finite(sign * p.coeff(0))
        }
        ObjectiveKind::A => ratio(1, 0, -1.0),
        ObjectiveKind::Ratio { l_prime, l } => {
            kind.validate(d, l)?;
            let sign = if (l - l_prime) % 2 == 0 { 1.0 } else { -1.0 };
            ratio(d - l_prime, d - l, sign)
        }
    })
}

/// Whether `[x^power]p` is roundoff. With roots `r_i >= 0` summing to `R`,
/// `|[x^j]p| = e_{d-j}(r) <= C(d, j) (R/d)^{d-j}`.
fn negligible(p: &RealRootedPoly, power: usize) -> bool {
    let d = p.degree();
    let c = p.coeff(power).abs();
    if power >= d || c == 0.0 {
        return c == 0.0;
    }
    let mean_root = p.coeff(d - 1).abs() / d as f64;
    let binom: f64 = (0..power)
        .map(|j| (d - j) as f64 / (j + 1) as f64)
        .product();
    c <= COEFF_ZERO_REL * binom * mean_root.powi((d - power) as i32)
}

/// Tuning for [`round_design_with`].
#[derive(Clone, Copy, Debug)]
pub struct RoundingOptions {
    /// Additive accuracy of minimum roots (E-design scores).
    pub eps: f64,
    /// Relative eigenvalue cutoff for the E-design normalization `X^{-1/2}`.
    pub rel_cutoff: f64,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_ROOT_EPS,
            rel_cutoff: DEFAULT_REL_CUTOFF,
        }
    }
}

/// One step of the descent.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    /// 0-based index fixed at this level.
    pub selected: usize,
    pub parent_score: ObjectiveScore,
    pub selected_score: ObjectiveScore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingResult {
    pub kind: ObjectiveKind,
    /// 0-based indices, in the order they were fixed. Repeats are allowed.
    pub selection: Vec<usize>,
    /// Minimization-form objective of `Σ v_{s_i} v_{s_i}^T`.
    pub integral_objective: f64,
    /// Minimization-form objective of the fractional solution.
    pub fractional_objective: f64,
    /// `integral_objective / fractional_objective`.
    pub certified_ratio: f64,
    pub theorem_bound: f64,
    pub root_score: ObjectiveScore,
    pub levels: Vec<LevelRecord>,
    /// E-design only: `λ_min(Σ w_{s_i} w_{s_i}^T)` with `w = X^{-1/2} v`.
    pub normalized_lambda_min: Option<f64>,
}

pub fn round_design(
    inst: &Instance,
    frac: &FractionalSolution,
    kind: ObjectiveKind,
) -> Result<RoundingResult> {
    round_design_with(inst, frac, kind, RoundingOptions::default())
}

pub fn round_design_with(
    inst: &Instance,
    frac: &FractionalSolution,
    kind: ObjectiveKind,
    opts: RoundingOptions,
) -> Result<RoundingResult> {
    let (d, k, m) = (inst.d(), inst.k(), inst.m());
    kind.validate(d, k)?;
    if frac.x.len() != m {
        return Err(Error::InvalidInstance(format!(
            "fractional solution has {} entries for {m} vectors",
            frac.x.len()
        )));
    }
    let x_gram = linalg::gram(&frac.x, inst.vectors())?;
    let vectors: Vec<Vec<f64>> = match kind {
        ObjectiveKind::E => {
            let root = linalg::inv_sqrt(&x_gram, opts.rel_cutoff)?;
            inst.vectors().iter().map(|v| root.mul_vec(v)).collect()
        }
        _ => inst.vectors().to_vec(),
    };
    let ctx = FamilyContext::new(vectors, frac.x.clone(), k)?;

    let root_poly = family::conditional_expected_charpoly(&ctx, &ctx.root())?;
    let root_score = node_score_with(&root_poly, kind, opts.eps)?;
    let mut node = ctx.root();
    let mut parent_score = root_score;
    let mut levels = Vec::with_capacity(k);
    for level in 1..=k {
        let scores: Vec<ObjectiveScore> = (0..m)
            .into_par_iter()
            .map(|t| {
                let child = node.child(&ctx, t)?;
                let p = family::conditional_expected_charpoly(&ctx, &child)?;
                node_score_with(&p, kind, opts.eps)
            })
            .collect::<Result<_>>()?;
        let best = argbest(&scores, maximizes(kind));
        let selected_score = scores[best];
        if regressed(kind, parent_score, selected_score) {
            return Err(Error::GuaranteeViolated {
                level,
                parent: parent_score.value(),
                selected: selected_score.value(),
            });
        }
        levels.push(LevelRecord {
            selected: best,
            parent_score,
            selected_score,
        });
        node = node.child(&ctx, best)?;
        parent_score = selected_score;
    }

    let selection = node.prefix().to_vec();
    let integral = linalg::gram_of_selection(&selection, inst.vectors())?;
    let integral_objective = objective_or_infinity(&integral, kind)?;
    let fractional_objective = objective_or_infinity(&x_gram, kind)?;
    let normalized_lambda_min = match kind {
        ObjectiveKind::E => Some(linalg::sym_eigen(node.gram())?.min()),
        _ => None,
    };
    Ok(RoundingResult {
        kind,
        selection,
        integral_objective,
        fractional_objective,
        certified_ratio: integral_objective / fractional_objective,
        theorem_bound: theorem_bound(kind, d, k),
        root_score,
        levels,
        normalized_lambda_min,
    })
}

/// Lowest index among the best scores; near-ties within `TIE_REL` count as ties.
fn argbest(scores: &[ObjectiveScore], maximize: bool) -> usize {
    let mut best = 0;
    for (t, s) in scores.iter().enumerate().skip(1) {
        let cur = scores[best];
        let better = match (s, cur) {
            (ObjectiveScore::Finite(a), ObjectiveScore::Finite(b)) => {
                let margin = TIE_REL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                if maximize {
                    *a > b + margin
                } else {
                    *a < b - margin
                }
            }
            _ => {
                if maximize {
                    *s > cur
                } else {
                    *s < cur
                }
            }
        };
        if better {
            best = t;
        }
    }
    best
}

fn regressed(kind: ObjectiveKind, parent: ObjectiveScore, selected: ObjectiveScore) -> bool {
    match (parent, selected) {
        (ObjectiveScore::Finite(p), ObjectiveScore::Finite(s)) => match kind {
            ObjectiveKind::E => s < p - MONOTONE_TOL,
            ObjectiveKind::D => s < p - MONOTONE_TOL * p.abs(),
            _ => s > p + MONOTONE_TOL * p.abs(),
        },
        (ObjectiveScore::Infinite, _) => maximizes(kind),
        (ObjectiveScore::Finite(_), ObjectiveScore::Infinite) => !maximizes(kind),
    }
}

/// `n (n-1) … (n-r+1)` in log space.
fn ln_falling(n: usize, r: usize) -> f64 {
    (0..r).map(|j| ((n - j) as f64).ln()).sum()
}

/// Worst-case ratio of integral to fractional objective (minimization form).
pub fn theorem_bound(kind: ObjectiveKind, d: usize, k: usize) -> f64 {
    let kf = k as f64;
    match kind {
        ObjectiveKind::E => {
            let g = 1.0 - ((d as f64 - 1.0) / kf).sqrt();
            1.0 / (g * g)
        }
        ObjectiveKind::D => kf * (-ln_falling(k, d) / d as f64).exp(),
        ObjectiveKind::A => kf / (kf - d as f64 + 1.0),
        ObjectiveKind::Ratio { l_prime, l } => {
            let span = l - l_prime;
            let ln_prod = ln_falling(k - l_prime, span);
            kf * (-ln_prod / span as f64).exp()
        }
    }
}

/// `(e·l/(l-l'))^{l-l'}`: the bound on the un-exponentiated ratio when `k = l`.
pub fn stirling_ratio_bound(l_prime: usize, l: usize) -> f64 {
    let span = (l - l_prime) as f64;
    (std::f64::consts::E * l as f64 / span).powf(span)
}

/// Whether the rounded objective is within the theorem bound of the fractional one.
pub fn certify(result: &RoundingResult, frac: &FractionalSolution, kind: ObjectiveKind) -> bool {
    let k = result.selection.len();
    let d = frac.gram.dim();
    let Ok(fractional) = objective_or_infinity(&frac.gram, kind) else {
        return false;
    };
    let bound = theorem_bound(kind, d, k);
    let mut ok = result.integral_objective <= bound * fractional * (1.0 + CERTIFY_TOL);
    if let ObjectiveKind::Ratio { l_prime, l } = kind {
        if k == l {
            let span = (l - l_prime) as i32;
            let lhs = result.integral_objective.powi(span);
            ok &= lhs
                <= stirling_ratio_bound(l_prime, l) * fractional.powi(span) * (1.0 + CERTIFY_TOL);
        }
    }
    ok
}
