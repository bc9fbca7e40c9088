//! Univariate real polynomials, the `(1 - λ∂)` operator calculus and
//! minimum-root extraction for real-rooted polynomials.

pub mod exact;

use crate::error::{Error, Result};

/// Default additive accuracy for minimum roots.
pub const DEFAULT_ROOT_EPS: f64 = 1e-9;

const MAX_NEWTON_ITERS: usize = 100_000;
// |p(x)| below this fraction of Σ|c_j||x|^j is indistinguishable from zero.
const ROUNDOFF_REL: f64 = 1e-10;

/// Dense polynomial with coefficients in ascending powers.
///
/// Family polynomials are monic and real-rooted; the type does not check
/// real-rootedness (that is a contract of whoever builds the value).
#[derive(Clone, Debug, PartialEq)]
pub struct RealRootedPoly {
    coeffs: Vec<f64>,
}

impl RealRootedPoly {
    /// Builds from ascending coefficients, dropping exact trailing zeros.
    pub fn from_coeffs(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    /// `x^k`
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    /// `Π (x - r_i)`
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (j, &c) in coeffs.iter().enumerate() {
                next[j + 1] += c;
                next[j] -= r * c;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Coefficient of `x^power` (zero past the degree).
    pub fn coeff(&self, power: usize) -> f64 {
        self.coeffs.get(power).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    fn magnitude_at(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    /// The `order`-th derivative. Orders past the degree give the zero polynomial.
    pub fn derivative(&self, order: usize) -> Self {
        if order == 0 {
            return self.clone();
        }
        if order > self.degree() {
            return Self::zero();
        }
        let coeffs = (order..self.coeffs.len())
            .map(|j| {
                let falling: f64 = ((j - order + 1)..=j).map(|t| t as f64).product();
                self.coeffs[j] * falling
            })
            .collect();
        Self::from_coeffs(coeffs)
    }

    /// `(1 - λ∂) p = p - λ p'`. Preserves degree, leading coefficient and
    /// real-rootedness.
    pub fn apply_shift_op(&self, lambda: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        for j in 0..self.degree() {
            coeffs[j] -= lambda * (j + 1) as f64 * self.coeffs[j + 1];
        }
        Self { coeffs }
    }

    /// `p + α p'`
    pub fn add_scaled_derivative(&self, alpha: f64) -> Self {
        self.apply_shift_op(-alpha)
    }

    /// Divides by `x^power`, failing if any dropped coefficient exceeds `tol`.
    pub fn divide_by_x_power(&self, power: usize, tol: f64) -> Result<Self> {
        if power > self.degree() {
            return Err(Error::NotDivisible {
                power,
                coefficient: self.leading(),
            });
        }
        if let Some(&bad) = self.coeffs[..power].iter().find(|c| c.abs() > tol) {
            return Err(Error::NotDivisible {
                power,
                coefficient: bad,
            });
        }
        Ok(Self::from_coeffs(self.coeffs[power..].to_vec()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Largest coefficient difference (missing coefficients count as zero).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|j| (self.coeff(j) - other.coeff(j)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    /// Smallest root of a real-rooted polynomial, within `eps`.
    ///
    /// Newton's method started below every root increases monotonically to
    /// `λ_min`. With step `δ`, real-rootedness gives `λ_min - x ≤ deg · δ`,
    /// which is the stopping rule.
    pub fn min_root(&self, eps: f64) -> Result<f64> {
        let d = self.degree();
        let lead = self.leading();
        if d == 0 || lead == 0.0 {
            return Err(Error::NumericalFailure(
                "min_root of a constant polynomial".into(),
            ));
        }
        if d == 1 {
            return Ok(-self.coeffs[0] / lead);
        }
        let mut x = -self.root_bound();
        for _ in 0..MAX_NEWTON_ITERS {
            let (p, dp) = self.eval_with_derivative(x);
            if p == 0.0 {
                return Ok(x);
            }
            let step = -p / dp;
            if !(step.is_finite() && step > 0.0) {
                if p.abs() <= ROUNDOFF_REL * self.magnitude_at(x) {
                    return Ok(x);
                }
                return Err(Error::NumericalFailure(format!(
                    "Newton iteration is not monotone at x = {x} (p = {p:e}, p' = {dp:e}); \
                     polynomial may not be real-rooted"
                )));
            }
            x += step;
            if step * (d as f64) <= eps {
                return Ok(x);
            }
        }
        Err(Error::NumericalFailure(
            "min_root did not converge within the iteration cap".into(),
        ))
    }

    /// `α_min(p) = λ_min(p + α p')`.
    pub fn alpha_min(&self, params: SoftMinParams, eps: f64) -> Result<f64> {
        self.add_scaled_derivative(params.alpha()).min_root(eps)
    }

    /// Fujiwara bound on root magnitudes, nudged outward so the Newton start
    /// is strictly below every root.
    fn root_bound(&self) -> f64 {
        let d = self.degree();
        let lead = self.leading();
        let mut bound = 0.0_f64;
        for j in 1..=d {
            let ratio = (self.coeffs[d - j] / lead).abs();
            let ratio = if j == d { ratio / 2.0 } else { ratio };
            bound = bound.max(ratio.powf(1.0 / j as f64));
        }
        let bound = 2.0 * bound;
        if bound == 0.0 {
            1.0
        } else {
            bound * (1.0 + 1e-9) + f64::MIN_POSITIVE
        }
    }
}

/// Coefficientwise weighted sum of equal-degree polynomials.
pub fn convex_combination(polys: &[RealRootedPoly], weights: &[f64]) -> Result<RealRootedPoly> {
    let first = polys
        .first()
        .ok_or_else(|| Error::InvalidInstance("empty convex combination".into()))?;
    if polys.len() != weights.len() {
        return Err(Error::InvalidInstance(format!(
            "{} polynomials but {} weights",
            polys.len(),
            weights.len()
        )));
    }
    let degree = first.degree();
    if let Some(bad) = polys.iter().find(|p| p.degree() != degree) {
        return Err(Error::DegreeMismatch {
            expected: degree,
            found: bad.degree(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSumError { sum });
    }
    let mut coeffs = vec![0.0; degree + 1];
    for (p, &w) in polys.iter().zip(weights) {
        for (acc, c) in coeffs.iter_mut().zip(p.coeffs()) {
            *acc += w * c;
        }
    }
    Ok(RealRootedPoly::from_coeffs(coeffs))
}

/// Parameter of the soft minimum `α_min`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftMinParams {
    alpha: f64,
}

impl SoftMinParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self { alpha })
        } else {
            Err(Error::InvalidInstance(format!(
                "soft-min alpha must be positive, got {alpha}"
            )))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}
