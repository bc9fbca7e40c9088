//! Polynomials of the interlacing family.
//!
//! A node at level `i` is labeled by a prefix `(s_1, …, s_i)`. Its polynomial
//! is the expected characteristic polynomial of `Σ_{j≤k} u_j u_j^T` where
//! `u_j = v_{s_j}` for `j ≤ i` and the remaining `k - i` draws are i.i.d.,
//! picking `v_t` with probability `x(t)/k`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::poly::RealRootedPoly;

const WEIGHT_SUM_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-8;
const LEADING_TOL: f64 = 1e-8;
const DIVISIBILITY_TOL: f64 = 1e-8;

/// Vectors, fractional weights and the derived sampling distribution.
#[derive(Clone, Debug)]
pub struct FamilyContext {
    vectors: Vec<Vec<f64>>,
    x: Vec<f64>,
    k: usize,
    gram: SymMatrix,
    probabilities: Vec<f64>,
}

impl FamilyContext {
    /// `x` must be nonnegative with `Σ x = k`.
    pub fn new(vectors: Vec<Vec<f64>>, x: Vec<f64>, k: usize) -> Result<Self> {
        linalg::vector_dim(&vectors)?;
        if k == 0 {
            return Err(Error::InvalidInstance("budget k must be positive".into()));
        }
        if x.len() != vectors.len() {
            return Err(Error::InvalidInstance(format!(
                "{} weights for {} vectors",
                x.len(),
                vectors.len()
            )));
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeWeight { index, value });
        }
        let probabilities: Vec<f64> = x.iter().map(|v| v / k as f64).collect();
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSumError { sum });
        }
        let gram = linalg::gram(&x, &vectors)?;
        Ok(Self {
            vectors,
            x,
            k,
            gram,
            probabilities,
        })
    }

    pub fn d(&self) -> usize {
        self.gram.dim()
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

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `M = Σ x(i) v_i v_i^T`.
    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn root(&self) -> PartialSelection {
        PartialSelection {
            prefix: Vec::new(),
            gram: SymMatrix::zeros(self.d()),
        }
    }

    pub fn selection(&self, prefix: &[usize]) -> Result<PartialSelection> {
        prefix
            .iter()
            .try_fold(self.root(), |node, &t| node.child(self, t))
    }
}

/// A tree node: the fixed prefix and `A = Σ_{j≤i} v_{s_j} v_{s_j}^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSelection {
    prefix: Vec<usize>,
    gram: SymMatrix,
}

impl PartialSelection {
    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn child(&self, ctx: &FamilyContext, t: usize) -> Result<PartialSelection> {
        if self.len() >= ctx.k() {
            return Err(Error::InvalidInstance(format!(
                "node already holds k = {} indices",
                ctx.k()
            )));
        }
        let v = ctx.vectors.get(t).ok_or_else(|| {
            Error::InvalidInstance(format!("index {t} out of range for {} vectors", ctx.m()))
        })?;
        let mut prefix = self.prefix.clone();
        prefix.push(t);
        Ok(PartialSelection {
            prefix,
            gram: self.gram.with_outer(v, 1.0),
        })
    }
}

/// `x^{d-k} Π_i (1 - (λ_i/k) ∂) x^k`.
pub fn root_poly_closed_form(eigs: &[f64], k: usize) -> Result<RealRootedPoly> {
    let d = eigs.len();
    if k < d {
        return Err(Error::InvalidInstance(format!(
            "closed form needs k >= d, got k = {k}, d = {d}"
        )));
    }
    let mut p = RealRootedPoly::monomial(k);
    for &lam in eigs {
        p = p.apply_shift_op(lam / k as f64);
    }
    let tol = DIVISIBILITY_TOL * p.max_abs_coeff().max(1.0);
    p.divide_by_x_power(k - d, tol)
}

/// `(1 - ∂/k)^k x^d`.
pub fn normalized_root_poly(k: usize, d: usize) -> RealRootedPoly {
    let mut p = RealRootedPoly::monomial(d);
    for _ in 0..k {
        p = p.apply_shift_op(1.0 / k as f64);
    }
    p
}

/// `p(t) = x(t)/k`.
pub fn children_weights(ctx: &FamilyContext) -> Vec<f64> {
    ctx.probabilities.clone()
}

/// The node polynomial `f_{s_1..s_i}`.
///
/// With `n = k - i` draws left and `Q(x, s) = det(xI - A + sM/k)`,
///
/// ```text
/// f(x) = Σ_r (-1)^r n(n-1)…(n-r+1) [s^r] Q(x, s).
/// ```
///
/// `Q` has total degree `d`, so its coefficients are recovered exactly from
/// values on a `(d+1) × (d+1)` grid of scaled roots of unity by a 2-D DFT.
pub fn conditional_expected_charpoly(
    ctx: &FamilyContext,
    node: &PartialSelection,
) -> Result<RealRootedPoly> {
    let d = ctx.d();
    let i = node.len();
    if i > ctx.k() {
        return Err(Error::InvalidInstance(format!(
            "prefix of length {i} exceeds k = {}",
            ctx.k()
        )));
    }
    let n = ctx.k() - i;
    if n == 0 {
        return linalg::char_poly(node.gram());
    }

    let a = node.gram().as_matrix();
    let w = ctx.gram().as_matrix() / ctx.k() as f64;
    let rho_x = match (a.trace() + n as f64 * w.trace()) / d as f64 {
        r if r > 0.0 => r,
        _ => 1.0,
    };
    let rho_s = n as f64;
    let size = d + 1;
    let roots: Vec<Complex<f64>> = (0..size)
        .map(|j| Complex::from_polar(1.0, 2.0 * PI * j as f64 / size as f64))
        .collect();

    let a_c = a.map(|v| Complex::new(v, 0.0));
    let w_c = w.map(|v| Complex::new(v, 0.0));
    let identity = DMatrix::<Complex<f64>>::identity(d, d);
    let values: Vec<Complex<f64>> = (0..size * size)
        .map(|idx| {
            let (ax, bs) = (idx / size, idx % size);
            let xv = roots[ax] * rho_x;
            let sv = roots[bs] * rho_s;
            let m = &identity * xv - &a_c + &w_c * sv;
            m.lu().determinant()
        })
        .collect();

    // c[p][q] = coefficient of X^p S^q in Q(ρ_x X, ρ_s S).
    let mut scaled = vec![vec![Complex::new(0.0, 0.0); size]; size];
    for (p, row) in scaled.iter_mut().enumerate() {
        for (q, entry) in row.iter_mut().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for ax in 0..size {
                for bs in 0..size {
                    let phase = roots[(ax * p + bs * q) % size].conj();
                    acc += values[ax * size + bs] * phase;
                }
            }
            *entry = acc / (size * size) as f64;
        }
    }

    let magnitude = scaled
        .iter()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let imag = scaled
        .iter()
        .flatten()
        .map(|c| c.im.abs())
        .fold(0.0, f64::max);
    if imag > IMAG_TOL * magnitude.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "interpolated coefficients have imaginary part {imag:e}"
        )));
    }

    let mut coeffs = vec![0.0; size];
    for (p, coeff) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut falling = 1.0;
        for q in 0..=(d - p).min(n) {
            if q > 0 {
                falling *= (n - q + 1) as f64 / rho_s;
            }
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * falling * scaled[p][q].re;
        }
        *coeff = acc / rho_x.powi(p as i32);
    }
    if (coeffs[d] - 1.0).abs() > LEADING_TOL {
        return Err(Error::NumericalFailure(format!(
            "interpolated leading coefficient is {}",
            coeffs[d]
        )));
    }
    coeffs[d] = 1.0;
    Ok(RealRootedPoly::from_coeffs(coeffs))
}

/// Polynomials of all `m` children of `node`, evaluated in parallel.
pub fn children_polys(ctx: &FamilyContext, node: &PartialSelection) -> Result<Vec<RealRootedPoly>> {
    (0..ctx.m())
        .into_par_iter()
        .map(|t| conditional_expected_charpoly(ctx, &node.child(ctx, t)?))
        .collect()
}
