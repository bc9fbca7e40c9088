//! Relaxation solvers.
//!
//! D and A start with the classical multiplicative weight iterations. When
//! those stall before the first-order certificate is met, and for the ratio
//! and E objectives, a log-barrier path-following Newton method over the
//! scaled simplex `{x > 0, Σ x = k}` takes over.

use nalgebra::{DMatrix, DVector};

use super::spectral::esym_derivatives;
use super::{Instance, ObjectiveKind, SolverCertificate, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

const MULTIPLICATIVE_BUDGET: usize = 5_000;
const CENTERING_STEPS: usize = 200;
const TAU_GROWTH: f64 = 10.0;
const DECREMENT_TOL: f64 = 1e-11;
const QUADRATIC_REGION: f64 = 0.1;

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub certificate: SolverCertificate,
}

fn certificate(
    measure: f64,
    tol: f64,
    iterations: usize,
    method: &'static str,
    dual_bound: Option<f64>,
) -> SolverCertificate {
    SolverCertificate {
        measure,
        threshold: tol,
        certified: measure <= tol,
        iterations,
        method,
        dual_bound,
    }
}

fn normalize(x: &mut [f64], k: usize) {
    let sum: f64 = x.iter().sum();
    let factor = k as f64 / sum;
    x.iter_mut().for_each(|v| *v *= factor);
}

fn inverse(m: &SymMatrix) -> Result<SymMatrix> {
    let spec = linalg::sym_eigen(m)?;
    if spec.min() <= 0.0 {
        return Err(Error::SingularMatrix {
            min_eig: spec.min(),
            max_eig: spec.max(),
        });
    }
    Ok(spec.map(|l| 1.0 / l))
}

/// `v_i^T X^{-1} v_i` for every `i`.
fn leverage(vectors: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    let xinv = inverse(&linalg::gram(x, vectors)?)?;
    Ok(vectors.iter().map(|v| xinv.quad_form(v)).collect())
}

/// `(v_i^T X^{-2} v_i, tr X^{-1})`.
fn inverse_square_forms(vectors: &[Vec<f64>], x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let xinv = inverse(&linalg::gram(x, vectors)?)?;
    let h = vectors
        .iter()
        .map(|v| xinv.mul_vec(v).iter().map(|c| c * c).sum())
        .collect();
    Ok((h, xinv.trace()))
}

/// One multiplicative D-optimal update `x_i ← x_i · k · v_i^T X^{-1} v_i / d`.
/// The update never decreases `det(X)`.
pub fn multiplicative_d_step(vectors: &[Vec<f64>], x: &[f64], k: usize) -> Result<Vec<f64>> {
    let d = linalg::vector_dim(vectors)?;
    let g = leverage(vectors, x)?;
    let mut next: Vec<f64> = x
        .iter()
        .zip(&g)
        .map(|(xi, gi)| xi * k as f64 * gi / d as f64)
        .collect();
    normalize(&mut next, k);
    Ok(next)
}

/// One multiplicative A-optimal update
/// `x_i ← x_i · sqrt(v_i^T X^{-2} v_i / (tr(X^{-1}) / k))`, renormalized to `Σ x = k`.
pub fn multiplicative_a_step(vectors: &[Vec<f64>], x: &[f64], k: usize) -> Result<Vec<f64>> {
    let (h, trace) = inverse_square_forms(vectors, x)?;
    let mean = trace / k as f64;
    let mut next: Vec<f64> = x
        .iter()
        .zip(&h)
        .map(|(xi, hi)| xi * (hi / mean).sqrt())
        .collect();
    normalize(&mut next, k);
    Ok(next)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn smooth_gap(inst: &Instance, x: &[f64], kind: ObjectiveKind) -> Result<f64> {
    let k = inst.k() as f64;
    match kind {
        ObjectiveKind::D => {
            let g = leverage(inst.vectors(), x)?;
            Ok(k * max_of(&g) / inst.d() as f64 - 1.0)
        }
        ObjectiveKind::A => {
            let (h, trace) = inverse_square_forms(inst.vectors(), x)?;
            Ok(k * max_of(&h) / trace - 1.0)
        }
        ObjectiveKind::Ratio { l_prime, l } => {
            let grad = ratio_gradient(inst.vectors(), x, l_prime, l)?;
            let along: f64 = x.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let best = grad.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(along - k * best)
        }
        ObjectiveKind::E => Err(Error::InvalidInstance(
            "E-design has no smooth first-order certificate".into(),
        )),
    }
}

/// Gradient of `log E_{l'}(X) - log E_l(X)` with respect to `x`.
fn ratio_gradient(vectors: &[Vec<f64>], x: &[f64], l_prime: usize, l: usize) -> Result<Vec<f64>> {
    let spec = linalg::sym_eigen(&linalg::gram(x, vectors)?)?;
    let projected: Vec<Vec<f64>> = vectors.iter().map(|v| spec.project(v)).collect();
    let top = esym_derivatives(&spec, &projected, l_prime, false);
    let bottom = esym_derivatives(&spec, &projected, l, false);
    if !(bottom.value > 0.0 && top.value > 0.0) {
        return Err(Error::SingularMatrix {
            min_eig: spec.min(),
            max_eig: spec.max(),
        });
    }
    Ok(top
        .grad
        .iter()
        .zip(&bottom.grad)
        .map(|(a, b)| a / top.value - b / bottom.value)
        .collect())
}

fn run_multiplicative(
    inst: &Instance,
    opts: SolverOptions,
    kind: ObjectiveKind,
) -> Result<(Vec<f64>, usize, f64)> {
    let budget = opts.max_iters.min(MULTIPLICATIVE_BUDGET);
    let mut x = inst.uniform_weights();
    let mut measure = smooth_gap(inst, &x, kind)?;
    let mut iters = 0;
    while measure > opts.tol && iters < budget {
        x = match kind {
            ObjectiveKind::D => multiplicative_d_step(inst.vectors(), &x, inst.k())?,
            _ => multiplicative_a_step(inst.vectors(), &x, inst.k())?,
        };
        iters += 1;
        measure = smooth_gap(inst, &x, kind)?;
    }
    Ok((x, iters, measure))
}

pub(crate) fn solve_d(inst: &Instance, opts: SolverOptions) -> Result<Outcome> {
    solve_with_multiplicative_start(inst, opts, ObjectiveKind::D, "multiplicative-d")
}

pub(crate) fn solve_a(inst: &Instance, opts: SolverOptions) -> Result<Outcome> {
    solve_with_multiplicative_start(inst, opts, ObjectiveKind::A, "multiplicative-a")
}

fn solve_with_multiplicative_start(
    inst: &Instance,
    opts: SolverOptions,
    kind: ObjectiveKind,
    method: &'static str,
) -> Result<Outcome> {
    let (x, iters, measure) = run_multiplicative(inst, opts, kind)?;
    if measure <= opts.tol || iters >= opts.max_iters {
        return Ok(Outcome {
            x,
            certificate: certificate(measure, opts.tol, iters, method, None),
        });
    }
    let (l_prime, l) = kind
        .ratio_orders(inst.d())
        .expect("D and A are ratio objectives");
    let remaining = SolverOptions {
        max_iters: opts.max_iters - iters,
        ..opts
    };
    let mut out = barrier_ratio(inst, l_prime, l, remaining, kind)?;
    out.certificate.iterations += iters;
    Ok(out)
}

pub(crate) fn solve_ratio(
    inst: &Instance,
    l_prime: usize,
    l: usize,
    opts: SolverOptions,
) -> Result<Outcome> {
    barrier_ratio(inst, l_prime, l, opts, ObjectiveKind::Ratio { l_prime, l })
}

/// Problem in `z` with the single equality constraint `Σ_{i in budget} z_i = const`.
trait Barrier {
    fn budget_len(&self) -> usize;
    fn value(&self, z: &[f64]) -> Option<f64>;
    fn grad_hess(&self, z: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)>;
}

/// Damped Newton centering; returns the number of Newton steps taken.
fn center<B: Barrier>(problem: &B, z: &mut [f64], max_steps: usize) -> usize {
    let n = z.len();
    for step in 0..max_steps {
        let Some(f0) = problem.value(z) else {
            return step;
        };
        let Some((g, h)) = problem.grad_hess(z) else {
            return step;
        };
        // Symmetric Jacobi scaling: barrier Hessians mix 1/x_i^2 terms with
        // O(1) curvature, which unscaled LU resolves poorly.
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let hii = h[(i, i)];
                if hii > 0.0 && hii.is_finite() {
                    1.0 / hii.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut kkt = DMatrix::zeros(n + 1, n + 1);
        for j in 0..n {
            for i in 0..n {
                kkt[(i, j)] = scale[i] * h[(i, j)] * scale[j];
            }
        }
        for i in 0..problem.budget_len() {
            kkt[(i, n)] = scale[i];
            kkt[(n, i)] = scale[i];
        }
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -g[i] * scale[i];
        }
        let sol = match kkt.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                for i in 0..n {
                    kkt[(i, i)] += 1e-10;
                }
                match kkt.lu().solve(&rhs) {
                    Some(s) if s.iter().all(|v| v.is_finite()) => s,
                    _ => return step,
                }
            }
        };
        let sol: Vec<f64> = (0..n).map(|i| sol[i] * scale[i]).collect();
        let dz: Vec<f64> = sol.iter().take(n).copied().collect();
        let slope: f64 = g.iter().zip(&dz).map(|(a, b)| a * b).sum();
        if !(-slope / 2.0 > DECREMENT_TOL) {
            return step;
        }
        let mut alpha = 1.0;
        let mut trial = vec![0.0; n];
        // Inside the quadratic region a full step is safe; the value itself
        // is too coarse at large tau to drive a line search.
        if -slope < QUADRATIC_REGION {
            for i in 0..n {
                trial[i] = z[i] + dz[i];
            }
            if problem.value(&trial).is_some() {
                z.copy_from_slice(&trial);
                continue;
            }
        }
        loop {
            for i in 0..n {
                trial[i] = z[i] + alpha * dz[i];
            }
            if let Some(f) = problem.value(&trial) {
                if f <= f0 + 0.25 * alpha * slope {
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return step + 1;
            }
        }
        z.copy_from_slice(&trial);
    }
    max_steps
}

struct RatioBarrier<'a> {
    vectors: &'a [Vec<f64>],
    l_prime: usize,
    l: usize,
    tau: f64,
}

impl Barrier for RatioBarrier<'_> {
    fn budget_len(&self) -> usize {
        self.vectors.len()
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        if x.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let spec = linalg::sym_eigen(&linalg::gram(x, self.vectors).ok()?).ok()?;
        let e = linalg::elementary_symmetric(&spec.eigenvalues, self.l);
        if !(e[self.l] > 0.0 && e[self.l_prime] > 0.0) {
            return None;
        }
        let phi = e[self.l_prime].ln() - e[self.l].ln();
        Some(self.tau * phi - x.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn grad_hess(&self, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let m = x.len();
        let spec = linalg::sym_eigen(&linalg::gram(x, self.vectors).ok()?).ok()?;
        let projected: Vec<Vec<f64>> = self.vectors.iter().map(|v| spec.project(v)).collect();
        let top = esym_derivatives(&spec, &projected, self.l_prime, true);
        let bottom = esym_derivatives(&spec, &projected, self.l, true);
        if !(top.value > 0.0 && bottom.value > 0.0) {
            return None;
        }
        let gt = DVector::from_iterator(m, top.grad.iter().map(|g| g / top.value));
        let gb = DVector::from_iterator(m, bottom.grad.iter().map(|g| g / bottom.value));
        let ht = top.hess? / top.value - &gt * gt.transpose();
        let hb = bottom.hess? / bottom.value - &gb * gb.transpose();
        let mut grad = (&gt - &gb) * self.tau;
        let mut hess = (ht - hb) * self.tau;
        for i in 0..m {
            grad[i] -= 1.0 / x[i];
            hess[(i, i)] += 1.0 / (x[i] * x[i]);
        }
        Some((grad, hess))
    }
}

fn barrier_ratio(
    inst: &Instance,
    l_prime: usize,
    l: usize,
    opts: SolverOptions,
    kind: ObjectiveKind,
) -> Result<Outcome> {
    let m = inst.m();
    let mut x = inst.uniform_weights();
    let mut tau = m as f64;
    let mut steps = 0;
    loop {
        let problem = RatioBarrier {
            vectors: inst.vectors(),
            l_prime,
            l,
            tau,
        };
        let budget = CENTERING_STEPS.min(opts.max_iters.saturating_sub(steps));
        steps += center(&problem, &mut x, budget).max(1);
        normalize(&mut x, inst.k());
        let measure = smooth_gap(inst, &x, kind)?;
        if measure <= opts.tol || steps >= opts.max_iters || tau > 1e16 {
            return Ok(Outcome {
                x,
                certificate: certificate(measure, opts.tol, steps, "log-barrier-newton", None),
            });
        }
        tau *= TAU_GROWTH;
    }
}

/// Barrier for `max t` subject to `X(x) - tI ≻ 0`, `x > 0`, `Σ x = k`.
struct EBarrier<'a> {
    vectors: &'a [Vec<f64>],
    tau: f64,
}

impl EBarrier<'_> {
    fn slack(&self, z: &[f64]) -> Option<SymMatrix> {
        let m = self.vectors.len();
        let (x, t) = (&z[..m], z[m]);
        let x_mat = linalg::gram(x, self.vectors).ok()?;
        let d = x_mat.dim();
        Some(x_mat.sub(&SymMatrix::identity(d).scaled(t)))
    }
}

impl Barrier for EBarrier<'_> {
    fn budget_len(&self) -> usize {
        self.vectors.len()
    }

    fn value(&self, z: &[f64]) -> Option<f64> {
        let m = self.vectors.len();
        if z[..m].iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let chol = self.slack(z)?.as_matrix().clone().cholesky()?;
        let log_det: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|v| v.ln())
                .sum::<f64>();
        Some(-self.tau * z[m] - log_det - z[..m].iter().map(|v| v.ln()).sum::<f64>())
    }

    fn grad_hess(&self, z: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let m = self.vectors.len();
        let p = self.slack(z)?.as_matrix().clone().cholesky()?.inverse();
        let pv: Vec<DVector<f64>> = self
            .vectors
            .iter()
            .map(|v| &p * DVector::from_column_slice(v))
            .collect();
        let mut grad = DVector::zeros(m + 1);
        let mut hess = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            let vi = &self.vectors[i];
            let quad: f64 = vi.iter().zip(pv[i].iter()).map(|(a, b)| a * b).sum();
            grad[i] = -quad - 1.0 / z[i];
            for j in i..m {
                let cross: f64 = vi.iter().zip(pv[j].iter()).map(|(a, b)| a * b).sum();
                hess[(i, j)] = cross * cross;
                hess[(j, i)] = cross * cross;
            }
            hess[(i, i)] += 1.0 / (z[i] * z[i]);
            let sq = pv[i].norm_squared();
            hess[(i, m)] = -sq;
            hess[(m, i)] = -sq;
        }
        grad[m] = -self.tau + p.trace();
        hess[(m, m)] = p.norm_squared();
        Some((grad, hess))
    }
}

/// `k · max_i v_i^T Z v_i` with `Z = S^{-1} / tr(S^{-1})` is an upper bound on
/// the relaxation optimum for any `S ≻ 0`.
fn e_dual_bound(vectors: &[Vec<f64>], slack: &SymMatrix, k: usize) -> Option<f64> {
    let p = slack.as_matrix().clone().cholesky()?.inverse();
    let z = SymMatrix::from_matrix(&p / p.trace()).ok()?;
    Some(k as f64 * vectors.iter().map(|v| z.quad_form(v)).fold(0.0, f64::max))
}

pub(crate) fn solve_e(inst: &Instance, opts: SolverOptions) -> Result<Outcome> {
    let (m, d) = (inst.m(), inst.d());
    let mut z = inst.uniform_weights();
    let lam0 = linalg::sym_eigen(&linalg::gram(&z, inst.vectors())?)?.min();
    if !(lam0 > 0.0) {
        return Err(Error::Infeasible);
    }
    z.push(0.5 * lam0);
    let mut tau = (m + d) as f64 / lam0;
    let mut steps = 0;
    let mut best = None;
    let mut stalled = 0;
    loop {
        let problem = EBarrier {
            vectors: inst.vectors(),
            tau,
        };
        let budget = CENTERING_STEPS.min(opts.max_iters.saturating_sub(steps));
        steps += center(&problem, &mut z, budget).max(1);

        let x = &z[..m];
        let lam = linalg::sym_eigen(&linalg::gram(x, inst.vectors())?)?.min();
        let dual = problem
            .slack(&z)
            .and_then(|s| e_dual_bound(inst.vectors(), &s, inst.k()))
            .ok_or_else(|| {
                Error::NumericalFailure("barrier iterate left the feasible cone".into())
            })?;
        let measure = (dual - lam) / lam;
        if best
            .as_ref()
            .is_none_or(|b: &(f64, Vec<f64>, f64)| measure < b.0)
        {
            best = Some((measure, x.to_vec(), dual));
            stalled = 0;
        } else {
            // Past the conditioning floor the dual bound only degrades.
            stalled += 1;
        }
        if measure <= opts.tol || steps >= opts.max_iters || stalled >= 3 || tau * lam0 > 1e18 {
            let (measure, mut x, dual) = best.expect("at least one stage ran");
            normalize(&mut x, inst.k());
            return Ok(Outcome {
                x,
                certificate: certificate(measure, opts.tol, steps, "sdp-log-barrier", Some(dual)),
            });
        }
        tau *= TAU_GROWTH;
    }
}
