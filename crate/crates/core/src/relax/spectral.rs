//! Derivatives of `x ↦ E_l(Σ x(i) v_i v_i^T)`.
//!
//! `E_l(X + a v v^T)` is affine in `a`, and `E_l(X + a u u^T + b w w^T)` is
//! bilinear in `(a, b)`. Expanding `det(zI - X - a uu^T - b ww^T)` in the
//! eigenbasis of `X` (with `ũ = Q^T u`) gives
//!
//! ```text
//! ∂_u E_l      = Σ_j ũ_j² · e_{l-1}(λ without j)
//! ∂_u ∂_w E_l  = Σ_{j<k} (ũ_j w̃_k - ũ_k w̃_j)² · e_{l-2}(λ without j, k)
//! ```

use nalgebra::DMatrix;

use crate::linalg::{elementary_symmetric, Spectrum};

pub(crate) struct EsymDerivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Option<DMatrix<f64>>,
}

/// `projected[a]` holds `Q^T v_a`.
pub(crate) fn esym_derivatives(
    spec: &Spectrum,
    projected: &[Vec<f64>],
    order: usize,
    with_hessian: bool,
) -> EsymDerivatives {
    let lam = &spec.eigenvalues;
    let d = lam.len();
    let m = projected.len();
    let value = elementary_symmetric(lam, order)[order];
    if order == 0 {
        return EsymDerivatives {
            value,
            grad: vec![0.0; m],
            hess: with_hessian.then(|| DMatrix::zeros(m, m)),
        };
    }

    let without_one: Vec<f64> = (0..d)
        .map(|j| {
            let rest: Vec<f64> = (0..d).filter(|&t| t != j).map(|t| lam[t]).collect();
            elementary_symmetric(&rest, order - 1)[order - 1]
        })
        .collect();
    let grad = projected
        .iter()
        .map(|u| u.iter().zip(&without_one).map(|(c, e)| c * c * e).sum())
        .collect();

    let hess = with_hessian.then(|| {
        let mut h = DMatrix::zeros(m, m);
        if order < 2 {
            return h;
        }
        let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
        for j in 0..d {
            for k in (j + 1)..d {
                let rest: Vec<f64> = (0..d)
                    .filter(|&t| t != j && t != k)
                    .map(|t| lam[t])
                    .collect();
                let c = elementary_symmetric(&rest, order - 2)[order - 2];
                if c != 0.0 {
                    pairs.push((j, k, c));
                }
            }
        }
        for a in 0..m {
            for b in a..m {
                let (u, w) = (&projected[a], &projected[b]);
                let s: f64 = pairs
                    .iter()
                    .map(|&(j, k, c)| {
                        let minor = u[j] * w[k] - u[k] * w[j];
                        c * minor * minor
                    })
                    .sum();
                h[(a, b)] = s;
                h[(b, a)] = s;
            }
        }
        h
    });

    EsymDerivatives { value, grad, hess }
}
