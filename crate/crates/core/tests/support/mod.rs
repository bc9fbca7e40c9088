//! Reference numerics for integration tests, written directly against
//! nalgebra so that they do not share code paths with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

pub fn gram(vectors: &[Vec<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = vectors[0].len();
    let mut m = DMatrix::zeros(d, d);
    for (v, &w) in vectors.iter().zip(weights) {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    m
}

pub fn selection_gram(vectors: &[Vec<f64>], selection: &[usize]) -> DMatrix<f64> {
    let mut counts = vec![0.0; vectors.len()];
    for &s in selection {
        counts[s] += 1.0;
    }
    gram(vectors, &counts)
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)[0]
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

pub fn trace_inverse(m: &DMatrix<f64>) -> f64 {
    m.clone().try_inverse().expect("nonsingular").trace()
}

/// `e_l` of `values` by expanding `Π (1 + v t)`.
pub fn esym(values: &[f64], l: usize) -> f64 {
    let mut c = vec![0.0; values.len() + 1];
    c[0] = 1.0;
    for (n, &v) in values.iter().enumerate() {
        for r in (1..=n + 1).rev() {
            c[r] += v * c[r - 1];
        }
    }
    c[l]
}

/// `n! / (n - r)!`
pub fn falling(n: usize, r: usize) -> f64 {
    (0..r).map(|j| (n - j) as f64).product()
}

pub fn max_abs(c: &[f64]) -> f64 {
    c.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Coefficientwise distance relative to the largest coefficient of `reference`.
pub fn relative_coeff_error(computed: &[f64], reference: &[f64]) -> f64 {
    let n = computed.len().max(reference.len());
    let at = |c: &[f64], j: usize| c.get(j).copied().unwrap_or(0.0);
    let diff = (0..n)
        .map(|j| (at(computed, j) - at(reference, j)).abs())
        .fold(0.0, f64::max);
    diff / max_abs(reference).max(f64::MIN_POSITIVE)
}
