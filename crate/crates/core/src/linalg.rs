//! Dense symmetric linear algebra for small dimensions.
//!
//! Everything here works on `d x d` matrices with `d` in the tens at most, so
//! the routines favour robustness over asymptotic speed. Eigendecompositions
//! come from nalgebra's symmetric tridiagonal QR with implicit shifts.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::poly::RealRootedPoly;

/// Default relative cutoff separating genuine rank deficiency from roundoff.
pub const DEFAULT_REL_CUTOFF: f64 = 1e-10;

/// Relative threshold below which `trace_inverse` treats a matrix as singular.
pub const SINGULAR_REL_CUTOFF: f64 = 1e-12;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;

/// A real symmetric matrix. Symmetry is enforced at construction by averaging
/// the two triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            inner: DMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }),
        }
    }

    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInstance(
                "matrix dimension must be >= 1".into(),
            ));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidInstance(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInstance("matrix rows are not square".into()));
        }
        Self::from_row_major(dim, &flat)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidInstance(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { inner: sym })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Adds `weight * v v^T` in place.
    pub fn add_outer(&mut self, v: &[f64], weight: f64) {
        let d = self.dim();
        debug_assert_eq!(v.len(), d);
        for i in 0..d {
            let wi = weight * v[i];
            for j in 0..d {
                self.inner[(i, j)] += wi * v[j];
            }
        }
    }

    pub fn with_outer(&self, v: &[f64], weight: f64) -> Self {
        let mut out = self.clone();
        out.add_outer(v, weight);
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: &self.inner * factor,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        Self {
            inner: &self.inner - &other.inner,
        }
    }

    /// `v^T M v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.inner[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    /// `M v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.inner[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Matrix product of two symmetric matrices, re-symmetrized.
    pub fn mul(&self, other: &SymMatrix) -> SymMatrix {
        let prod = &self.inner * &other.inner;
        SymMatrix {
            inner: (&prod + prod.transpose()) * 0.5,
        }
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.inner - &other.inner)
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is never empty")
    }

    /// Rebuilds `Q f(Λ) Q^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let q = &self.eigenvectors;
        let d = self.eigenvalues.len();
        let mut scaled = q.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for i in 0..d {
                scaled[(i, j)] *= fj;
            }
        }
        let m = &scaled * q.transpose();
        SymMatrix::from_matrix(m).expect("square by construction")
    }

    /// Coordinates of `v` in the eigenbasis, `Q^T v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let q = &self.eigenvectors;
        let d = self.eigenvalues.len();
        (0..d)
            .map(|j| (0..d).map(|i| q[(i, j)] * v[i]).sum())
            .collect()
    }
}

/// `Σ_i weights(i) · v_i v_i^T`.
pub fn gram(weights: &[f64], vectors: &[Vec<f64>]) -> Result<SymMatrix> {
    if weights.len() != vectors.len() {
        return Err(Error::InvalidInstance(format!(
            "{} weights for {} vectors",
            weights.len(),
            vectors.len()
        )));
    }
    let d = vector_dim(vectors)?;
    let mut m = SymMatrix::zeros(d);
    for (w, v) in weights.iter().zip(vectors) {
        if *w != 0.0 {
            m.add_outer(v, *w);
        }
    }
    Ok(m)
}

/// `Σ_j v_{s_j} v_{s_j}^T` over a (multi)set of indices.
pub fn gram_of_selection(selection: &[usize], vectors: &[Vec<f64>]) -> Result<SymMatrix> {
    let d = vector_dim(vectors)?;
    let mut m = SymMatrix::zeros(d);
    for &s in selection {
        let v = vectors.get(s).ok_or_else(|| {
            Error::InvalidInstance(format!(
                "index {s} out of range for {} vectors",
                vectors.len()
            ))
        })?;
        m.add_outer(v, 1.0);
    }
    Ok(m)
}

pub(crate) fn vector_dim(vectors: &[Vec<f64>]) -> Result<usize> {
    let d = vectors
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidInstance("no vectors".into()))?;
    if d == 0 {
        return Err(Error::InvalidInstance("vectors have dimension 0".into()));
    }
    if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
        return Err(Error::InvalidInstance(format!(
            "vector {bad} has dimension {}, expected {d}",
            vectors[bad].len()
        )));
    }
    Ok(d)
}

pub fn sym_eigen(m: &SymMatrix) -> Result<Spectrum> {
    let eig =
        SymmetricEigen::try_new(m.inner.clone(), EIGEN_EPS, EIGEN_MAX_ITERS).ok_or_else(|| {
            Error::NumericalFailure("symmetric eigendecomposition did not converge".into())
        })?;
    let d = m.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// `det(x I - M)` as the product `Π (x - λ_i)` over the spectrum.
pub fn char_poly(m: &SymMatrix) -> Result<RealRootedPoly> {
    let spec = sym_eigen(m)?;
    Ok(RealRootedPoly::from_roots(&spec.eigenvalues))
}

/// `M^{-1/2}`; fails with `RankDeficient` when any eigenvalue is at most
/// `rel_cutoff · λ_max`.
pub fn inv_sqrt(m: &SymMatrix, rel_cutoff: f64) -> Result<SymMatrix> {
    let spec = sym_eigen(m)?;
    let (lo, hi) = (spec.min(), spec.max());
    if hi <= 0.0 || lo <= rel_cutoff * hi {
        return Err(Error::RankDeficient {
            min_eig: lo,
            max_eig: hi,
        });
    }
    Ok(spec.map(|lam| 1.0 / lam.sqrt()))
}

/// Determinant via LU factorization.
pub fn det(m: &SymMatrix) -> f64 {
    m.inner.clone().lu().determinant()
}

/// `tr(M^{-1}) = Σ 1/λ_i`.
pub fn trace_inverse(m: &SymMatrix) -> Result<f64> {
    let spec = sym_eigen(m)?;
    let (lo, hi) = (spec.min(), spec.max());
    if hi <= 0.0 || lo <= SINGULAR_REL_CUTOFF * hi {
        return Err(Error::SingularMatrix {
            min_eig: lo,
            max_eig: hi,
        });
    }
    Ok(spec.eigenvalues.iter().map(|l| 1.0 / l).sum())
}

/// Elementary symmetric polynomials `e_0..=e_max_order` of `values`.
pub fn elementary_symmetric(values: &[f64], max_order: usize) -> Vec<f64> {
    let mut e = vec![0.0; max_order + 1];
    e[0] = 1.0;
    for (count, &v) in values.iter().enumerate() {
        let top = (count + 1).min(max_order);
        for r in (1..=top).rev() {
            e[r] += v * e[r - 1];
        }
    }
    e
}

/// `E_l(M)`: the `l`-th elementary symmetric polynomial of the eigenvalues.
pub fn esym_of_matrix(m: &SymMatrix, order: usize) -> Result<f64> {
    let spec = sym_eigen(m)?;
    Ok(elementary_symmetric(&spec.eigenvalues, order)[order])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, c: f64) -> SymMatrix {
        SymMatrix::from_row_major(2, &[a, b, b, c]).unwrap()
    }

    #[test]
    fn gram_examples() {
        let g = gram(&[2.0], &[vec![1.0]]).unwrap();
        assert_eq!(g.get(0, 0), 2.0);

        let g = gram(&[1.0, 1.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g, SymMatrix::identity(2));

        let g = gram(&[1.0, 1.0], &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(g, m2(2.0, 1.0, 1.0));
    }

    #[test]
    fn gram_rejects_mismatched_dimensions() {
        assert!(matches!(
            gram(&[1.0, 1.0], &[vec![1.0, 0.0], vec![1.0]]),
            Err(Error::InvalidInstance(_))
        ));
        assert!(matches!(
            gram(&[1.0], &[vec![1.0], vec![2.0]]),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn symmetry_enforced_by_averaging() {
        let m = SymMatrix::from_row_major(2, &[1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert!(SymMatrix::from_row_major(0, &[]).is_err());
    }

    #[test]
    fn eigen_examples() {
        let s = sym_eigen(&SymMatrix::diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 3.0]);

        let s = sym_eigen(&SymMatrix::identity(4)).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-15));

        let s = sym_eigen(&m2(2.0, 1.0, 1.0)).unwrap();
        let r5 = 5.0_f64.sqrt();
        assert!((s.eigenvalues[0] - (3.0 - r5) / 2.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - (3.0 + r5) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn char_poly_examples() {
        let p = char_poly(&SymMatrix::diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(p.coeffs(), &[2.0, -3.0, 1.0]);

        let p = char_poly(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.0, 0.0, 1.0]);

        let p = char_poly(&m2(2.0, 1.0, 1.0)).unwrap();
        let expected = [1.0, -3.0, 1.0];
        for (a, b) in p.coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn inv_sqrt_examples() {
        let r = inv_sqrt(&SymMatrix::diagonal(&[4.0]), DEFAULT_REL_CUTOFF).unwrap();
        assert!((r.get(0, 0) - 0.5).abs() < 1e-15);

        let r = inv_sqrt(&SymMatrix::identity(3), DEFAULT_REL_CUTOFF).unwrap();
        assert!(r.max_abs_diff(&SymMatrix::identity(3)) <= 1e-12);

        let err = inv_sqrt(&m2(1.0, 1.0, 1.0), DEFAULT_REL_CUTOFF).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn det_examples() {
        assert!((det(&SymMatrix::diagonal(&[2.0, 3.0])) - 6.0).abs() < 1e-14);
        assert!(det(&m2(1.0, 1.0, 1.0)).abs() < 1e-14);
        assert!((det(&m2(2.0, 1.0, 1.0)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_inverse_examples() {
        assert!((trace_inverse(&SymMatrix::diagonal(&[1.0, 2.0])).unwrap() - 1.5).abs() < 1e-14);
        assert!((trace_inverse(&SymMatrix::identity(5)).unwrap() - 5.0).abs() < 1e-13);
        assert!((trace_inverse(&m2(2.0, 1.0, 1.0)).unwrap() - 3.0).abs() < 1e-13);
        assert!(matches!(
            trace_inverse(&m2(1.0, 1.0, 1.0)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn elementary_symmetric_of_small_sets() {
        let e = elementary_symmetric(&[1.0, 2.0, 3.0], 3);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
        let e = elementary_symmetric(&[1.0, 2.0], 4);
        assert_eq!(e, vec![1.0, 3.0, 2.0, 0.0, 0.0]);
    }
}
