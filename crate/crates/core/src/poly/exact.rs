//! Exact rational polynomial arithmetic for verifying combinatorial identities
//! of the `(1 - λ∂)` calculus without roundoff.

use num::{BigInt, BigRational, One, Zero};

/// Polynomial with exact rational coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        Self { coeffs }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = BigRational::one();
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `p - λ p'`
    pub fn apply_shift_op(&self, lambda: &BigRational) -> Self {
        let mut coeffs = self.coeffs.clone();
        for j in 0..self.degree() {
            let factor = BigRational::from_integer(BigInt::from(j + 1));
            coeffs[j] -= lambda * factor * &self.coeffs[j + 1];
        }
        Self::from_coeffs(coeffs)
    }

    /// Exact division by `x^power`; `None` if a dropped coefficient is nonzero.
    pub fn divide_by_x_power(&self, power: usize) -> Option<Self> {
        if power > self.degree() || self.coeffs[..power].iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(Self::from_coeffs(self.coeffs[power..].to_vec()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num::ToPrimitive;
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

fn inverse(k: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(k))
}

/// `x^{d-k} (1 - ∂/k)^d x^k`: the root polynomial for an identity-normalized
/// fractional solution. Requires `k >= d`.
pub fn unit_spectrum_root_poly(k: usize, d: usize) -> Option<RationalPoly> {
    assert!(k >= d, "requires k >= d");
    let step = inverse(k);
    let mut p = RationalPoly::monomial(k);
    for _ in 0..d {
        p = p.apply_shift_op(&step);
    }
    p.divide_by_x_power(k - d)
}

/// `(1 - ∂/k)^k x^d`.
pub fn normalized_root_poly(k: usize, d: usize) -> RationalPoly {
    let step = inverse(k);
    let mut p = RationalPoly::monomial(d);
    for _ in 0..k {
        p = p.apply_shift_op(&step);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn two_by_two_normalized_root_poly() {
        let p = normalized_root_poly(2, 2);
        assert_eq!(p.coeffs(), &[q(1, 2), q(-2, 1), q(1, 1)]);
    }

    #[test]
    fn forms_agree_on_a_small_case() {
        assert_eq!(
            unit_spectrum_root_poly(5, 3).unwrap(),
            normalized_root_poly(5, 3)
        );
    }
}
