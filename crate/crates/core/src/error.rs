use thiserror::Error;

use crate::relax::FractionalSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// An eigenvalue fell below the relative cutoff, so `X^{-1/2}` does not exist.
    #[error("matrix is rank deficient (min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e})")]
    RankDeficient { min_eig: f64, max_eig: f64 },

    #[error("matrix is singular (min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e})")]
    SingularMatrix { min_eig: f64, max_eig: f64 },

    #[error("polynomial degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("convex-combination weights sum to {sum}, expected 1")]
    WeightSumError { sum: f64 },

    #[error("vectors do not span the space required by the objective")]
    Infeasible,

    /// The solver ran out of iterations. The best feasible iterate is attached,
    /// flagged as non-certified.
    #[error("iteration limit reached after {iterations} iterations without a certificate")]
    IterationLimit {
        iterations: usize,
        best: Box<FractionalSolution>,
    },

    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("fractional weights sum to zero")]
    ZeroSum,

    #[error("operator result is not divisible by x^{power}: coefficient {coefficient:e}")]
    NotDivisible { power: usize, coefficient: f64 },

    #[error("enumeration of {leaves} leaves exceeds the limit of {limit}")]
    TooLarge { leaves: f64, limit: usize },

    #[error("prefix {0:?} has zero probability")]
    ZeroProbability(Vec<usize>),

    #[error(
        "guarantee violated at level {level}: selected score {selected} is worse than parent score {parent}"
    )]
    GuaranteeViolated {
        level: usize,
        parent: f64,
        selected: f64,
    },
}
