//! Deterministic rounding of experimental design relaxations via interlacing
//! families of polynomials.
//!
//! The pipeline is: build an [`Instance`], solve its convex relaxation with
//! [`solve_relaxation`], then round the fractional solution to `k` vectors
//! with [`round_design`]. The [`oracle`] module enumerates the whole family
//! tree of tiny instances for cross-checking.
//!
//! ```
//! use interdesign::{round_design, solve_relaxation, Instance, ObjectiveKind};
//!
//! let inst = Instance::new(2, 2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
//! let frac = solve_relaxation(&inst, ObjectiveKind::D, 1e-6, 10_000).unwrap();
//! let res = round_design(&inst, &frac, ObjectiveKind::D).unwrap();
//! assert_eq!(res.selection.len(), 2);
//! assert!(res.certified_ratio <= res.theorem_bound);
//! ```

// `!(a > b)` is used on purpose to reject NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod family;
pub mod generate;
pub mod linalg;
pub mod oracle;
pub mod poly;
pub mod relax;
pub mod round;

pub use error::{Error, Result};
pub use family::{conditional_expected_charpoly, FamilyContext, PartialSelection};
pub use generate::Generator;
pub use linalg::{Spectrum, SymMatrix};
pub use oracle::{LeafTable, DEFAULT_MAX_LEAVES};
pub use poly::RealRootedPoly;
pub use relax::{
    solve_relaxation, solve_relaxation_with, validate_fractional, FractionalSolution, Instance,
    ObjectiveKind, SolverCertificate, SolverOptions,
};
pub use round::{
    certify, round_design, round_design_with, theorem_bound, ObjectiveScore, RoundingOptions,
    RoundingResult,
};
