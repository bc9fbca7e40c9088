//! Fixed instances shared by the benchmarks.

use interdesign::generate::gaussian;
use interdesign::{solve_relaxation, FractionalSolution, Instance, ObjectiveKind};

/// `(d, k, m)` sizes benchmarked end to end.
pub const SIZES: [(usize, usize, usize); 3] = [(4, 8, 20), (6, 12, 40), (8, 16, 60)];

pub const SEED: u64 = 7;

pub fn instance(d: usize, k: usize, m: usize) -> Instance {
    gaussian(d, k, m, SEED).expect("valid benchmark size")
}

/// A certified relaxation solution for `kind`.
pub fn solved(inst: &Instance, kind: ObjectiveKind) -> FractionalSolution {
    solve_relaxation(inst, kind, 1e-6, 200_000).expect("benchmark instances solve")
}

pub fn label(d: usize, k: usize, m: usize) -> String {
    format!("d{d}_k{k}_m{m}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_solve_for_every_objective() {
        let (d, k, m) = SIZES[0];
        let inst = instance(d, k, m);
        for kind in [ObjectiveKind::E, ObjectiveKind::D, ObjectiveKind::A] {
            assert!(solved(&inst, kind).is_certified());
        }
    }
}
