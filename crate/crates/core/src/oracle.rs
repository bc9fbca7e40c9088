//! Brute-force ground truth for tiny instances: every one of the `m^k` leaves
//! of the family tree, with its probability and characteristic polynomial.
//!
//! Leaves are stored in lexicographic order of their index sequences, so the
//! leaves below a prefix of length `i` form one contiguous block of
//! `m^{k-i}` entries.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{self, FamilyContext};
use crate::linalg::{self, SymMatrix};
use crate::poly::{convex_combination, RealRootedPoly, DEFAULT_ROOT_EPS};
use crate::relax::{objective_or_infinity, FractionalSolution, Instance, ObjectiveKind};
use crate::round::{certify, round_design};

pub const DEFAULT_MAX_LEAVES: usize = 1_000_000;
// Internal nodes compared against the family evaluator, at most.
const FAMILY_CHECK_NODES: usize = 4096;

#[derive(Clone, Debug)]
pub struct Leaf {
    /// 0-based index sequence `(s_1, …, s_k)`.
    pub selection: Vec<usize>,
    pub gram: SymMatrix,
    /// Ascending eigenvalues of `gram`.
    pub eigenvalues: Vec<f64>,
    pub poly: RealRootedPoly,
    /// `Π_j x(s_j)/k`.
    pub probability: f64,
}

impl Leaf {
    /// Minimization-form objective of the leaf matrix.
    pub fn objective(&self, kind: ObjectiveKind) -> Result<f64> {
        objective_or_infinity(&self.gram, kind)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }
}

#[derive(Clone, Debug)]
pub struct LeafTable {
    m: usize,
    k: usize,
    d: usize,
    leaves: Vec<Leaf>,
}

/// An internal or leaf node aggregated from the table.
#[derive(Clone, Debug)]
pub struct OracleNode {
    pub prefix: Vec<usize>,
    pub probability: f64,
    /// Conditional expected polynomial; `None` for zero-probability prefixes.
    pub poly: Option<RealRootedPoly>,
}

impl LeafTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    fn block(&self, prefix: &[usize]) -> Result<std::ops::Range<usize>> {
        if prefix.len() > self.k {
            return Err(Error::InvalidInstance(format!(
                "prefix of length {} exceeds k = {}",
                prefix.len(),
                self.k
            )));
        }
        if let Some(&bad) = prefix.iter().find(|&&t| t >= self.m) {
            return Err(Error::InvalidInstance(format!(
                "index {bad} out of range for {} vectors",
                self.m
            )));
        }
        let size = self.m.pow((self.k - prefix.len()) as u32);
        let start = prefix.iter().fold(0, |acc, &t| acc * self.m + t) * size;
        Ok(start..start + size)
    }

    /// Expected polynomial of every node, level by level (`levels[i]` holds
    /// the `m^i` nodes at depth `i` in lexicographic order).
    pub fn levels(&self) -> Vec<Vec<OracleNode>> {
        let mut current: Vec<(f64, Vec<f64>)> = self
            .leaves
            .iter()
            .map(|l| {
                let c = l.poly.coeffs().iter().map(|c| c * l.probability).collect();
                (l.probability, c)
            })
            .collect();
        let mut sums = vec![current.clone()];
        for _ in 0..self.k {
            current = current
                .chunks(self.m)
                .map(|group| {
                    let mut coeffs = vec![0.0; self.d + 1];
                    let mut prob = 0.0;
                    for (p, c) in group {
                        prob += p;
                        coeffs.iter_mut().zip(c).for_each(|(a, b)| *a += b);
                    }
                    (prob, coeffs)
                })
                .collect();
            sums.push(current.clone());
        }
        sums.reverse();
        sums.into_iter()
            .enumerate()
            .map(|(depth, level)| {
                level
                    .into_iter()
                    .enumerate()
                    .map(|(idx, (prob, coeffs))| OracleNode {
                        prefix: self.prefix_of(idx, depth),
                        probability: prob,
                        poly: (prob > 0.0).then(|| {
                            RealRootedPoly::from_coeffs(coeffs.iter().map(|c| c / prob).collect())
                        }),
                    })
                    .collect()
            })
            .collect()
    }

    fn prefix_of(&self, mut idx: usize, depth: usize) -> Vec<usize> {
        let mut prefix = vec![0; depth];
        for slot in prefix.iter_mut().rev() {
            *slot = idx % self.m;
            idx /= self.m;
        }
        prefix
    }
}

pub fn enumerate_leaves(ctx: &FamilyContext) -> Result<LeafTable> {
    enumerate_leaves_with_limit(ctx, DEFAULT_MAX_LEAVES)
}

pub fn enumerate_leaves_with_limit(ctx: &FamilyContext, limit: usize) -> Result<LeafTable> {
    let (m, k, d) = (ctx.m(), ctx.k(), ctx.d());
    let count = (m as f64).powi(k as i32);
    if count > limit as f64 {
        return Err(Error::TooLarge {
            leaves: count,
            limit,
        });
    }
    let count = count as usize;
    let probs = ctx.probabilities();
    let leaves = (0..count)
        .into_par_iter()
        .map(|mut idx| {
            let mut selection = vec![0; k];
            for slot in selection.iter_mut().rev() {
                *slot = idx % m;
                idx /= m;
            }
            let gram = linalg::gram_of_selection(&selection, ctx.vectors())?;
            let eigenvalues = linalg::sym_eigen(&gram)?.eigenvalues;
            let poly = RealRootedPoly::from_roots(&eigenvalues);
            let probability = selection.iter().map(|&s| probs[s]).product();
            Ok(Leaf {
                selection,
                gram,
                eigenvalues,
                poly,
                probability,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LeafTable { m, k, d, leaves })
}

/// Probability-weighted average of the leaf polynomials below `prefix`.
pub fn exact_expected_poly(table: &LeafTable, prefix: &[usize]) -> Result<RealRootedPoly> {
    let block = &table.leaves[table.block(prefix)?];
    let total: f64 = block.iter().map(|l| l.probability).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroProbability(prefix.to_vec()));
    }
    let polys: Vec<RealRootedPoly> = block.iter().map(|l| l.poly.clone()).collect();
    let weights: Vec<f64> = block.iter().map(|l| l.probability / total).collect();
    match convex_combination(&polys, &weights) {
        // Renormalized weights can miss 1 by a few ulps on large blocks.
        Err(Error::WeightSumError { .. }) => {
            let mut coeffs = vec![0.0; table.d + 1];
            for (p, w) in polys.iter().zip(&weights) {
                coeffs
                    .iter_mut()
                    .zip(p.coeffs())
                    .for_each(|(a, c)| *a += w * c);
            }
            Ok(RealRootedPoly::from_coeffs(coeffs))
        }
        other => other,
    }
}

/// Leaf with the smallest minimization-form objective; ties go to the
/// lexicographically first leaf.
pub fn best_leaf(table: &LeafTable, kind: ObjectiveKind) -> Result<(Vec<usize>, f64)> {
    extreme_leaf(table, kind, |a, b| a < b)
}

/// Leaf with the largest minimization-form objective.
pub fn worst_leaf(table: &LeafTable, kind: ObjectiveKind) -> Result<(Vec<usize>, f64)> {
    extreme_leaf(table, kind, |a, b| a > b)
}

fn extreme_leaf(
    table: &LeafTable,
    kind: ObjectiveKind,
    better: impl Fn(f64, f64) -> bool,
) -> Result<(Vec<usize>, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, leaf) in table.leaves.iter().enumerate() {
        let v = leaf.objective(kind)?;
        if best.is_none_or(|(_, b)| better(v, b)) {
            best = Some((i, v));
        }
    }
    let (i, v) = best.expect("tables are never empty");
    Ok((table.leaves[i].selection.clone(), v))
}

/// `E[λ_min(Σ_j u_j u_j^T)]` over the sampling distribution.
pub fn expected_lambda_min(table: &LeafTable) -> f64 {
    table
        .leaves
        .iter()
        .map(|l| l.probability * l.lambda_min().max(0.0))
        .sum()
}

/// Outcome of one invariant check run by [`verify`].
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn coeff_error(a: &RealRootedPoly, b: &RealRootedPoly) -> f64 {
    a.max_abs_diff(b) / b.max_abs_coeff().max(f64::MIN_POSITIVE)
}

/// Enumerates the family for `frac.x` and runs every structural check, then
/// rounds for `kind` and compares the greedy leaf with the root score and the
/// best leaf.
pub fn verify(
    inst: &Instance,
    frac: &FractionalSolution,
    kind: ObjectiveKind,
    max_leaves: usize,
) -> Result<Vec<Check>> {
    let ctx = FamilyContext::new(inst.vectors().to_vec(), frac.x.clone(), inst.k())?;
    let table = enumerate_leaves_with_limit(&ctx, max_leaves)?;
    let (m, k) = (ctx.m(), ctx.k());
    let mut checks = Vec::new();

    let total: f64 = table.leaves.iter().map(|l| l.probability).sum();
    checks.push(Check::new(
        "leaf probabilities sum to 1",
        (total - 1.0).abs() <= 1e-10,
        format!("{} leaves, sum {total:.15}", table.len()),
    ));

    let worst_root = table
        .leaves
        .iter()
        .map(|l| {
            let scale = l.eigenvalues.last().map_or(1.0, |v| v.abs().max(1.0));
            l.poly.min_root(DEFAULT_ROOT_EPS).map(|r| r / scale)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::new(
        "leaf polynomials have nonnegative roots",
        worst_root >= -1e-9,
        format!("min scaled root {worst_root:.3e}"),
    ));

    let eigs = linalg::sym_eigen(ctx.gram())?.eigenvalues;
    let closed = family::root_poly_closed_form(&eigs, k)?;
    let err = coeff_error(&exact_expected_poly(&table, &[])?, &closed);
    checks.push(Check::new(
        "root polynomial equals closed form",
        err <= 1e-8,
        format!("relative coefficient error {err:.2e}"),
    ));

    let levels = table.levels();
    let probs = ctx.probabilities();
    let (mut mix_err, mut fam_err, mut fam_nodes) = (0.0f64, 0.0f64, 0usize);
    for depth in 0..k {
        let compare_family = fam_nodes + levels[depth].len() <= FAMILY_CHECK_NODES;
        for (idx, node) in levels[depth].iter().enumerate() {
            let Some(parent) = &node.poly else { continue };
            let mut mix = vec![0.0; ctx.d() + 1];
            for (t, p) in probs.iter().enumerate() {
                if let Some(child) = &levels[depth + 1][idx * m + t].poly {
                    mix.iter_mut()
                        .zip(child.coeffs())
                        .for_each(|(a, c)| *a += p * c);
                }
            }
            mix_err = mix_err.max(coeff_error(&RealRootedPoly::from_coeffs(mix), parent));
            if compare_family {
                let sel = ctx.selection(&node.prefix)?;
                let computed = family::conditional_expected_charpoly(&ctx, &sel)?;
                fam_err = fam_err.max(coeff_error(&computed, parent));
                fam_nodes += 1;
            }
        }
    }
    checks.push(Check::new(
        "every internal node is the mixture of its children",
        mix_err <= 1e-9,
        format!("max relative coefficient error {mix_err:.2e}"),
    ));
    checks.push(Check::new(
        "node polynomials match enumeration",
        fam_err <= 1e-8,
        format!("{fam_nodes} internal nodes, max relative coefficient error {fam_err:.2e}"),
    ));

    let res = round_design(inst, frac, kind)?;
    let (_, best) = best_leaf(&table, kind)?;
    checks.push(Check::new(
        "greedy leaf is no better than the best leaf",
        res.integral_objective >= best * (1.0 - 1e-9),
        format!(
            "greedy {:.9e}, best leaf {best:.9e}",
            res.integral_objective
        ),
    ));

    let root = res.root_score.value();
    let sel = linalg::gram_of_selection(&res.selection, inst.vectors())?;
    let (achieved, passed) = match kind {
        ObjectiveKind::E => {
            let g = res.normalized_lambda_min.unwrap_or(f64::NAN);
            (g, g >= root - 1e-7)
        }
        ObjectiveKind::D => {
            let g = linalg::det(&sel);
            (g, g >= root * (1.0 - 1e-7))
        }
        ObjectiveKind::A => {
            let g = linalg::trace_inverse(&sel).unwrap_or(f64::INFINITY);
            (g, g <= root * (1.0 + 1e-7))
        }
        ObjectiveKind::Ratio { l_prime, l } => {
            let g = linalg::esym_of_matrix(&sel, l_prime)? / linalg::esym_of_matrix(&sel, l)?;
            (g, g <= root * (1.0 + 1e-7))
        }
    };
    checks.push(Check::new(
        "greedy leaf is no worse than the root score",
        passed,
        format!("leaf {achieved:.9e}, root {root:.9e}"),
    ));
    checks.push(Check::new(
        "rounded selection is within the theorem bound",
        certify(&res, frac, kind),
        format!(
            "ratio {:.6}, bound {:.6}",
            res.certified_ratio, res.theorem_bound
        ),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_table() -> LeafTable {
        let ctx = FamilyContext::new(vec![vec![1.0], vec![2.0]], vec![1.0, 1.0], 2).unwrap();
        enumerate_leaves(&ctx).unwrap()
    }

    fn basis_copies(d: usize) -> FamilyContext {
        let vectors: Vec<Vec<f64>> = (0..2 * d)
            .map(|i| (0..d).map(|j| if j == i % d { 1.0 } else { 0.0 }).collect())
            .collect();
        let x = vec![0.5; 2 * d];
        FamilyContext::new(vectors, x, d).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let ctx = FamilyContext::new(vec![vec![3.0]], vec![2.0], 2).unwrap();
        let t = enumerate_leaves(&ctx).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.leaves()[0].probability, 1.0);

        let t = scalar_table();
        assert_eq!(t.len(), 4);
        assert!(t.leaves().iter().all(|l| l.probability == 0.25));
        assert!((expected_lambda_min(&t) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn expected_poly_examples() {
        let t = scalar_table();
        let root = exact_expected_poly(&t, &[]).unwrap();
        assert!(root.max_abs_diff(&RealRootedPoly::from_coeffs(vec![-5.0, 1.0])) < 1e-12);
        let first = exact_expected_poly(&t, &[0]).unwrap();
        assert!(first.max_abs_diff(&RealRootedPoly::from_coeffs(vec![-3.5, 1.0])) < 1e-12);
        let leaf = exact_expected_poly(&t, &[1, 0]).unwrap();
        assert_eq!(leaf, t.leaves()[2].poly);
    }

    #[test]
    fn zero_probability_prefix() {
        let ctx = FamilyContext::new(vec![vec![1.0], vec![2.0]], vec![0.0, 2.0], 2).unwrap();
        let t = enumerate_leaves(&ctx).unwrap();
        assert!(matches!(
            exact_expected_poly(&t, &[0]),
            Err(Error::ZeroProbability(p)) if p == vec![0]
        ));
    }

    #[test]
    fn too_large_guard() {
        let ctx = FamilyContext::new(vec![vec![1.0]; 10], vec![0.7; 10], 7).unwrap();
        assert!(matches!(
            enumerate_leaves(&ctx),
            Err(Error::TooLarge {
                limit: DEFAULT_MAX_LEAVES,
                ..
            })
        ));
    }

    #[test]
    fn best_leaf_examples() {
        let t = scalar_table();
        assert_eq!(
            best_leaf(&t, ObjectiveKind::E).unwrap(),
            (vec![1, 1], 1.0 / 8.0)
        );

        let ctx =
            FamilyContext::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0], 2).unwrap();
        let t = enumerate_leaves(&ctx).unwrap();
        let (sel, v) = best_leaf(&t, ObjectiveKind::D).unwrap();
        assert_ne!(sel[0], sel[1]);
        assert!((v - 1.0).abs() < 1e-12);

        let t = enumerate_leaves(&basis_copies(2)).unwrap();
        assert_eq!(t.len(), 16);
        let (sel, v) = best_leaf(&t, ObjectiveKind::E).unwrap();
        assert_ne!(sel[0] % 2, sel[1] % 2);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_copies_expected_lambda_min() {
        let t = enumerate_leaves(&basis_copies(2)).unwrap();
        assert!((expected_lambda_min(&t) - 0.5).abs() < 1e-12);
        let t = enumerate_leaves(&basis_copies(3)).unwrap();
        assert!((expected_lambda_min(&t) - 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn levels_are_consistent_with_prefix_queries() {
        let ctx = FamilyContext::new(
            vec![vec![1.0, 0.5], vec![-0.2, 1.0], vec![0.6, 0.6]],
            vec![0.5, 1.0, 1.5],
            3,
        )
        .unwrap();
        let t = enumerate_leaves(&ctx).unwrap();
        let levels = t.levels();
        assert_eq!(levels.len(), 4);
        for (depth, level) in levels.iter().enumerate() {
            assert_eq!(level.len(), 3usize.pow(depth as u32));
            for node in level {
                let direct = exact_expected_poly(&t, &node.prefix).unwrap();
                assert!(node.poly.as_ref().unwrap().max_abs_diff(&direct) < 1e-12);
            }
        }
        assert!((levels[0][0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verify_passes_on_scalar_instance() {
        let inst = Instance::new(1, 2, vec![vec![1.0], vec![2.0]]).unwrap();
        for kind in [ObjectiveKind::E, ObjectiveKind::D, ObjectiveKind::A] {
            let frac = crate::relax::validate_fractional(&inst, &[1.0, 1.0], kind).unwrap();
            let checks = verify(&inst, &frac, kind, DEFAULT_MAX_LEAVES).unwrap();
            assert_eq!(checks.len(), 8);
            assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        }
    }

    #[test]
    fn verify_respects_leaf_limit() {
        let inst = Instance::new(1, 3, vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let frac =
            crate::relax::validate_fractional(&inst, &[1.0, 1.0, 1.0], ObjectiveKind::D).unwrap();
        assert!(matches!(
            verify(&inst, &frac, ObjectiveKind::D, 26),
            Err(Error::TooLarge { .. })
        ));
    }
}
