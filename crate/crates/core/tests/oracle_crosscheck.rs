mod support;

use interdesign::family::{conditional_expected_charpoly, root_poly_closed_form, FamilyContext};
use interdesign::generate::{basis_copies, gaussian};
use interdesign::linalg;
use interdesign::oracle::{self, best_leaf, enumerate_leaves, exact_expected_poly, worst_leaf};
use interdesign::poly::DEFAULT_ROOT_EPS;
use interdesign::round::{node_score, RoundingResult};
use interdesign::{
    certify, round_design, solve_relaxation, validate_fractional, Instance, ObjectiveKind,
};
use support::*;

fn small_instances() -> Vec<Instance> {
    vec![
        Instance::new(1, 2, vec![vec![1.0], vec![2.0]]).unwrap(),
        Instance::new(2, 2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]).unwrap(),
        gaussian(2, 3, 4, 11).unwrap(),
        gaussian(3, 3, 4, 12).unwrap(),
        gaussian(3, 4, 5, 13).unwrap(),
        gaussian(2, 5, 3, 14).unwrap(),
    ]
}

fn kinds(d: usize) -> Vec<ObjectiveKind> {
    let mut v = vec![ObjectiveKind::E, ObjectiveKind::D, ObjectiveKind::A];
    v.extend(ObjectiveKind::all_ratios(d));
    v
}

#[test]
fn relaxation_lower_bounds_every_leaf() {
    for inst in small_instances() {
        for kind in kinds(inst.d()) {
            let frac = solve_relaxation(&inst, kind, 1e-8, 200_000).unwrap();
            let ctx =
                FamilyContext::new(inst.vectors().to_vec(), frac.x.clone(), inst.k()).unwrap();
            let table = enumerate_leaves(&ctx).unwrap();
            let (_, best) = best_leaf(&table, kind).unwrap();
            assert!(
                frac.objective_value <= best * (1.0 + 1e-6) + 1e-9,
                "{kind}: fractional {} vs best leaf {best}",
                frac.objective_value
            );
        }
    }
}

#[test]
fn greedy_lies_between_root_and_best_leaf() {
    for inst in small_instances() {
        let (d, k) = (inst.d(), inst.k());
        for kind in kinds(d) {
            let frac = solve_relaxation(&inst, kind, 1e-8, 200_000).unwrap();
            let res: RoundingResult = round_design(&inst, &frac, kind).unwrap();
            let ctx = FamilyContext::new(inst.vectors().to_vec(), frac.x.clone(), k).unwrap();
            let table = enumerate_leaves(&ctx).unwrap();
            let (_, best) = best_leaf(&table, kind).unwrap();
            assert!(res.integral_objective >= best * (1.0 - 1e-9), "{kind}");

            let root = res.root_score.value();
            let s = selection_gram(inst.vectors(), &res.selection);
            let e = eigenvalues(&s);
            match kind {
                ObjectiveKind::E => {
                    let g = res.normalized_lambda_min.unwrap();
                    assert!(g >= root - 1e-7, "normalized λ_min {g} < root {root}");
                }
                ObjectiveKind::D => assert!(det(&s) >= root * (1.0 - 1e-7)),
                ObjectiveKind::A => assert!(trace_inverse(&s) <= root * (1.0 + 1e-7)),
                ObjectiveKind::Ratio { l_prime, l } => {
                    assert!(esym(&e, l_prime) / esym(&e, l) <= root * (1.0 + 1e-7))
                }
            }
            assert!(certify(&res, &frac, kind), "{kind}");
        }
    }
}

#[test]
fn enumeration_matches_closed_form_and_mixtures() {
    for inst in small_instances() {
        let k = inst.k();
        let ctx = FamilyContext::new(inst.vectors().to_vec(), inst.uniform_weights(), k).unwrap();
        let table = enumerate_leaves(&ctx).unwrap();
        let eigs = linalg::sym_eigen(ctx.gram()).unwrap().eigenvalues;
        let closed = root_poly_closed_form(&eigs, k).unwrap();
        let root = exact_expected_poly(&table, &[]).unwrap();
        assert!(root.max_abs_diff(&closed) <= 1e-8 * closed.max_abs_coeff());

        let total: f64 = table.leaves().iter().map(|l| l.probability).sum();
        assert!((total - 1.0).abs() <= 1e-10);
        assert_eq!(table.len(), ctx.m().pow(k as u32));

        let levels = table.levels();
        for depth in 0..k {
            for (idx, node) in levels[depth].iter().enumerate() {
                let parent = node.poly.as_ref().unwrap();
                let mut mix = vec![0.0; inst.d() + 1];
                for t in 0..ctx.m() {
                    let child = levels[depth + 1][idx * ctx.m() + t].poly.as_ref().unwrap();
                    for (a, c) in mix.iter_mut().zip(child.coeffs()) {
                        *a += ctx.probabilities()[t] * c;
                    }
                }
                assert!(relative_coeff_error(&mix, parent.coeffs()) <= 1e-9);
                let family =
                    conditional_expected_charpoly(&ctx, &ctx.selection(&node.prefix).unwrap())
                        .unwrap();
                assert!(relative_coeff_error(family.coeffs(), parent.coeffs()) <= 1e-8);
            }
        }
    }
}

#[test]
fn leaf_polynomials_have_nonnegative_roots() {
    for inst in small_instances() {
        let ctx =
            FamilyContext::new(inst.vectors().to_vec(), inst.uniform_weights(), inst.k()).unwrap();
        for leaf in enumerate_leaves(&ctx).unwrap().leaves() {
            let scale = leaf.eigenvalues.last().unwrap().abs().max(1.0);
            assert!(leaf.poly.min_root(DEFAULT_ROOT_EPS).unwrap() >= -1e-9 * scale);
        }
    }
}

#[test]
fn basis_copies_expected_lambda_min_is_d_factorial_over_d_to_the_d() {
    for d in 2..=4usize {
        let inst = basis_copies(d, d, 2).unwrap();
        let ctx = FamilyContext::new(inst.vectors().to_vec(), inst.uniform_weights(), d).unwrap();
        let table = enumerate_leaves(&ctx).unwrap();
        let fact: f64 = (1..=d).map(|j| j as f64).product();
        let expected = fact / (d as f64).powi(d as i32);
        assert!(
            (oracle::expected_lambda_min(&table) - expected).abs() <= 1e-12,
            "d={d}"
        );
    }
}

#[test]
fn worst_leaf_can_fail_certification() {
    let inst = basis_copies(2, 2, 2).unwrap();
    let frac = validate_fractional(&inst, &inst.uniform_weights(), ObjectiveKind::E).unwrap();
    let ctx = FamilyContext::new(inst.vectors().to_vec(), frac.x.clone(), 2).unwrap();
    let table = enumerate_leaves(&ctx).unwrap();
    let (sel, value) = worst_leaf(&table, ObjectiveKind::E).unwrap();
    assert_eq!(sel[0] % 2, sel[1] % 2);
    assert_eq!(value, f64::INFINITY);

    let mut res = round_design(&inst, &frac, ObjectiveKind::E).unwrap();
    assert!(certify(&res, &frac, ObjectiveKind::E));
    res.selection = sel;
    res.integral_objective = value;
    assert!(!certify(&res, &frac, ObjectiveKind::E));
}

#[test]
fn greedy_scores_never_regress() {
    for inst in small_instances() {
        for kind in kinds(inst.d()) {
            let frac = solve_relaxation(&inst, kind, 1e-8, 200_000).unwrap();
            let res = round_design(&inst, &frac, kind).unwrap();
            let maximize = matches!(kind, ObjectiveKind::E | ObjectiveKind::D);
            for level in &res.levels {
                let (p, s) = (level.parent_score.value(), level.selected_score.value());
                if maximize {
                    assert!(s >= p - 1e-7 * p.abs().max(1.0), "{kind}");
                } else if p.is_finite() {
                    assert!(s <= p + 1e-7 * p.abs().max(1.0), "{kind}");
                }
            }
        }
    }
}

#[test]
fn node_scores_of_oracle_root_match_family_root() {
    for inst in small_instances() {
        let ctx =
            FamilyContext::new(inst.vectors().to_vec(), inst.uniform_weights(), inst.k()).unwrap();
        let table = enumerate_leaves(&ctx).unwrap();
        let oracle_root = exact_expected_poly(&table, &[]).unwrap();
        let family_root = conditional_expected_charpoly(&ctx, &ctx.root()).unwrap();
        for kind in kinds(inst.d()) {
            let a = node_score(&oracle_root, kind).unwrap().value();
            let b = node_score(&family_root, kind).unwrap().value();
            assert!(
                (a - b).abs() <= 1e-7 * a.abs().max(1.0),
                "{kind}: {a} vs {b}"
            );
        }
    }
}
