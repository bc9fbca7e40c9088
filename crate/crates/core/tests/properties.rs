mod support;

use interdesign::family::{
    children_polys, conditional_expected_charpoly, normalized_root_poly, root_poly_closed_form,
    FamilyContext,
};
use interdesign::linalg::{self, SymMatrix};
use interdesign::poly::{convex_combination, RealRootedPoly, SoftMinParams, DEFAULT_ROOT_EPS};
use interdesign::relax::{fractional_objective, multiplicative_a_step, multiplicative_d_step};
use interdesign::round::node_score;
use interdesign::{round_design, validate_fractional, Instance, ObjectiveKind};
use proptest::prelude::*;
use support::*;

fn vectors(d: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, d), m)
}

/// `(d, k, vectors, x)` with `Σ x = k` and all weights positive.
fn small_design() -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=4, 0usize..=3)
        .prop_flat_map(|(d, extra)| {
            let m = d + 1 + extra;
            (
                Just(d),
                d..=d + 4,
                vectors(d, m),
                prop::collection::vec(0.05..1.0f64, m),
            )
        })
        .prop_map(|(d, k, vs, mut x)| {
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v *= k as f64 / total);
            (d, k, vs, x)
        })
}

fn spd(d: usize) -> impl Strategy<Value = SymMatrix> {
    vectors(d, d + 2).prop_map(move |vs| {
        let m = linalg::gram(&vec![1.0; vs.len()], &vs).unwrap();
        m.add(&SymMatrix::identity(d).scaled(0.1))
    })
}

fn sorted_roots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 1..=20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn char_poly_vanishes_on_spectrum(m in (1usize..=6).prop_flat_map(spd)) {
        let p = linalg::char_poly(&m).unwrap();
        let spec = linalg::sym_eigen(&m).unwrap();
        let scale = (1.0 + spec.max()).powi(m.dim() as i32);
        for &lam in &spec.eigenvalues {
            prop_assert!(p.eval(lam).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn gram_is_linear_in_weights(
        (vs, a, b) in (1usize..=5, 1usize..=6).prop_flat_map(|(d, m)| (
            vectors(d, m),
            prop::collection::vec(0.0..3.0f64, m),
            prop::collection::vec(0.0..3.0f64, m),
        ))
    ) {
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = linalg::gram(&sum, &vs).unwrap();
        let rhs = linalg::gram(&a, &vs).unwrap().add(&linalg::gram(&b, &vs).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn det_is_product_of_eigenvalues(m in (1usize..=6).prop_flat_map(spd)) {
        let product: f64 = linalg::sym_eigen(&m).unwrap().eigenvalues.iter().product();
        let det = linalg::det(&m);
        prop_assert!((det - product).abs() <= 1e-8 * product.abs());
    }

    #[test]
    fn shift_operator_raises_soft_min(
        roots in sorted_roots(), lambda in 0.01..3.0f64, alpha in 0.01..3.0f64,
    ) {
        let p = RealRootedPoly::from_roots(&roots);
        let params = SoftMinParams::new(alpha).unwrap();
        let before = p.alpha_min(params, DEFAULT_ROOT_EPS).unwrap();
        let after = p.apply_shift_op(lambda).alpha_min(params, DEFAULT_ROOT_EPS).unwrap();
        prop_assert!(after >= before + 1.0 / (1.0 / lambda + 1.0 / alpha) - 1e-6);
    }

    #[test]
    fn soft_min_is_below_min_root_by_alpha(roots in sorted_roots(), alpha in 0.01..3.0f64) {
        let p = RealRootedPoly::from_roots(&roots);
        let params = SoftMinParams::new(alpha).unwrap();
        let soft = p.alpha_min(params, DEFAULT_ROOT_EPS).unwrap();
        prop_assert!(soft + alpha <= p.min_root(DEFAULT_ROOT_EPS).unwrap() + 1e-6);
    }

    #[test]
    fn min_root_of_separated_roots(
        base in prop::collection::vec(0.0..1.0f64, 1..=12), shift in -5.0..5.0f64,
    ) {
        // Gaps of at least 0.1 keep every root simple.
        let mut roots = Vec::new();
        let mut at = shift;
        for gap in &base {
            at += 0.1 + gap;
            roots.push(at);
        }
        let p = RealRootedPoly::from_roots(&roots);
        let eps = DEFAULT_ROOT_EPS;
        // Evaluation in the monomial basis perturbs the root by up to
        // roundoff times its condition number Σ|c_j||r|^j / |p'(r)|.
        let r = roots[0];
        let magnitude: f64 = p.coeffs().iter().enumerate().map(|(j, c)| c.abs() * r.abs().powi(j as i32)).sum();
        let slope: f64 = roots[1..].iter().map(|s| (s - r).abs()).product();
        let tol = eps + 64.0 * f64::EPSILON * magnitude / slope;
        prop_assert!((p.min_root(eps).unwrap() - r).abs() <= tol);
    }

    #[test]
    fn ratio_objectives_reduce_to_d_and_a(m in (1usize..=6).prop_flat_map(spd)) {
        let d = m.dim();
        let dv = fractional_objective(&m, ObjectiveKind::D).unwrap();
        let av = fractional_objective(&m, ObjectiveKind::A).unwrap();
        let r0 = fractional_objective(&m, ObjectiveKind::Ratio { l_prime: 0, l: d }).unwrap();
        prop_assert!((dv - r0).abs() <= 1e-10 * dv);
        let r1 = fractional_objective(&m, ObjectiveKind::Ratio { l_prime: d - 1, l: d }).unwrap();
        prop_assert!((av - r1).abs() <= 1e-10 * av);
    }

    #[test]
    fn multiplicative_d_update_never_decreases_det((d, k, vs, x) in small_design()) {
        let mut x = x;
        let mut prev = det(&gram(&vs, &x));
        prop_assume!(prev > 1e-8);
        for _ in 0..20 {
            x = multiplicative_d_step(&vs, &x, k).unwrap();
            let cur = det(&gram(&vs, &x));
            prop_assert!(cur.powf(1.0 / d as f64) >= prev.powf(1.0 / d as f64) * (1.0 - 1e-12));
            prev = cur;
        }
    }

    #[test]
    fn multiplicative_a_update_keeps_budget((_d, k, vs, x) in small_design()) {
        prop_assume!(det(&gram(&vs, &x)) > 1e-8);
        let next = multiplicative_a_step(&vs, &x, k).unwrap();
        let total: f64 = next.iter().sum();
        prop_assert!((total - k as f64).abs() <= 1e-10 * k as f64);
        prop_assert!(next.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn parent_is_mixture_of_children((_d, k, vs, x) in small_design(), depth in 0usize..3) {
        let ctx = FamilyContext::new(vs, x, k).unwrap();
        let prefix: Vec<usize> = (0..depth.min(k - 1)).map(|i| i % ctx.m()).collect();
        let node = ctx.selection(&prefix).unwrap();
        let parent = conditional_expected_charpoly(&ctx, &node).unwrap();
        let kids = children_polys(&ctx, &node).unwrap();
        let mix = convex_combination(&kids, ctx.probabilities()).unwrap();
        prop_assert!(parent.max_abs_diff(&mix) <= 1e-8 * parent.max_abs_coeff());
    }

    #[test]
    fn interlacing_sandwiches_min_root((_d, k, vs, x) in small_design()) {
        let ctx = FamilyContext::new(vs, x, k).unwrap();
        let root = ctx.root();
        let parent = conditional_expected_charpoly(&ctx, &root).unwrap().min_root(1e-10).unwrap();
        let kids: Vec<f64> = children_polys(&ctx, &root)
            .unwrap()
            .iter()
            .map(|p| p.min_root(1e-10).unwrap())
            .collect();
        let hi = kids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = kids.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(hi >= parent - 1e-7 && lo <= parent + 1e-7);
    }

    #[test]
    fn root_node_matches_closed_forms((d, k, vs, x) in small_design()) {
        let ctx = FamilyContext::new(vs, x, k).unwrap();
        let f = conditional_expected_charpoly(&ctx, &ctx.root()).unwrap();
        let eigs = linalg::sym_eigen(ctx.gram()).unwrap().eigenvalues;
        let closed = root_poly_closed_form(&eigs, k).unwrap();
        prop_assert!(f.max_abs_diff(&closed) <= 1e-8 * closed.max_abs_coeff());

        // With w = X^{-1/2} v the root polynomial is (1 - ∂/k)^k x^d.
        let spec = linalg::sym_eigen(ctx.gram()).unwrap();
        prop_assume!(spec.min() > 1e-6 * spec.max());
        let root = linalg::inv_sqrt(ctx.gram(), 1e-10).unwrap();
        let ws: Vec<Vec<f64>> = ctx.vectors().iter().map(|v| root.mul_vec(v)).collect();
        let nctx = FamilyContext::new(ws, ctx.x().to_vec(), k).unwrap();
        let g = conditional_expected_charpoly(&nctx, &nctx.root()).unwrap();
        let target = normalized_root_poly(k, d);
        prop_assert!(g.max_abs_diff(&target) <= 1e-8 * target.max_abs_coeff());
    }

    #[test]
    fn root_coefficients_scale_elementary_symmetric((d, k, vs, x) in small_design()) {
        let ctx = FamilyContext::new(vs, x, k).unwrap();
        let f = conditional_expected_charpoly(&ctx, &ctx.root()).unwrap();
        let eigs = eigenvalues(&gram(ctx.vectors(), ctx.x()));
        for l in 0..=d {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let expected = sign * falling(k, l) / (k as f64).powi(l as i32) * esym(&eigs, l);
            let got = f.coeff(d - l);
            prop_assert!((got - expected).abs() <= 1e-8 * max_abs(f.coeffs()));
        }
    }

    #[test]
    fn leaf_scores_match_matrix_objectives((d, k, vs, x) in small_design(), picks in prop::collection::vec(0usize..8, 8)) {
        let ctx = FamilyContext::new(vs.clone(), x, k).unwrap();
        let prefix: Vec<usize> = picks.iter().take(k).map(|&t| t % ctx.m()).collect();
        let leaf = conditional_expected_charpoly(&ctx, &ctx.selection(&prefix).unwrap()).unwrap();
        let s = selection_gram(&vs, &prefix);
        let eigs = eigenvalues(&s);
        prop_assume!(eigs[0] > 1e-3 * eigs[d - 1].max(1e-300));
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-7 * b.abs().max(1e-300);
        prop_assert!(rel(node_score(&leaf, ObjectiveKind::D).unwrap().value(), det(&s)));
        prop_assert!(rel(node_score(&leaf, ObjectiveKind::A).unwrap().value(), trace_inverse(&s)));
        prop_assert!((node_score(&leaf, ObjectiveKind::E).unwrap().value() - eigs[0]).abs() <= 1e-7 * eigs[d - 1]);
        for kind in ObjectiveKind::all_ratios(d) {
            let ObjectiveKind::Ratio { l_prime, l } = kind else { unreachable!() };
            let score = node_score(&leaf, kind).unwrap().value();
            prop_assert!(rel(score, esym(&eigs, l_prime) / esym(&eigs, l)));
        }
    }

    #[test]
    fn rounding_is_deterministic((d, k, vs, x) in small_design()) {
        let inst = Instance::new(d, k, vs).unwrap();
        let frac = validate_fractional(&inst, &x, ObjectiveKind::A).unwrap();
        let a = round_design(&inst, &frac, ObjectiveKind::A);
        let b = round_design(&inst, &frac, ObjectiveKind::A);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.selection, b.selection),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}

#[test]
fn inv_sqrt_of_identity_is_identity() {
    for d in 1..=6 {
        let r = linalg::inv_sqrt(&SymMatrix::identity(d), 1e-10).unwrap();
        assert!(r.max_abs_diff(&SymMatrix::identity(d)) <= 1e-12);
    }
}

#[test]
fn closed_forms_agree_in_floating_point() {
    for k in 1..=12 {
        for d in 1..=k {
            let a = root_poly_closed_form(&vec![1.0; d], k).unwrap();
            let b = normalized_root_poly(k, d);
            assert!(a.max_abs_diff(&b) <= 1e-10, "d={d} k={k}");
        }
    }
}
