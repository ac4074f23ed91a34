//! Property-based checks of the core inequalities and schedule invariants
//! over generated inputs, complementing the fixed-seed acceptance suite.

use heavytail::{
    clip, generalization_bound, moment_constant, optimal_truncation_level,
    predicted_rate_exponent, schedule_for, stability_bound, truncation_objective, Algorithm,
    TailParams, TheoryParams, Vector,
};
use proptest::prelude::*;

fn vector_strategy(max_dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1e6f64..1e6, 1..=max_dim).prop_map(|v| Vector::new(v).unwrap())
}

fn vector_pair_strategy(max_dim: usize) -> impl Strategy<Value = (Vector, Vector)> {
    (1..=max_dim).prop_flat_map(|dim| {
        (
            prop::collection::vec(-1e6f64..1e6, dim),
            prop::collection::vec(-1e6f64..1e6, dim),
        )
            .prop_map(|(a, b)| (Vector::new(a).unwrap(), Vector::new(b).unwrap()))
    })
}

fn algorithm_strategy() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(Algorithm::ALL.to_vec())
}

proptest! {
    #[test]
    fn clipping_caps_the_norm_and_never_lengthens(
        u in vector_strategy(8),
        gamma in 1e-6f64..1e6,
    ) {
        let c = clip(&u, gamma).unwrap();
        prop_assert!(c.norm() <= gamma * (1.0 + 1e-12));
        prop_assert!(c.norm() <= u.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn clipped_square_respects_the_interpolated_cap(
        u in vector_strategy(8),
        gamma in 1e-6f64..1e6,
        p in 1.000001f64..=2.0,
    ) {
        let c = clip(&u, gamma).unwrap();
        let cap = gamma.powf(2.0 - p) * u.norm().powf(p);
        prop_assert!(c.norm().powi(2) <= cap * (1.0 + 1e-12));
    }

    #[test]
    fn clipping_residual_respects_the_tail_cap(
        u in vector_strategy(8),
        gamma in 1e-6f64..1e6,
        p in 1.000001f64..=2.0,
    ) {
        let c = clip(&u, gamma).unwrap();
        let cap = u.norm().powf(p) / gamma.powf(p - 1.0);
        prop_assert!(u.sub(&c).norm() <= cap * (1.0 + 1e-12));
    }

    #[test]
    fn clipping_is_a_contraction(
        (u, v) in vector_pair_strategy(8),
        gamma in 1e-6f64..1e6,
    ) {
        let cu = clip(&u, gamma).unwrap();
        let cv = clip(&v, gamma).unwrap();
        prop_assert!(cu.sub(&cv).norm() <= u.sub(&v).norm() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn normalized_direction_alignment((u, v) in vector_pair_strategy(8)) {
        prop_assume!(v.norm() > 0.0);
        let lhs = u.norm() - 2.0 * u.sub(&v).norm();
        let rhs = u.dot(&v) / v.norm();
        let scale = u.norm().max(v.norm()).max(1.0);
        prop_assert!(lhs <= rhs + 1e-12 * scale);
    }

    #[test]
    fn infinite_threshold_is_the_identity(u in vector_strategy(8)) {
        let c = clip(&u, f64::INFINITY).unwrap();
        prop_assert_eq!(u.as_slice(), c.as_slice());
    }

    #[test]
    fn moment_constant_stays_in_range(p in 1.000001f64..=2.0) {
        let c = moment_constant(p).unwrap();
        prop_assert!((1.0..=3.0).contains(&c), "C({p}) = {c}");
    }

    #[test]
    fn moment_constant_rejects_out_of_range(p in prop_oneof![-10.0f64..=1.0, 2.000001f64..10.0]) {
        prop_assert!(moment_constant(p).is_err());
    }

    #[test]
    fn closed_form_truncation_level_is_globally_optimal(
        p in 1.01f64..1.99,
        n in 2usize..100_000,
        sigma in 0.01f64..100.0,
        tau in 1e-6f64..1e12,
    ) {
        let tail = TailParams::new(p, sigma).unwrap();
        let star = optimal_truncation_level(&tail, n).unwrap();
        let at_star = truncation_objective(star, &tail, n).unwrap();
        let elsewhere = truncation_objective(tau, &tail, n).unwrap();
        prop_assert!(at_star <= elsewhere * (1.0 + 1e-9));
    }

    #[test]
    fn generalization_bound_is_affine_in_stability_and_shrinks_with_n(
        p in 1.01f64..=2.0,
        sigma in 0.01f64..100.0,
        eps in 0.0f64..10.0,
        n in 2usize..1_000_000,
    ) {
        let tail = TailParams::new(p, sigma).unwrap();
        let at_zero = generalization_bound(0.0, &tail, n).unwrap();
        let at_eps = generalization_bound(eps, &tail, n).unwrap();
        // stability enters with slope exactly four
        prop_assert!((at_eps - at_zero - 4.0 * eps).abs() <= 1e-9 * at_eps.max(1.0));
        let at_larger_n = generalization_bound(eps, &tail, n * 4).unwrap();
        prop_assert!(at_larger_n <= at_eps);
    }

    #[test]
    fn prescribed_schedules_are_well_formed(
        alg in algorithm_strategy(),
        n in 2usize..1_000_000,
        p in 1.05f64..=2.0,
        scale in 0.1f64..10.0,
    ) {
        let s = schedule_for(alg, n, p, scale).unwrap();
        s.validate_for(alg).unwrap();
        prop_assert!(s.t_steps >= 1);
        prop_assert!(s.eta > 0.0 && s.eta.is_finite());
        if let Some(g) = s.gamma {
            prop_assert!(g > 0.0 && g.is_finite());
        }
        if let Some(b) = s.beta {
            prop_assert!((0.0..1.0).contains(&b));
        }
        if let Some(bs) = s.batch {
            prop_assert!(bs >= 1);
        }
        let theory = TheoryParams::new(2.0, 1.0, 1.0).unwrap();
        let eps = stability_bound(alg, &s, &theory, n).unwrap();
        prop_assert!(eps > 0.0 && eps.is_finite());
    }

    #[test]
    fn momentum_rate_dominates_clipped_sgd_rate(p in 1.000001f64..=2.0) {
        let clipped = predicted_rate_exponent(Algorithm::ClippedSgd, p).unwrap();
        let momentum = predicted_rate_exponent(Algorithm::NsgdM, p).unwrap();
        prop_assert!(clipped < 0.0 && momentum < 0.0);
        prop_assert!(momentum <= clipped);
    }
}
