use otrefine::barycenter::{bar_wp, BarycenterConfig};
use otrefine::flow::solve_exact;
use otrefine::measure::{cost_to_distance, ground_cost, DiscreteMeasure, PointCloud};
use otrefine::multiscale::{approx_wp, compose_plan, MultiscaleConfig};
use otrefine::plan::{interpolate, plan_cost};
use proptest::prelude::*;

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), 1.0..4.0f64]
}

fn measure(max_atoms: usize, dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms).prop_flat_map(move |n| {
        (
            prop::collection::vec(-5.0..5.0f64, n * dim),
            prop::collection::vec(0.01..1.0f64, n),
        )
            .prop_map(move |(coords, w)| {
                let total: f64 = w.iter().sum();
                let w = w.iter().map(|v| v / total).collect();
                DiscreteMeasure::new(PointCloud::new(dim, coords).unwrap(), w).unwrap()
            })
    })
}

fn pair(max_atoms: usize) -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
    (1..=3usize).prop_flat_map(move |d| (measure(max_atoms, d), measure(max_atoms, d)))
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ground_distance_is_a_metric(
        (a, b, c) in (1..=4usize).prop_flat_map(|d| (point(d), point(d), point(d))),
        p in exponent(),
    ) {
        let dist = |u: &[f64], v: &[f64]| cost_to_distance(ground_cost(u, v, p).unwrap(), p);
        prop_assert!(dist(&a, &a) == 0.0);
        prop_assert!((dist(&a, &b) - dist(&b, &a)).abs() <= 1e-12 * (1.0 + dist(&a, &b)));
        prop_assert!(dist(&a, &c) <= dist(&a, &b) + dist(&b, &c) + 1e-9);
    }

    #[test]
    fn exact_plan_has_the_right_marginals_and_cost((x, y) in pair(12), p in exponent()) {
        let sol = solve_exact(&x, &y, p).unwrap();
        prop_assert!(sol.plan.marginal_error(x.weights(), y.weights()) < 1e-9);
        prop_assert!(sol.plan.nnz() < x.len() + y.len());
        let cost = plan_cost(&sol.plan, x.points(), y.points(), p).unwrap();
        prop_assert!((cost - sol.cost).abs() <= 1e-9 * (1.0 + sol.cost));
    }

    #[test]
    fn exact_distance_is_a_metric(
        (x, y, z) in (1..=2usize).prop_flat_map(|d| (measure(8, d), measure(8, d), measure(8, d))),
        p in exponent(),
    ) {
        let w = |a: &DiscreteMeasure, b: &DiscreteMeasure| cost_to_distance(solve_exact(a, b, p).unwrap().cost, p);
        let (xy, yx) = (w(&x, &y), w(&y, &x));
        prop_assert!((xy - yx).abs() <= 1e-9 * (1.0 + xy));
        prop_assert!(w(&x, &x) <= 1e-9);
        prop_assert!(w(&x, &z) <= xy + w(&y, &z) + 1e-9);
    }

    #[test]
    fn interpolation_moves_at_constant_speed((x, y) in pair(10), p in exponent(), t in 0.0..1.0f64) {
        let sol = solve_exact(&x, &y, p).unwrap();
        let total = cost_to_distance(sol.cost, p);
        let mid = interpolate(&sol.plan, x.points(), y.points(), t).unwrap();
        prop_assert!((mid.total_mass() - 1.0).abs() < 1e-9);
        let near = cost_to_distance(solve_exact(&x, &mid, p).unwrap().cost, p);
        let far = cost_to_distance(solve_exact(&mid, &y, p).unwrap().cost, p);
        prop_assert!((near - t * total).abs() <= 1e-6 * (1.0 + total));
        prop_assert!((far - (1.0 - t) * total).abs() <= 1e-6 * (1.0 + total));
    }

    #[test]
    fn hub_plans_conserve_mass((x, y) in pair(15), p in exponent(), kappa in 1..5usize, seed in 0..1000u64) {
        let mut cfg = BarycenterConfig::new(kappa.min(x.len() + y.len()), p);
        cfg.seed = seed;
        let res = bar_wp(&x, &y, &cfg).unwrap();
        prop_assert!(res.state.conservation_error() < 1e-9);
        prop_assert!(res.state.plan_x.marginal_error(x.weights(), &res.state.weights) < 1e-9);
        prop_assert!(res.state.plan_y.marginal_error(y.weights(), &res.state.weights) < 1e-9);
        let composed = compose_plan(&res.state).unwrap();
        prop_assert!(composed.marginal_error(x.weights(), y.weights()) < 1e-9);
    }

    #[test]
    fn multiscale_stays_admissible_and_sparse(
        (x, y) in pair(25),
        p in exponent(),
        kappa in 1..5usize,
        threshold in 2..30usize,
    ) {
        let res = approx_wp(&x, &y, &MultiscaleConfig::new(kappa, p).with_threshold(threshold)).unwrap();
        prop_assert!(res.plan.marginal_error(x.weights(), y.weights()) < 1e-9);
        let exact = solve_exact(&x, &y, p).unwrap().cost;
        prop_assert!(cost_to_distance(res.cost_hat, p) >= cost_to_distance(exact, p) - 1e-9);
        if let Some(block) = res.block_cost {
            prop_assert!(cost_to_distance(res.cost_hat, p) <= cost_to_distance(block, p) + 1e-9);
        }
    }
}
