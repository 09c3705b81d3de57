mod common;

use common::{golden_section, random_column, random_measure, rel_diff, rng};
use otrefine::barycenter::update::{
    column_objective, irls_minimize, lower_weighted_median, newton_minimize, weighted_mean,
};
use otrefine::barycenter::{
    bar_wp, init_support, update_positions_irls, update_positions_median, update_positions_newton,
    update_positions_p2, BarycenterConfig,
};
use otrefine::flow::solve_exact;
use otrefine::measure::{cost_to_distance, DiscreteMeasure, GroundCost, PointCloud};
use otrefine::plan::{PlanEntry, TransportPlan};
use rand::Rng;

fn g(p: f64) -> GroundCost {
    GroundCost::new(p).unwrap()
}

#[test]
fn mean_matches_golden_section() {
    let mut r = rng(31);
    for _ in 0..100 {
        let col = random_column(&mut r);
        let z = weighted_mean(&col).unwrap();
        let oracle = golden_section(&col, &g(2.0));
        let (fz, fo) = (column_objective(&col, &g(2.0), z), column_objective(&col, &g(2.0), oracle));
        assert!(fz - fo <= 1e-8 * fo + 1e-14, "{fz} vs {fo}");
        assert!((z - oracle).abs() < 1e-6, "{z} vs {oracle}");
    }
}

#[test]
fn newton_matches_golden_section() {
    let mut r = rng(32);
    for _ in 0..100 {
        let col = random_column(&mut r);
        let p = r.gen_range(2.1..6.0);
        let z0 = r.gen_range(-6.0..6.0);
        let z = newton_minimize(&col, &g(p), z0, 20);
        let oracle = golden_section(&col, &g(p));
        let (fz, fo) = (column_objective(&col, &g(p), z), column_objective(&col, &g(p), oracle));
        assert!(rel_diff(fz, fo) < 1e-6, "p={p}: {fz} vs {fo}");
    }
}

#[test]
fn newton_never_increases_the_objective() {
    let mut r = rng(33);
    for _ in 0..100 {
        let col = random_column(&mut r);
        let p = r.gen_range(2.1..6.0);
        let z0 = r.gen_range(-6.0..6.0);
        let start = column_objective(&col, &g(p), z0);
        let mut prev = start;
        for iters in 1..8 {
            let f = column_objective(&col, &g(p), newton_minimize(&col, &g(p), z0, iters));
            assert!(f <= prev * (1.0 + 1e-15) + 1e-300);
            prev = f;
        }
    }
}

#[test]
fn median_is_optimal_over_sample_points() {
    let mut r = rng(34);
    for _ in 0..100 {
        let col = random_column(&mut r);
        let z = lower_weighted_median(&col).unwrap();
        let fz = column_objective(&col, &g(1.0), z);
        let best = col
            .iter()
            .map(|s| column_objective(&col, &g(1.0), s.0))
            .fold(f64::INFINITY, f64::min);
        assert!(fz - best <= 1e-12 * (1.0 + best), "{fz} vs {best}");
        assert!(col.iter().any(|s| s.0 == z));
    }
}

#[test]
fn irls_matches_golden_section() {
    let mut r = rng(35);
    for _ in 0..100 {
        let col = random_column(&mut r);
        let p = r.gen_range(1.05..1.95);
        let z0 = r.gen_range(-6.0..6.0);
        let z = irls_minimize(&col, &g(p), z0, 20);
        let oracle = golden_section(&col, &g(p));
        let (fz, fo) = (column_objective(&col, &g(p), z), column_objective(&col, &g(p), oracle));
        assert!(fz <= fo * (1.0 + 1e-4), "p={p}: {fz} vs {fo}");
        let fz0 = column_objective(&col, &g(p), z0.clamp(-5.0, 5.0));
        assert!(fz <= fz0 * (1.0 + 1e-15));
    }
}

fn single_column_plans(xw: &[f64], yw: &[f64]) -> (TransportPlan, TransportPlan) {
    let plan = |w: &[f64]| {
        TransportPlan::new(
            w.len(),
            1,
            w.iter()
                .enumerate()
                .map(|(i, &mass)| PlanEntry { row: i, col: 0, mass })
                .collect(),
        )
        .unwrap()
    };
    (plan(xw), plan(yw))
}

#[test]
fn plan_level_update_examples() {
    let x = PointCloud::new(1, vec![0.0]).unwrap();
    let y = PointCloud::new(1, vec![2.0]).unwrap();
    let z = PointCloud::new(1, vec![7.0]).unwrap();
    let (px, py) = single_column_plans(&[1.0], &[1.0]);
    assert_eq!(update_positions_p2(&px, &py, &x, &y, &z).unwrap().coords(), &[1.0]);

    // Mass from one side only.
    let x5 = PointCloud::new(1, vec![5.0]).unwrap();
    let (px, _) = single_column_plans(&[1.0], &[]);
    let py = TransportPlan::empty(1, 1);
    assert_eq!(update_positions_p2(&px, &py, &x5, &y, &z).unwrap().coords(), &[5.0]);

    let (px, py) = single_column_plans(&[0.5], &[0.5]);
    let zn = update_positions_newton(&px, &py, &x, &y, 4.0, &z, 20).unwrap();
    assert!((zn.coords()[0] - 1.0).abs() < 1e-9);
    let zm = update_positions_median(&px, &py, &x, &y, &z).unwrap();
    assert_eq!(zm.coords(), &[0.0]);
    let zi = update_positions_irls(&px, &py, &x, &y, 1.5, &z, 20).unwrap();
    assert!((zi.coords()[0] - 1.0).abs() < 1e-9);

    // A hub with no mass keeps its position.
    let two = PointCloud::new(1, vec![7.0, -3.0]).unwrap();
    let px = TransportPlan::new(1, 2, vec![PlanEntry { row: 0, col: 0, mass: 1.0 }]).unwrap();
    let py = TransportPlan::new(1, 2, vec![PlanEntry { row: 0, col: 0, mass: 1.0 }]).unwrap();
    assert_eq!(update_positions_p2(&px, &py, &x, &y, &two).unwrap().coords(), &[1.0, -3.0]);

    assert!(update_positions_newton(&px, &py, &x, &y, 1.5, &two, 20).is_err());
    assert!(update_positions_irls(&px, &py, &x, &y, 2.5, &two, 20).is_err());
}

#[test]
fn bar_wp_is_monotone_and_bounds_the_exact_cost() {
    let mut r = rng(36);
    for trial in 0..40 {
        let p = [1.0, 1.5, 2.0, 3.0][trial % 4];
        let (m, n) = (r.gen_range(2..60), r.gen_range(2..60));
        let x = random_measure(&mut r, m, 2, 1.0);
        let y = random_measure(&mut r, n, 2, 1.0);
        let kappa = r.gen_range(1..=6.min(m + n));
        let mut cfg = BarycenterConfig::new(kappa, p);
        cfg.seed = trial as u64;
        let res = bar_wp(&x, &y, &cfg).unwrap();
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "p={p}: objective rose {} -> {}", w[0], w[1]);
        }
        assert!(res.state.conservation_error() < 1e-9);
        assert!(res.state.weights.iter().all(|&w| w > 0.0));
        assert!(res.state.plan_x.marginal_error(x.weights(), &res.state.weights) < 1e-9);
        assert!(res.state.plan_y.marginal_error(y.weights(), &res.state.weights) < 1e-9);
        let exact = solve_exact(&x, &y, p).unwrap().cost;
        assert!(
            cost_to_distance(res.cost_tilde, p) >= cost_to_distance(exact, p) * (1.0 - 1e-9),
            "p={p}: {} < {exact}",
            res.cost_tilde
        );
        let expect = (cost_to_distance(res.cost_x, p) + cost_to_distance(res.cost_y, p)).powf(p);
        assert!(rel_diff(expect, res.cost_tilde) < 1e-12);
    }
}

#[test]
fn two_atoms_each_side_reach_the_exact_cost() {
    // Matching the atoms pairwise is optimal and the midpoint hubs realise it.
    let x = DiscreteMeasure::from_points(&[[0.0, 0.0], [0.0, 3.0]], vec![0.4, 0.6]).unwrap();
    let y = DiscreteMeasure::from_points(&[[1.0, 0.0], [1.0, 3.0]], vec![0.4, 0.6]).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let exact = solve_exact(&x, &y, p).unwrap().cost;
        let res = bar_wp(&x, &y, &BarycenterConfig::new(4, p)).unwrap();
        assert!(rel_diff(res.cost_tilde, exact) < 1e-6, "p={p}: {} vs {exact}", res.cost_tilde);
        // Both halves of the barycenter split carry the same distance.
        let (a, b) = (cost_to_distance(res.cost_x, p), cost_to_distance(res.cost_y, p));
        assert!(rel_diff(a, b) < 1e-2, "p={p}: halves {a} and {b}");
    }
}

#[test]
fn init_support_is_deterministic_and_distinct() {
    let mut r = rng(37);
    let x = random_measure(&mut r, 30, 2, 1.0);
    let y = random_measure(&mut r, 20, 2, 1.0);
    let a = init_support(&x, &y, 10, 5).unwrap();
    assert_eq!(a, init_support(&x, &y, 10, 5).unwrap());
    assert_ne!(a, init_support(&x, &y, 10, 6).unwrap());
    let pooled: Vec<&[f64]> = x.points().iter().chain(y.points().iter()).collect();
    let mut hits: Vec<usize> = a
        .iter()
        .map(|z| pooled.iter().position(|q| *q == z).expect("hub not drawn from the pool"))
        .collect();
    hits.sort_unstable();
    hits.dedup();
    assert_eq!(hits.len(), 10);
    let all = init_support(&x, &y, 50, 1).unwrap();
    assert_eq!(all.len(), 50);
}
