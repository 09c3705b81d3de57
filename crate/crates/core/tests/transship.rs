mod common;

use common::{random_measure, rel_diff, rng};
use otrefine::flow::oracle::solve_dense_lp;
use otrefine::flow::solve_exact;
use otrefine::measure::{cost_to_distance, DiscreteMeasure, GroundCost, PointCloud};
use otrefine::plan::plan_cost;
use otrefine::transship::{solve_transshipment, TransshipmentProblem, TransshipmentSolution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_hubs(r: &mut ChaCha8Rng, kappa: usize, d: usize) -> PointCloud {
    PointCloud::new(d, (0..kappa * d).map(|_| r.gen::<f64>()).collect()).unwrap()
}

fn solve(x: &DiscreteMeasure, y: &DiscreteMeasure, z: &PointCloud, p: f64) -> TransshipmentSolution {
    solve_transshipment(&TransshipmentProblem {
        mu_x: x,
        mu_y: y,
        hubs: z,
        p,
    })
    .unwrap()
}

/// The fixed-hub problem written out as a dense LP over `(e_ik, e_kj)`.
fn lp_objective(x: &DiscreteMeasure, y: &DiscreteMeasure, z: &PointCloud, p: f64) -> f64 {
    let (m, n, kappa) = (x.len(), y.len(), z.len());
    let g = GroundCost::new(p).unwrap();
    let vars = (m + n) * kappa;
    let ex = |i: usize, k: usize| i * kappa + k;
    let ey = |j: usize, k: usize| m * kappa + j * kappa + k;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; vars];
        (0..kappa).for_each(|k| row[ex(i, k)] = 1.0);
        a.push(row);
        b.push(x.weights()[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; vars];
        (0..kappa).for_each(|k| row[ey(j, k)] = 1.0);
        a.push(row);
        b.push(y.weights()[j]);
    }
    for k in 0..kappa {
        let mut row = vec![0.0; vars];
        (0..n).for_each(|j| row[ey(j, k)] = 1.0);
        (0..m).for_each(|i| row[ex(i, k)] = -1.0);
        a.push(row);
        b.push(0.0);
    }
    let mut c = vec![0.0; vars];
    for k in 0..kappa {
        for i in 0..m {
            c[ex(i, k)] = g.eval(x.point(i), z.point(k));
        }
        for j in 0..n {
            c[ey(j, k)] = g.eval(y.point(j), z.point(k));
        }
    }
    solve_dense_lp(&a, &b, &c).unwrap().0
}

fn check_conservation(sol: &TransshipmentSolution, x: &DiscreteMeasure, y: &DiscreteMeasure) {
    let kappa = sol.hub_mass.len();
    for (a, b) in sol.plan_x.row_sums().iter().zip(x.weights()) {
        assert!((a - b).abs() < 1e-9);
    }
    for (a, b) in sol.plan_y.row_sums().iter().zip(y.weights()) {
        assert!((a - b).abs() < 1e-9);
    }
    let (cx, cy) = (sol.plan_x.col_sums(), sol.plan_y.col_sums());
    for k in 0..kappa {
        assert!((cx[k] - cy[k]).abs() < 1e-9, "hub {k}: in {} out {}", cx[k], cy[k]);
        assert!((cx[k] - sol.hub_mass[k]).abs() < 1e-9);
    }
}

#[test]
fn single_hub_cost_is_the_sum_of_star_costs() {
    let mut r = rng(21);
    for _ in 0..20 {
        let p = [1.0, 1.5, 2.0, 3.0][r.gen_range(0..4)];
        let size_x = r.gen_range(1..20);
        let x = random_measure(&mut r, size_x, 2, 1.0);
        let size_y = r.gen_range(1..20);
        let y = random_measure(&mut r, size_y, 2, 1.0);
        let z = random_hubs(&mut r, 1, 2);
        let sol = solve(&x, &y, &z, p);
        let g = GroundCost::new(p).unwrap();
        let star = |mu: &DiscreteMeasure| -> f64 {
            (0..mu.len()).map(|i| mu.weights()[i] * g.eval(mu.point(i), z.point(0))).sum()
        };
        assert!(rel_diff(sol.objective(), star(&x) + star(&y)) < 1e-10);
        check_conservation(&sol, &x, &y);
    }
}

#[test]
fn hubs_on_the_source_support() {
    let mut r = rng(22);
    for _ in 0..30 {
        let p = [1.0, 1.5, 2.0, 3.0][r.gen_range(0..4)];
        let size_x = r.gen_range(1..=8);
        let x = random_measure(&mut r, size_x, 2, 1.0);
        let size_y = r.gen_range(1..=8);
        let y = random_measure(&mut r, size_y, 2, 1.0);
        let sol = solve(&x, &y, x.points(), p);
        let exact = solve_exact(&x, &y, p).unwrap();
        // The identity x-leg followed by the exact plan is feasible.
        assert!(sol.objective() <= exact.cost * (1.0 + 1e-9));
        if p == 1.0 {
            // With p = 1 a detour through a hub never beats the direct arc.
            assert!(rel_diff(sol.objective(), exact.cost) < 1e-9);
        }
    }
    // Hubs exactly at the x atoms and targets beyond them: no detour helps for any p.
    let x = DiscreteMeasure::from_points(&[[0.0], [1.0]], vec![0.5, 0.5]).unwrap();
    let y = DiscreteMeasure::from_points(&[[-3.0], [4.0]], vec![0.5, 0.5]).unwrap();
    for p in [1.0, 1.5, 2.0, 3.0] {
        let sol = solve(&x, &y, x.points(), p);
        assert!(sol.cost_x < 1e-12);
        assert!(rel_diff(sol.objective(), solve_exact(&x, &y, p).unwrap().cost) < 1e-9);
    }
}

#[test]
fn matches_dense_lp() {
    let mut r = rng(23);
    for _ in 0..60 {
        let p = [1.0, 1.5, 2.0, 3.0][r.gen_range(0..4)];
        let d = r.gen_range(1..=3);
        let size_x = r.gen_range(1..=6);
        let x = random_measure(&mut r, size_x, d, 1.0);
        let size_y = r.gen_range(1..=6);
        let y = random_measure(&mut r, size_y, d, 1.0);
        let size_z = r.gen_range(1..=3);
        let z = random_hubs(&mut r, size_z, d);
        let sol = solve(&x, &y, &z, p);
        let lp = lp_objective(&x, &y, &z, p);
        assert!(rel_diff(sol.objective(), lp) < 1e-9, "{} vs {lp}", sol.objective());
        check_conservation(&sol, &x, &y);
        let px = plan_cost(&sol.plan_x, x.points(), &z, p).unwrap();
        let py = plan_cost(&sol.plan_y, y.points(), &z, p).unwrap();
        assert!(rel_diff(px, sol.cost_x) < 1e-12 && rel_diff(py, sol.cost_y) < 1e-12);
    }
}

#[test]
fn extra_hub_never_hurts() {
    let mut r = rng(24);
    for _ in 0..30 {
        let p = [1.0, 2.0, 3.0][r.gen_range(0..3)];
        let size_x = r.gen_range(5..40);
        let x = random_measure(&mut r, size_x, 2, 1.0);
        let size_y = r.gen_range(5..40);
        let y = random_measure(&mut r, size_y, 2, 1.0);
        let kappa = r.gen_range(1..6);
        let z = random_hubs(&mut r, kappa + 1, 2);
        let fewer = PointCloud::new(2, z.coords()[..2 * kappa].to_vec()).unwrap();
        let a = solve(&x, &y, &fewer, p).objective();
        let b = solve(&x, &y, &z, p).objective();
        assert!(b <= a * (1.0 + 1e-12), "{b} > {a}");
    }
}

#[test]
fn distance_sum_bounds_the_exact_distance() {
    let mut r = rng(25);
    for _ in 0..30 {
        let p = [1.0, 1.5, 2.0, 3.0][r.gen_range(0..4)];
        let size_x = r.gen_range(1..30);
        let x = random_measure(&mut r, size_x, 2, 1.0);
        let size_y = r.gen_range(1..30);
        let y = random_measure(&mut r, size_y, 2, 1.0);
        let size_z = r.gen_range(1..5);
        let z = random_hubs(&mut r, size_z, 2);
        let sol = solve(&x, &y, &z, p);
        let tilde = cost_to_distance(sol.cost_x, p) + cost_to_distance(sol.cost_y, p);
        let exact = cost_to_distance(solve_exact(&x, &y, p).unwrap().cost, p);
        assert!(tilde >= exact * (1.0 - 1e-9), "{tilde} < {exact}");
    }
}
