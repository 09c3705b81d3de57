use std::ops::Range;

use super::simplex::{ArcSet, Basis, NetworkSimplex, REDUCED_COST_EPS};
use super::{apportion, MASS_UNITS};
use crate::error::{Error, Result};
use crate::measure::{balance, DiscreteMeasure, GroundCost, PointCloud};
use crate::plan::{PlanEntry, TransportPlan};

/// Limits of the exact solver.
#[derive(Clone, Debug)]
pub struct ExactConfig {
    /// Instances with `m * n` at or above this many cost entries are rejected.
    pub max_cells: u128,
    /// Above this many cells the cost matrix is evaluated per arc instead of stored.
    pub dense_cost_limit: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_cells: 1_000_000_000,
            dense_cost_limit: 10_000_000,
        }
    }
}

/// Optimal coupling and its cost on the `W_p^p` scale.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub cost: f64,
    pub plan: TransportPlan,
    pub pivots: u64,
}

/// Complete bipartite graph `x_i -> y_j`, arc `i * n + j`; nodes `i` and `m + j`.
struct Bipartite<'a> {
    x: &'a PointCloud,
    y: &'a PointCloud,
    cost: GroundCost,
    dense: Option<Vec<f64>>,
    m: usize,
    n: usize,
}

impl Bipartite<'_> {
    fn max_cost(&self) -> f64 {
        match &self.dense {
            Some(c) => c.iter().copied().fold(0.0, f64::max),
            None => self.cost.bounding_cost(self.x, self.y),
        }
    }
}

impl ArcSet for Bipartite<'_> {
    fn node_count(&self) -> usize {
        self.m + self.n
    }

    fn priced_arcs(&self) -> usize {
        self.m * self.n
    }

    #[inline]
    fn endpoints(&self, arc: usize) -> (usize, usize) {
        (arc / self.n, self.m + arc % self.n)
    }

    #[inline]
    fn cost(&self, arc: usize) -> f64 {
        match &self.dense {
            Some(c) => c[arc],
            None => self.cost.eval(self.x.point(arc / self.n), self.y.point(arc % self.n)),
        }
    }

    fn scan(&self, pi: &[f64], range: Range<usize>, best: &mut f64, best_arc: &mut usize) {
        let (pi_x, pi_y) = pi.split_at(self.m);
        let n = self.n;
        let mut a = range.start;
        while a < range.end {
            let i = a / n;
            let j0 = a % n;
            let row_end = (a - j0 + n).min(range.end);
            let j1 = j0 + (row_end - a);
            let px = pi_x[i];
            match &self.dense {
                Some(c) => {
                    let row = &c[i * n..(i + 1) * n];
                    for j in j0..j1 {
                        let rc = row[j] + px - pi_y[j];
                        if rc < *best {
                            *best = rc;
                            *best_arc = i * n + j;
                        }
                    }
                }
                None => {
                    let xi = self.x.point(i);
                    for j in j0..j1 {
                        let rc = self.cost.eval(xi, self.y.point(j)) + px - pi_y[j];
                        if rc < *best {
                            *best = rc;
                            *best_arc = i * n + j;
                        }
                    }
                }
            }
            a = row_end;
        }
    }
}

/// North-west corner coupling in the order of a linear projection, rooted at
/// the first source. Ties advance the column so that every zero-flow tree
/// arc points away from the root.
fn northwest_start(set: &Bipartite<'_>, ux: &[i64], uy: &[i64]) -> Result<Basis> {
    let key = |p: &[f64]| p.iter().enumerate().map(|(s, v)| v * (1.0 + 0.1 * s as f64)).sum::<f64>();
    let mut ox: Vec<usize> = (0..set.m).collect();
    let mut oy: Vec<usize> = (0..set.n).collect();
    ox.sort_by(|&a, &b| key(set.x.point(a)).total_cmp(&key(set.x.point(b))));
    oy.sort_by(|&a, &b| key(set.y.point(a)).total_cmp(&key(set.y.point(b))));

    let mut tree = Vec::with_capacity(set.m + set.n - 1);
    let (mut a, mut b) = (0, 0);
    let mut rx = ux[ox[0]];
    let mut ry = uy[oy[0]];
    loop {
        let f = rx.min(ry);
        tree.push((ox[a] * set.n + oy[b], f));
        rx -= f;
        ry -= f;
        if a + 1 == set.m && b + 1 == set.n {
            break;
        }
        if (ry == 0 && b + 1 < set.n) || a + 1 == set.m {
            b += 1;
            ry += uy[oy[b]];
        } else {
            a += 1;
            rx += ux[ox[a]];
        }
    }
    Basis::from_tree_arcs(set, ox[0], &tree)
}

/// Exact `W_p^p` and an optimal plan with at most `m + n - 1` entries.
pub fn solve_exact(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, p: f64) -> Result<ExactSolution> {
    solve_exact_with(mu_x, mu_y, p, &ExactConfig::default())
}

pub fn solve_exact_with(
    mu_x: &DiscreteMeasure,
    mu_y: &DiscreteMeasure,
    p: f64,
    config: &ExactConfig,
) -> Result<ExactSolution> {
    let cost = GroundCost::new(p)?;
    let mu_y = balance(mu_x, mu_y)?;
    let (m, n) = (mu_x.len(), mu_y.len());
    let cells = m as u128 * n as u128;
    if cells >= config.max_cells {
        return Err(Error::TooLarge {
            cells,
            cap: config.max_cells,
        });
    }
    let ux = apportion(mu_x.weights(), MASS_UNITS);
    let uy = apportion(mu_y.weights(), MASS_UNITS);

    let mut set = Bipartite {
        x: mu_x.points(),
        y: mu_y.points(),
        cost,
        dense: None,
        m,
        n,
    };
    if m * n <= config.dense_cost_limit {
        let mut c = Vec::with_capacity(m * n);
        for i in 0..m {
            let xi = set.x.point(i);
            c.extend(set.y.iter().map(|yj| cost.eval(xi, yj)));
        }
        set.dense = Some(c);
    }
    let basis = northwest_start(&set, &ux, &uy)?;
    let tol = REDUCED_COST_EPS * set.max_cost();
    let mut engine = NetworkSimplex::new(&set, basis, tol);
    engine.run()?;

    let unit = mu_x.total_mass() / MASS_UNITS as f64;
    let mut entries: Vec<PlanEntry> = engine
        .tree_flows()
        .filter(|&(_, f)| f > 0)
        .map(|(a, f)| PlanEntry {
            row: a / n,
            col: a % n,
            mass: f as f64 * unit,
        })
        .collect();
    entries.sort_unstable_by_key(|e| (e.row, e.col));
    let total = entries
        .iter()
        .map(|e| e.mass * set.cost(e.row * n + e.col))
        .sum();
    Ok(ExactSolution {
        cost: total,
        plan: TransportPlan::from_parts_unchecked(m, n, entries),
        pivots: engine.pivots(),
    })
}
