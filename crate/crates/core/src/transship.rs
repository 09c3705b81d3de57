//! Fixed-support transshipment: route the mass of `mu_x` to `mu_y` through
//! `kappa` hub locations, minimizing the total `p`-th power cost of both legs.
//!
//! The graph has `m + kappa + n` nodes (sources, hubs, sinks) and
//! `(m + n) * kappa` arcs, and is solved by the same network simplex as the
//! exact solver. Arc `i * kappa + k` goes from source `i` to hub `k`; arc
//! `m * kappa + j * kappa + k` goes from hub `k` to sink `j`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::flow::simplex::{ArcSet, Basis, NetworkSimplex, REDUCED_COST_EPS};
use crate::flow::{apportion, MASS_UNITS};
use crate::measure::{balance, DiscreteMeasure, GroundCost, PointCloud};
use crate::plan::{PlanEntry, TransportPlan};

/// Two measures and a candidate hub support.
#[derive(Clone, Copy, Debug)]
pub struct TransshipmentProblem<'a> {
    pub mu_x: &'a DiscreteMeasure,
    pub mu_y: &'a DiscreteMeasure,
    pub hubs: &'a PointCloud,
    pub p: f64,
}

/// Optimal hub plans for a fixed support.
#[derive(Clone, Debug)]
pub struct TransshipmentSolution {
    /// `m x kappa` coupling of `mu_x` with the hubs.
    pub plan_x: TransportPlan,
    /// `n x kappa` coupling of `mu_y` with the hubs.
    pub plan_y: TransportPlan,
    /// `<gamma_x, c_xz>`.
    pub cost_x: f64,
    /// `<gamma_y, c_yz>`.
    pub cost_y: f64,
    /// Mass through each hub; equal to the column sums of both plans.
    pub hub_mass: Vec<f64>,
    pub pivots: u64,
    pub(crate) warm: WarmStart,
}

impl TransshipmentSolution {
    pub fn objective(&self) -> f64 {
        self.cost_x + self.cost_y
    }

    /// Hubs that carry no mass.
    pub fn empty_hubs(&self) -> Vec<usize> {
        (0..self.hub_mass.len()).filter(|&k| self.hub_mass[k] == 0.0).collect()
    }

    /// Final basis, reusable as a starting point when only hub positions change.
    pub fn warm_start(&self) -> &WarmStart {
        &self.warm
    }
}

/// Opaque optimal basis of a transshipment graph.
#[derive(Clone, Debug)]
pub struct WarmStart {
    shape: (usize, usize, usize),
    basis: Basis,
}

struct HubGraph {
    m: usize,
    kappa: usize,
    n: usize,
    /// Costs in arc order.
    cost: Vec<f64>,
}

impl ArcSet for HubGraph {
    fn node_count(&self) -> usize {
        self.m + self.kappa + self.n
    }

    fn priced_arcs(&self) -> usize {
        self.cost.len()
    }

    #[inline]
    fn endpoints(&self, arc: usize) -> (usize, usize) {
        let split = self.m * self.kappa;
        if arc < split {
            (arc / self.kappa, self.m + arc % self.kappa)
        } else {
            let b = arc - split;
            (self.m + b % self.kappa, self.m + self.kappa + b / self.kappa)
        }
    }

    #[inline]
    fn cost(&self, arc: usize) -> f64 {
        self.cost[arc]
    }

    fn scan(&self, pi: &[f64], range: Range<usize>, best: &mut f64, best_arc: &mut usize) {
        let (kappa, split) = (self.kappa, self.m * self.kappa);
        let pi_hub = &pi[self.m..self.m + kappa];
        let mut a = range.start;
        while a < range.end {
            // Each group of `kappa` consecutive arcs shares its non-hub endpoint.
            let (group, k0) = (a / kappa, a % kappa);
            let end = (a - k0 + kappa).min(range.end);
            let costs = &self.cost[a..end];
            let hubs = &pi_hub[k0..k0 + (end - a)];
            if a < split {
                let ps = pi[group];
                for (t, (c, ph)) in costs.iter().zip(hubs).enumerate() {
                    let rc = c + ps - ph;
                    if rc < *best {
                        *best = rc;
                        *best_arc = a + t;
                    }
                }
            } else {
                let pt = pi[self.m + kappa + (group - self.m)];
                for (t, (c, ph)) in costs.iter().zip(hubs).enumerate() {
                    let rc = c + ph - pt;
                    if rc < *best {
                        *best = rc;
                        *best_arc = a + t;
                    }
                }
            }
            a = end;
        }
    }
}

fn build_graph(prob: &TransshipmentProblem<'_>, mu_y: &DiscreteMeasure, cost: GroundCost) -> HubGraph {
    let (m, n, kappa) = (prob.mu_x.len(), mu_y.len(), prob.hubs.len());
    let mut c = Vec::with_capacity((m + n) * kappa);
    for side in [prob.mu_x.points(), mu_y.points()] {
        for a in side.iter() {
            c.extend(prob.hubs.iter().map(|z| cost.eval(a, z)));
        }
    }
    HubGraph { m, kappa, n, cost: c }
}

/// Every source goes to its nearest hub; the hub loads are then matched to
/// the sinks by a north-west corner rule in hub order.
fn cold_start(g: &HubGraph, ux: &[i64], uy: &[i64]) -> Result<Basis> {
    let (m, kappa, n) = (g.m, g.kappa, g.n);
    let mut load = vec![0i64; kappa];
    let mut tree = Vec::with_capacity(m + kappa + n - 1);
    for i in 0..m {
        let row = &g.cost[i * kappa..(i + 1) * kappa];
        let k = (0..kappa).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
        load[k] += ux[i];
        tree.push((i * kappa + k, ux[i]));
    }
    let used: Vec<usize> = (0..kappa).filter(|&k| load[k] > 0).collect();
    let split = m * kappa;
    let nearest = |j: usize| {
        let row = &g.cost[split + j * kappa..split + (j + 1) * kappa];
        (0..kappa).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0)
    };
    let mut oy: Vec<(usize, usize)> = (0..n).map(|j| (nearest(j), j)).collect();
    oy.sort_unstable();
    let hub_arc = |k: usize, j: usize| split + j * kappa + k;
    let (mut a, mut b) = (0, 0);
    let mut rk = load[used[0]];
    let mut ry = uy[oy[0].1];
    loop {
        let f = rk.min(ry);
        tree.push((hub_arc(used[a], oy[b].1), f));
        rk -= f;
        ry -= f;
        if a + 1 == used.len() && b + 1 == n {
            break;
        }
        if (ry == 0 && b + 1 < n) || a + 1 == used.len() {
            b += 1;
            ry += uy[oy[b].1];
        } else {
            a += 1;
            rk += load[used[a]];
        }
    }
    // Empty hubs hang below the first source with zero flow.
    for k in (0..kappa).filter(|&k| load[k] == 0) {
        tree.push((k, 0));
    }
    Basis::from_tree_arcs(g, m + used[0], &tree)
}

/// Solves the transshipment problem from a cold start.
pub fn solve_transshipment(prob: &TransshipmentProblem<'_>) -> Result<TransshipmentSolution> {
    solve_transshipment_from(prob, None)
}

/// Solves the transshipment problem, starting from `warm` when it was produced
/// for a problem of the same shape.
pub fn solve_transshipment_from(
    prob: &TransshipmentProblem<'_>,
    warm: Option<&WarmStart>,
) -> Result<TransshipmentSolution> {
    let cost = GroundCost::new(prob.p)?;
    if prob.hubs.is_empty() {
        return Err(Error::invalid("transshipment needs at least one hub"));
    }
    if prob.hubs.dim() != prob.mu_x.dim() || prob.mu_y.dim() != prob.mu_x.dim() {
        return Err(Error::DimensionMismatch {
            expected: prob.mu_x.dim(),
            found: if prob.hubs.dim() != prob.mu_x.dim() {
                prob.hubs.dim()
            } else {
                prob.mu_y.dim()
            },
        });
    }
    let mu_y = balance(prob.mu_x, prob.mu_y)?;
    let g = build_graph(prob, &mu_y, cost);
    let (m, kappa, n) = (g.m, g.kappa, g.n);
    let ux = apportion(prob.mu_x.weights(), MASS_UNITS);
    let uy = apportion(mu_y.weights(), MASS_UNITS);

    let basis = match warm {
        Some(w) if w.shape == (m, kappa, n) => w.basis.clone(),
        _ => cold_start(&g, &ux, &uy)?,
    };
    let max_cost = g.cost.iter().copied().fold(0.0, f64::max);
    let mut engine = NetworkSimplex::new(&g, basis, REDUCED_COST_EPS * max_cost);
    engine.run()?;

    let unit = prob.mu_x.total_mass() / MASS_UNITS as f64;
    let split = m * kappa;
    let mut hub_units = vec![0i64; kappa];
    let (mut ex, mut ey) = (Vec::new(), Vec::new());
    for (arc, f) in engine.tree_flows().filter(|&(_, f)| f > 0) {
        let mass = f as f64 * unit;
        if arc < split {
            hub_units[arc % kappa] += f;
            ex.push(PlanEntry {
                row: arc / kappa,
                col: arc % kappa,
                mass,
            });
        } else {
            let b = arc - split;
            ey.push(PlanEntry {
                row: b / kappa,
                col: b % kappa,
                mass,
            });
        }
    }
    ex.sort_unstable_by_key(|e| (e.row, e.col));
    ey.sort_unstable_by_key(|e| (e.row, e.col));
    let cost_x = ex.iter().map(|e| e.mass * g.cost[e.row * kappa + e.col]).sum();
    let cost_y = ey.iter().map(|e| e.mass * g.cost[split + e.row * kappa + e.col]).sum();
    let pivots = engine.pivots();
    Ok(TransshipmentSolution {
        plan_x: TransportPlan::from_parts_unchecked(m, kappa, ex),
        plan_y: TransportPlan::from_parts_unchecked(n, kappa, ey),
        cost_x,
        cost_y,
        hub_mass: hub_units.iter().map(|&u| u as f64 * unit).collect(),
        pivots,
        warm: WarmStart {
            shape: (m, kappa, n),
            basis: engine.into_basis(),
        },
    })
}
