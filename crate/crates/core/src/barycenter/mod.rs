//! Free-support barycenter of two measures on `kappa` hubs.
//!
//! Alternates between optimal hub plans for fixed positions (a
//! transshipment problem) and optimal positions for fixed plans, until the
//! stacked hub matrix moves by less than `stop_eps` in relative Frobenius norm.

pub mod update;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{cost_to_distance, DiscreteMeasure, GroundCost, PointCloud};
use crate::plan::{plan_cost_with, PlanEntry, TransportPlan};
use crate::transship::{solve_transshipment_from, TransshipmentProblem, WarmStart};
pub use update::{
    update_positions, update_positions_irls, update_positions_median, update_positions_newton, update_positions_p2,
    UpdateRule,
};

/// Parameters of [`bar_wp`].
#[derive(Clone, Debug)]
pub struct BarycenterConfig {
    pub kappa: usize,
    pub p: f64,
    pub stop_eps: f64,
    pub max_outer_iters: usize,
    pub newton_iters: usize,
    pub irls_iters: usize,
    pub seed: u64,
}

impl BarycenterConfig {
    pub fn new(kappa: usize, p: f64) -> Self {
        Self {
            kappa,
            p,
            stop_eps: 1e-3,
            max_outer_iters: 100,
            newton_iters: 20,
            irls_iters: 20,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(Error::invalid("kappa must be at least 1"));
        }
        if !(self.stop_eps > 0.0) {
            return Err(Error::invalid(format!("stop_eps must be positive, got {}", self.stop_eps)));
        }
        GroundCost::new(self.p).map(|_| ())
    }
}

/// Hub support, hub weights and the two hub plans.
#[derive(Clone, Debug)]
pub struct BarycenterState {
    pub support: PointCloud,
    /// `m x kappa`.
    pub plan_x: TransportPlan,
    /// `n x kappa`.
    pub plan_y: TransportPlan,
    pub weights: Vec<f64>,
}

impl BarycenterState {
    pub fn kappa(&self) -> usize {
        self.support.len()
    }

    /// Largest gap between a hub weight and the column sums of either plan.
    pub fn conservation_error(&self) -> f64 {
        let (cx, cy) = (self.plan_x.col_sums(), self.plan_y.col_sums());
        (0..self.kappa())
            .map(|k| (cx[k] - self.weights[k]).abs().max((cy[k] - self.weights[k]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Outcome of [`bar_wp`].
#[derive(Clone, Debug)]
pub struct BarycenterResult {
    /// `(cost_x^{1/p} + cost_y^{1/p})^p`.
    pub cost_tilde: f64,
    /// `<gamma_x, c_xz>` at the returned support.
    pub cost_x: f64,
    /// `<gamma_y, c_yz>` at the returned support.
    pub cost_y: f64,
    pub state: BarycenterState,
    pub iterations: usize,
    pub converged: bool,
    /// Objective `cost_x + cost_y` after each transshipment solve, then at the final support.
    pub history: Vec<f64>,
}

/// Draws `kappa` distinct atoms of the pooled supports of `mu_x` and `mu_y`.
pub fn init_support(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, kappa: usize, seed: u64) -> Result<PointCloud> {
    let (m, n) = (mu_x.len(), mu_y.len());
    if mu_x.dim() != mu_y.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu_x.dim(),
            found: mu_y.dim(),
        });
    }
    if kappa == 0 || kappa > m + n {
        return Err(Error::invalid(format!(
            "kappa = {kappa} must lie in 1..={} (pooled support size)",
            m + n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(kappa * mu_x.dim());
    for idx in index::sample(&mut rng, m + n, kappa) {
        let pt = if idx < m { mu_x.point(idx) } else { mu_y.point(idx - m) };
        coords.extend_from_slice(pt);
    }
    PointCloud::new(mu_x.dim(), coords)
}

/// `||a - b||_F / ||b||_F`, or the plain norm of the difference when `b = 0`.
fn relative_change(a: &PointCloud, b: &PointCloud) -> f64 {
    let diff: f64 = a.coords().iter().zip(b.coords()).map(|(u, v)| (u - v) * (u - v)).sum();
    let base = b.norm_sq();
    if base > 0.0 {
        (diff / base).sqrt()
    } else {
        diff.sqrt()
    }
}

/// Drops the listed hubs and renumbers the plan columns.
fn prune(support: &PointCloud, plan: TransportPlan, keep: &[usize]) -> TransportPlan {
    let mut map = vec![usize::MAX; support.len()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let rows = plan.rows();
    let entries = plan
        .into_entries()
        .into_iter()
        .map(|e| PlanEntry {
            col: map[e.col],
            ..e
        })
        .collect();
    TransportPlan::from_parts_unchecked(rows, keep.len(), entries)
}

/// Approximates `W_p^p(mu_x, mu_y)` from above through a `kappa`-hub barycenter.
pub fn bar_wp(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, config: &BarycenterConfig) -> Result<BarycenterResult> {
    config.validate()?;
    let cost = GroundCost::new(config.p)?;
    let rule = UpdateRule::for_exponent(config.p);
    let iters = match rule {
        UpdateRule::Newton => config.newton_iters,
        UpdateRule::Irls => config.irls_iters,
        _ => 0,
    };
    let mut support = init_support(mu_x, mu_y, config.kappa, config.seed)?;
    let mut warm: Option<WarmStart> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let (plan_x, plan_y, weights) = loop {
        iterations += 1;
        let sol = solve_transshipment_from(
            &TransshipmentProblem {
                mu_x,
                mu_y,
                hubs: &support,
                p: config.p,
            },
            warm.as_ref(),
        )?;
        history.push(sol.objective());
        let empty = sol.empty_hubs();
        let (mut plan_x, mut plan_y, mut weights) = (sol.plan_x, sol.plan_y, sol.hub_mass);
        if empty.is_empty() {
            warm = Some(sol.warm);
        } else {
            let keep: Vec<usize> = (0..support.len()).filter(|k| !empty.contains(k)).collect();
            log::debug!("pruning {} empty hubs", empty.len());
            plan_x = prune(&support, plan_x, &keep);
            plan_y = prune(&support, plan_y, &keep);
            weights = keep.iter().map(|&k| weights[k]).collect();
            support = support.select(&keep);
            warm = None;
        }
        let next = update_positions(rule, &cost, &plan_x, &plan_y, mu_x.points(), mu_y.points(), &support, iters)?;
        let change = relative_change(&next, &support);
        support = next;
        if change < config.stop_eps {
            converged = true;
        }
        if converged || iterations >= config.max_outer_iters {
            break (plan_x, plan_y, weights);
        }
    };
    let cost_x = plan_cost_with(&plan_x, mu_x.points(), &support, &cost);
    let cost_y = plan_cost_with(&plan_y, mu_y.points(), &support, &cost);
    history.push(cost_x + cost_y);
    let cost_tilde = (cost_to_distance(cost_x, config.p) + cost_to_distance(cost_y, config.p)).powf(config.p);
    Ok(BarycenterResult {
        cost_tilde,
        cost_x,
        cost_y,
        state: BarycenterState {
            support,
            plan_x,
            plan_y,
            weights,
        },
        iterations,
        converged,
        history,
    })
}
