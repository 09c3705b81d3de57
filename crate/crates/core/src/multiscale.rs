//! Multiscale refinement of a barycenter clustering.
//!
//! The hubs of [`bar_wp`] split both measures into `kappa` clusters: hub `k`
//! owns the partial measures `sum_i gamma_x[i,k] delta_{x_i}` and
//! `sum_j gamma_y[j,k] delta_{y_j}`. Each cluster pair is small enough to be
//! solved exactly, or is clustered again. The cluster plans, scattered back to
//! global indices, form an admissible plan between the original measures.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::barycenter::{bar_wp, BarycenterConfig, BarycenterState};
use crate::error::{Error, Result};
use crate::flow::{solve_exact_with, ExactConfig};
use crate::measure::{balance, DiscreteMeasure, GroundCost, PointCloud};
use crate::plan::{plan_cost_with, PlanEntry, TransportPlan};

/// Parameters of [`approx_wp`].
#[derive(Clone, Debug)]
pub struct MultiscaleConfig {
    /// Hub count and exponent of every clustering level, and the base seed.
    pub barycenter: BarycenterConfig,
    /// Cluster pairs with `m_k + n_k` below this are solved exactly.
    pub threshold: usize,
    /// Deepest clustering level; the top level is depth 0.
    pub max_depth: usize,
    /// Hub count below the top level; `None` reuses `barycenter.kappa`.
    pub inner_kappa: Option<usize>,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub exact: ExactConfig,
}

impl MultiscaleConfig {
    pub fn new(kappa: usize, p: f64) -> Self {
        Self {
            barycenter: BarycenterConfig::new(kappa, p),
            threshold: 2000,
            max_depth: 10,
            inner_kappa: None,
            threads: 0,
            exact: ExactConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.barycenter.seed = seed;
        self
    }

    pub fn with_threshold(mut self, threshold: usize) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn p(&self) -> f64 {
        self.barycenter.p
    }
}

/// How the clusters of a run were resolved, summed over all levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClusterStats {
    pub exact: usize,
    pub refined: usize,
    /// Clusters left as block plans because the depth limit was hit or the
    /// clustering did not shrink the problem.
    pub block_fallbacks: usize,
    /// Refined clusters whose approximation was worse than their block plan.
    pub block_kept: usize,
    pub depth: usize,
}

impl ClusterStats {
    fn absorb(&mut self, other: &ClusterStats) {
        self.exact += other.exact;
        self.refined += other.refined;
        self.block_fallbacks += other.block_fallbacks;
        self.block_kept += other.block_kept;
        self.depth = self.depth.max(other.depth);
    }
}

/// Outcome of [`approx_wp`].
#[derive(Clone, Debug)]
pub struct MultiscaleResult {
    /// `<plan, c_xy>`.
    pub cost_hat: f64,
    pub plan: TransportPlan,
    /// Barycenter bound of the top level; `None` when the problem was solved exactly.
    pub cost_tilde: Option<f64>,
    /// Cost of the composed block plan of the top level.
    pub block_cost: Option<f64>,
    /// Hub count of the top level after pruning.
    pub kappa: Option<usize>,
    /// Wall time of the top-level barycenter solve.
    pub barycenter_time: Option<Duration>,
    pub stats: ClusterStats,
}

/// One hub's share of both measures: `(index, mass)` lists.
#[derive(Clone, Debug, Default)]
pub struct Cluster {
    pub x: Vec<(usize, f64)>,
    pub y: Vec<(usize, f64)>,
}

fn clusters_of(state: &BarycenterState) -> Vec<Cluster> {
    let mut out = vec![Cluster::default(); state.kappa()];
    for e in state.plan_x.entries() {
        out[e.col].x.push((e.row, e.mass));
    }
    for e in state.plan_y.entries() {
        out[e.col].y.push((e.row, e.mass));
    }
    out
}

fn sub_measure(points: &PointCloud, part: &[(usize, f64)]) -> Result<DiscreteMeasure> {
    let idx: Vec<usize> = part.iter().map(|c| c.0).collect();
    DiscreteMeasure::new(points.select(&idx), part.iter().map(|c| c.1).collect())
}

/// Partial measures routed through hub `k`, with their global indices.
pub fn extract_cluster(
    state: &BarycenterState,
    k: usize,
    mu_x: &DiscreteMeasure,
    mu_y: &DiscreteMeasure,
) -> Result<(DiscreteMeasure, Vec<usize>, DiscreteMeasure, Vec<usize>)> {
    if k >= state.kappa() {
        return Err(Error::invalid(format!("hub {k} out of range (kappa = {})", state.kappa())));
    }
    let pick = |plan: &TransportPlan| -> Vec<(usize, f64)> {
        plan.entries().iter().filter(|e| e.col == k).map(|e| (e.row, e.mass)).collect()
    };
    let (cx, cy) = (pick(&state.plan_x), pick(&state.plan_y));
    Ok((
        sub_measure(mu_x.points(), &cx)?,
        cx.iter().map(|c| c.0).collect(),
        sub_measure(mu_y.points(), &cy)?,
        cy.iter().map(|c| c.0).collect(),
    ))
}

fn check_hub_weight(k: usize, w: f64, c: &Cluster) -> Result<()> {
    if !(w > 0.0) && (!c.x.is_empty() || !c.y.is_empty()) {
        return Err(Error::Internal(format!("hub {k} has weight {w} but carries mass")));
    }
    Ok(())
}

fn block_entries(c: &Cluster, w: f64) -> Vec<PlanEntry> {
    let mut out = Vec::with_capacity(c.x.len() * c.y.len());
    for &(i, a) in &c.x {
        for &(j, b) in &c.y {
            out.push(PlanEntry {
                row: i,
                col: j,
                mass: a * b / w,
            });
        }
    }
    out
}

fn cluster_block_cost(c: &Cluster, w: f64, x: &PointCloud, y: &PointCloud, cost: &GroundCost) -> f64 {
    c.x.iter()
        .map(|&(i, a)| {
            let xi = x.point(i);
            a * c.y.iter().map(|&(j, b)| b * cost.eval(xi, y.point(j))).sum::<f64>()
        })
        .sum::<f64>()
        / w
}

/// `gamma_hat = gamma_x diag(w_z)^{-1} gamma_y^T`, materialized.
pub fn compose_plan(state: &BarycenterState) -> Result<TransportPlan> {
    let clusters = clusters_of(state);
    let mut entries = Vec::new();
    for (k, c) in clusters.iter().enumerate() {
        check_hub_weight(k, state.weights[k], c)?;
        if state.weights[k] > 0.0 {
            entries.extend(block_entries(c, state.weights[k]));
        }
    }
    let mut plan = TransportPlan::from_parts_unchecked(state.plan_x.rows(), state.plan_y.rows(), entries);
    plan.canonicalize();
    Ok(plan)
}

/// `<compose_plan(state), c_xy>` without materializing the plan.
pub fn block_cost(state: &BarycenterState, x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    let cost = GroundCost::new(p)?;
    if state.plan_x.rows() != x.len() || state.plan_y.rows() != y.len() {
        return Err(Error::invalid("state plans do not match the point clouds"));
    }
    let clusters = clusters_of(state);
    for (k, c) in clusters.iter().enumerate() {
        check_hub_weight(k, state.weights[k], c)?;
    }
    Ok(clusters
        .par_iter()
        .enumerate()
        .filter(|(k, _)| state.weights[*k] > 0.0)
        .map(|(k, c)| cluster_block_cost(c, state.weights[k], x, y, &cost))
        .collect::<Vec<f64>>()
        .iter()
        .sum())
}

struct Level {
    cost: f64,
    entries: Vec<PlanEntry>,
    stats: ClusterStats,
    tilde: Option<f64>,
    block: Option<f64>,
    kappa: Option<usize>,
    bar_time: Option<Duration>,
}

fn child_seed(seed: u64, depth: usize, k: usize) -> u64 {
    seed ^ (depth as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (k as u64 + 1).wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
}

fn solve_exact_level(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, cfg: &MultiscaleConfig) -> Result<Level> {
    let sol = solve_exact_with(mu_x, mu_y, cfg.p(), &cfg.exact)?;
    Ok(Level {
        cost: sol.cost,
        entries: sol.plan.into_entries(),
        stats: ClusterStats {
            exact: 1,
            ..ClusterStats::default()
        },
        tilde: None,
        block: None,
        kappa: None,
        bar_time: None,
    })
}

fn solve_level(
    mu_x: &DiscreteMeasure,
    mu_y: &DiscreteMeasure,
    cfg: &MultiscaleConfig,
    depth: usize,
    seed: u64,
) -> Result<Level> {
    let (m, n) = (mu_x.len(), mu_y.len());
    if m + n < cfg.threshold {
        return solve_exact_level(mu_x, mu_y, cfg);
    }
    let kappa = if depth == 0 {
        cfg.barycenter.kappa
    } else {
        cfg.inner_kappa.unwrap_or(cfg.barycenter.kappa)
    };
    let bar_cfg = BarycenterConfig {
        kappa: kappa.min(m + n),
        seed,
        ..cfg.barycenter.clone()
    };
    let started = Instant::now();
    let bar = bar_wp(mu_x, mu_y, &bar_cfg)?;
    let bar_time = started.elapsed();
    let cost = GroundCost::new(cfg.p())?;
    let clusters = clusters_of(&bar.state);
    let weights = &bar.state.weights;
    let (x, y) = (mu_x.points(), mu_y.points());

    let parts: Vec<Result<(f64, f64, Vec<PlanEntry>, ClusterStats)>> = clusters
        .par_iter()
        .enumerate()
        .map(|(k, c)| {
            let w = weights[k];
            check_hub_weight(k, w, c)?;
            let block = cluster_block_cost(c, w, x, y, &cost);
            let (mk, nk) = (c.x.len(), c.y.len());
            let block_level = |fallback: bool| {
                let stats = ClusterStats {
                    block_fallbacks: fallback as usize,
                    block_kept: !fallback as usize,
                    depth,
                    ..ClusterStats::default()
                };
                (block, block, block_entries(c, w), stats)
            };
            if mk + nk >= cfg.threshold && (depth >= cfg.max_depth || (mk == m && nk == n)) {
                log::warn!("cluster {k} at depth {depth} ({mk} + {nk} atoms) kept as a block plan");
                return Ok(block_level(true));
            }
            let sx = sub_measure(x, &c.x)?;
            let sy = sub_measure(y, &c.y)?;
            let (local_cost, local, mut stats) = if mk + nk < cfg.threshold {
                let level = solve_exact_level(&sx, &sy, cfg)?;
                (level.cost, level.entries, level.stats)
            } else {
                let level = solve_level(&sx.normalized(), &sy.normalized(), cfg, depth + 1, child_seed(seed, depth, k))?;
                let entries = level
                    .entries
                    .into_iter()
                    .map(|e| PlanEntry {
                        mass: e.mass * w,
                        ..e
                    })
                    .collect();
                let mut stats = level.stats;
                stats.refined += 1;
                (level.cost * w, entries, stats)
            };
            if local_cost > block {
                let mut kept = block_level(false);
                kept.3.absorb(&stats);
                return Ok(kept);
            }
            let global = local
                .into_iter()
                .map(|e| PlanEntry {
                    row: c.x[e.row].0,
                    col: c.y[e.col].0,
                    mass: e.mass,
                })
                .collect();
            stats.depth = stats.depth.max(depth);
            Ok((local_cost, block, global, stats))
        })
        .collect();

    let mut level = Level {
        cost: 0.0,
        entries: Vec::new(),
        stats: ClusterStats::default(),
        tilde: Some(bar.cost_tilde),
        block: Some(0.0),
        kappa: Some(bar.state.kappa()),
        bar_time: Some(bar_time),
    };
    for part in parts {
        let (c, b, entries, stats) = part?;
        level.cost += c;
        level.block = level.block.map(|v| v + b);
        level.entries.extend(entries);
        level.stats.absorb(&stats);
    }
    Ok(level)
}

/// Multiscale approximation of `W_p^p(mu_x, mu_y)` with a sparse plan.
pub fn approx_wp(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, cfg: &MultiscaleConfig) -> Result<MultiscaleResult> {
    if cfg.threshold < 2 {
        return Err(Error::invalid(format!("threshold must be at least 2, got {}", cfg.threshold)));
    }
    if cfg.barycenter.kappa == 0 || cfg.inner_kappa == Some(0) {
        return Err(Error::invalid("kappa must be at least 1"));
    }
    let cost = GroundCost::new(cfg.p())?;
    let mu_y = balance(mu_x, mu_y)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let level = pool.install(|| solve_level(mu_x, &mu_y, cfg, 0, cfg.barycenter.seed))?;
    let mut plan = TransportPlan::from_parts_unchecked(mu_x.len(), mu_y.len(), level.entries);
    plan.canonicalize();
    let cost_hat = plan_cost_with(&plan, mu_x.points(), mu_y.points(), &cost);
    Ok(MultiscaleResult {
        cost_hat,
        plan,
        cost_tilde: level.tilde,
        block_cost: level.block,
        kappa: level.kappa,
        barycenter_time: level.bar_time,
        stats: level.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_from(support: &[f64], px: Vec<PlanEntry>, m: usize, py: Vec<PlanEntry>, n: usize) -> BarycenterState {
        let kappa = support.len();
        let plan_x = TransportPlan::new(m, kappa, px).unwrap();
        let plan_y = TransportPlan::new(n, kappa, py).unwrap();
        let weights = plan_x.col_sums();
        BarycenterState {
            support: PointCloud::new(1, support.to_vec()).unwrap(),
            plan_x,
            plan_y,
            weights,
        }
    }

    fn e(row: usize, col: usize, mass: f64) -> PlanEntry {
        PlanEntry { row, col, mass }
    }

    #[test]
    fn single_hub_gives_outer_product() {
        let s = state_from(&[0.0], vec![e(0, 0, 0.25), e(1, 0, 0.75)], 2, vec![e(0, 0, 0.5), e(1, 0, 0.5)], 2);
        let plan = compose_plan(&s).unwrap();
        let got: Vec<f64> = plan.entries().iter().map(|e| e.mass).collect();
        assert_eq!(got, vec![0.125, 0.125, 0.375, 0.375]);
    }

    #[test]
    fn identity_side_cancels_the_scaling() {
        let py = vec![e(0, 0, 0.2), e(1, 0, 0.1), e(1, 1, 0.3), e(2, 1, 0.4)];
        let s = state_from(&[0.0, 1.0], vec![e(0, 0, 0.3), e(1, 1, 0.7)], 2, py.clone(), 3);
        let plan = compose_plan(&s).unwrap();
        let mut expect: Vec<PlanEntry> = py.iter().map(|p| e(p.col, p.row, p.mass)).collect();
        expect.sort_by_key(|p| (p.row, p.col));
        assert_eq!(plan.nnz(), expect.len());
        for (a, b) in plan.entries().iter().zip(&expect) {
            assert_eq!((a.row, a.col), (b.row, b.col));
            assert!((a.mass - b.mass).abs() < 1e-15);
        }
    }

    #[test]
    fn block_cost_matches_composed_plan() {
        let s = state_from(
            &[0.0, 1.0],
            vec![e(0, 0, 0.3), e(1, 0, 0.2), e(1, 1, 0.5)],
            2,
            vec![e(0, 0, 0.5), e(1, 1, 0.2), e(2, 1, 0.3)],
            3,
        );
        let x = PointCloud::new(1, vec![0.0, 2.0]).unwrap();
        let y = PointCloud::new(1, vec![1.0, 4.0, -1.0]).unwrap();
        let plan = compose_plan(&s).unwrap();
        let direct = crate::plan::plan_cost(&plan, &x, &y, 2.0).unwrap();
        assert!((block_cost(&s, &x, &y, 2.0).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn small_problems_short_circuit_to_exact() {
        let x = DiscreteMeasure::from_points(&[[0.0], [1.0], [2.0]], vec![0.2, 0.3, 0.5]).unwrap();
        let y = DiscreteMeasure::from_points(&[[0.5], [3.0]], vec![0.6, 0.4]).unwrap();
        let res = approx_wp(&x, &y, &MultiscaleConfig::new(2, 2.0)).unwrap();
        let exact = crate::flow::solve_exact(&x, &y, 2.0).unwrap();
        assert!((res.cost_hat - exact.cost).abs() < 1e-12);
        assert_eq!(res.cost_tilde, None);
        assert_eq!(res.stats.exact, 1);
    }
}
