//! Side-by-side runs of the exact solver and the approximations.

use std::time::{Duration, Instant};

use crate::barycenter::{bar_wp, BarycenterConfig};
use crate::error::{Error, Result};
use crate::flow::{solve_exact_with, ExactConfig};
use crate::measure::{cost_to_distance, DiscreteMeasure};
use crate::multiscale::{approx_wp, block_cost, MultiscaleConfig};
use crate::plan::TransportPlan;
use crate::report::{DistanceReport, Method};

/// Parameters of [`run_compare`].
#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub p: f64,
    pub kappas: Vec<usize>,
    pub threshold: usize,
    pub seed: u64,
    /// Worker threads of each multiscale run; 0 uses all cores.
    pub threads: usize,
    /// Solve exactly and fill in relative errors.
    pub reference: bool,
    pub exact: ExactConfig,
}

impl CompareConfig {
    pub fn new(p: f64, kappas: Vec<usize>) -> Self {
        Self {
            p,
            kappas,
            threshold: 2000,
            seed: 0,
            threads: 0,
            reference: true,
            exact: ExactConfig::default(),
        }
    }
}

/// Reports of a comparison, in the order exact, then per hub count the
/// barycenter, block and multiscale estimates.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub reports: Vec<DistanceReport>,
    pub exact_plan: Option<TransportPlan>,
    /// Multiscale plan of every hub count, in input order.
    pub multiscale_plans: Vec<TransportPlan>,
}

impl Comparison {
    /// Reports of one method, in hub-count order.
    pub fn of(&self, method: Method) -> impl Iterator<Item = &DistanceReport> + '_ {
        self.reports.iter().filter(move |r| r.method == method)
    }
}

/// Barycenter bound, block cost, and the time of the barycenter solve.
fn hub_estimates(
    mu_x: &DiscreteMeasure,
    mu_y: &DiscreteMeasure,
    cfg: &MultiscaleConfig,
) -> Result<(f64, f64, usize, Duration)> {
    let started = Instant::now();
    let bar_cfg = BarycenterConfig {
        kappa: cfg.barycenter.kappa.min(mu_x.len() + mu_y.len()),
        ..cfg.barycenter.clone()
    };
    let bar = bar_wp(mu_x, mu_y, &bar_cfg)?;
    let elapsed = started.elapsed();
    let block = block_cost(&bar.state, mu_x.points(), mu_y.points(), cfg.p())?;
    Ok((bar.cost_tilde, block, bar.state.kappa(), elapsed))
}

pub fn run_compare(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, cfg: &CompareConfig) -> Result<Comparison> {
    if cfg.kappas.is_empty() && !cfg.reference {
        return Err(Error::invalid("nothing to compare: no hub counts and no reference"));
    }
    let mut reports = Vec::new();
    let mut exact_plan = None;
    let mut exact_distance = None;
    if cfg.reference {
        let started = Instant::now();
        let sol = solve_exact_with(mu_x, mu_y, cfg.p, &cfg.exact)?;
        let mut r = DistanceReport::new(Method::Exact, cfg.p, sol.cost, started.elapsed());
        r.plan_entries = Some(sol.plan.nnz());
        exact_distance = Some(r.distance);
        reports.push(r.with_reference(cost_to_distance(sol.cost, cfg.p)));
        exact_plan = Some(sol.plan);
    }

    let mut multiscale_plans = Vec::new();
    for &kappa in &cfg.kappas {
        let mut ms_cfg = MultiscaleConfig::new(kappa, cfg.p)
            .with_threshold(cfg.threshold)
            .with_seed(cfg.seed);
        ms_cfg.threads = cfg.threads;
        ms_cfg.exact = cfg.exact.clone();
        let started = Instant::now();
        let res = approx_wp(mu_x, mu_y, &ms_cfg)?;
        let total = started.elapsed();
        let (tilde, block, used_kappa, bar_time) = match (res.cost_tilde, res.block_cost, res.kappa, res.barycenter_time) {
            (Some(t), Some(b), Some(k), Some(d)) => (t, b, k, d),
            _ => hub_estimates(mu_x, mu_y, &ms_cfg)?,
        };
        let tag = |mut r: DistanceReport| {
            r.kappa = Some(used_kappa);
            r.threshold = Some(cfg.threshold);
            r.seed = Some(cfg.seed);
            match exact_distance {
                Some(d) => r.with_reference(d),
                None => r,
            }
        };
        reports.push(tag(DistanceReport::new(Method::Barycenter, cfg.p, tilde, bar_time)));
        reports.push(tag(DistanceReport::new(Method::Block, cfg.p, block, bar_time)));
        let mut ms = DistanceReport::new(Method::Multiscale, cfg.p, res.cost_hat, total);
        ms.plan_entries = Some(res.plan.nnz());
        reports.push(tag(ms));
        multiscale_plans.push(res.plan);
    }
    Ok(Comparison {
        reports,
        exact_plan,
        multiscale_plans,
    })
}
