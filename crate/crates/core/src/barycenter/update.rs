//! Hub position updates for fixed plans.
//!
//! With the plans fixed, the objective separates over hubs and coordinates
//! into one-dimensional convex problems `min_z sum_i w_i |v_i - z|^p`, where
//! the samples `(v_i, w_i)` are the coordinates and masses of the atoms routed
//! through the hub. The functions working on a single coordinate are public
//! so they can be checked in isolation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{GroundCost, PointCloud};
use crate::plan::TransportPlan;

/// One weighted sample `(value, weight)` of a one-dimensional problem.
pub type Sample = (f64, f64);

const MAX_HALVINGS: usize = 30;
const POLISH_STEPS: usize = 200;

/// How hub positions are recomputed from the plans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateRule {
    /// Weighted mean; exact for `p = 2`.
    Mean,
    /// Damped Newton iterations; for `p > 2`.
    Newton,
    /// Lower weighted median; exact for `p = 1`.
    Median,
    /// Reweighted medians followed by a bisection polish; for `1 < p < 2`.
    Irls,
}

impl UpdateRule {
    pub fn for_exponent(p: f64) -> Self {
        if p == 1.0 {
            UpdateRule::Median
        } else if p < 2.0 {
            UpdateRule::Irls
        } else if p == 2.0 {
            UpdateRule::Mean
        } else {
            UpdateRule::Newton
        }
    }
}

/// `sum_i w_i |v_i - z|^p`.
pub fn column_objective(samples: &[Sample], cost: &GroundCost, z: f64) -> f64 {
    samples.iter().map(|&(v, w)| w * cost.pow_abs(v - z)).sum()
}

/// Weighted mean of the samples; `None` when the total weight is zero.
pub fn weighted_mean(samples: &[Sample]) -> Option<f64> {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    (total > 0.0).then(|| samples.iter().map(|&(v, w)| v * w).sum::<f64>() / total)
}

/// Smallest sample value whose cumulative weight reaches half the total.
pub fn lower_weighted_median(samples: &[Sample]) -> Option<f64> {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut sorted: Vec<Sample> = samples.iter().copied().filter(|s| s.1 > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for &(v, w) in &sorted {
        acc += w;
        if 2.0 * acc >= total {
            return Some(v);
        }
    }
    sorted.last().map(|s| s.0)
}

fn hull(samples: &[Sample]) -> (f64, f64) {
    samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.0), hi.max(s.0)))
}

/// First derivative, divided by `p`.
fn slope(samples: &[Sample], p: f64, z: f64) -> f64 {
    samples
        .iter()
        .map(|&(v, w)| {
            let d = z - v;
            w * d.signum() * d.abs().powf(p - 1.0)
        })
        .sum()
}

/// Damped Newton from `z0` for `p > 2`, at most `iters` steps.
///
/// The minimizer is kept bracketed by the sign of the derivative. A step whose
/// curvature vanishes or that leaves the bracket is replaced by the bracket
/// midpoint, and every step is halved until the objective does not increase.
pub fn newton_minimize(samples: &[Sample], cost: &GroundCost, z0: f64, iters: usize) -> f64 {
    let samples: Vec<Sample> = samples.iter().copied().filter(|s| s.1 > 0.0).collect();
    if samples.is_empty() {
        return z0;
    }
    let p = cost.p();
    let (mut lo, mut hi) = hull(&samples);
    let mut z = z0.clamp(lo, hi);
    let mut fz = column_objective(&samples, cost, z);
    for _ in 0..iters {
        let (mut g, mut h) = (0.0, 0.0);
        for &(v, w) in &samples {
            let d = z - v;
            let a = d.abs();
            let t = a.powf(p - 2.0);
            g += w * t * d;
            h += w * t;
        }
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - g / ((p - 1.0) * h);
        let mut cand = if h > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let mut fc = column_objective(&samples, cost, cand);
        let mut halvings = 0;
        while fc > fz && halvings < MAX_HALVINGS {
            cand = z + 0.5 * (cand - z);
            fc = column_objective(&samples, cost, cand);
            halvings += 1;
        }
        if fc > fz || cand == z {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

/// Reweighted lower medians from `z0` for `1 < p < 2`, then a bisection on the
/// derivative that is kept only if it lowers the objective.
///
/// A sample lying exactly at the current iterate gets weight zero.
pub fn irls_minimize(samples: &[Sample], cost: &GroundCost, z0: f64, iters: usize) -> f64 {
    let samples: Vec<Sample> = samples.iter().copied().filter(|s| s.1 > 0.0).collect();
    if samples.is_empty() {
        return z0;
    }
    let p = cost.p();
    let (lo, hi) = hull(&samples);
    let mut z = z0.clamp(lo, hi);
    let mut fz = column_objective(&samples, cost, z);
    let mut reweighted = Vec::with_capacity(samples.len());
    for _ in 0..iters {
        reweighted.clear();
        reweighted.extend(samples.iter().map(|&(v, w)| {
            let d = (v - z).abs();
            (v, if d == 0.0 { 0.0 } else { w * d.powf(p - 1.0) })
        }));
        let Some(cand) = lower_weighted_median(&reweighted) else { break };
        let fc = column_objective(&samples, cost, cand);
        if fc > fz || cand == z {
            break;
        }
        z = cand;
        fz = fc;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..POLISH_STEPS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(&samples, p, mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let polished = 0.5 * (a + b);
    if column_objective(&samples, cost, polished) <= fz {
        polished
    } else {
        z
    }
}

/// Per hub, the atoms routed through it as `(point, mass)`.
fn hub_columns<'a>(
    plan_x: &TransportPlan,
    plan_y: &TransportPlan,
    x: &'a PointCloud,
    y: &'a PointCloud,
    kappa: usize,
) -> Result<Vec<Vec<(&'a [f64], f64)>>> {
    for (plan, pts, side) in [(plan_x, x, "x"), (plan_y, y, "y")] {
        if plan.rows() != pts.len() || plan.cols() != kappa {
            return Err(Error::invalid(format!(
                "{side}-side plan is {}x{}, expected {}x{kappa}",
                plan.rows(),
                plan.cols(),
                pts.len()
            )));
        }
        if pts.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                found: pts.dim(),
            });
        }
    }
    let mut cols: Vec<Vec<(&[f64], f64)>> = vec![Vec::new(); kappa];
    for e in plan_x.entries() {
        cols[e.col].push((x.point(e.row), e.mass));
    }
    for e in plan_y.entries() {
        cols[e.col].push((y.point(e.row), e.mass));
    }
    Ok(cols)
}

/// Recomputes every hub position with `rule`. Hubs without mass keep their
/// current position.
#[allow(clippy::too_many_arguments)]
pub fn update_positions(
    rule: UpdateRule,
    cost: &GroundCost,
    plan_x: &TransportPlan,
    plan_y: &TransportPlan,
    x: &PointCloud,
    y: &PointCloud,
    current: &PointCloud,
    iters: usize,
) -> Result<PointCloud> {
    let kappa = current.len();
    let d = current.dim();
    if x.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.dim(),
        });
    }
    let cols = hub_columns(plan_x, plan_y, x, y, kappa)?;
    let rows: Vec<Vec<f64>> = cols
        .par_iter()
        .enumerate()
        .map(|(k, col)| {
            let z = current.point(k);
            let mut samples = Vec::with_capacity(col.len());
            (0..d)
                .map(|s| {
                    samples.clear();
                    samples.extend(col.iter().map(|&(pt, w)| (pt[s], w)));
                    let solved = match rule {
                        UpdateRule::Mean => weighted_mean(&samples),
                        UpdateRule::Median => lower_weighted_median(&samples),
                        UpdateRule::Newton => Some(newton_minimize(&samples, cost, z[s], iters)),
                        UpdateRule::Irls => Some(irls_minimize(&samples, cost, z[s], iters)),
                    };
                    solved.unwrap_or(z[s])
                })
                .collect()
        })
        .collect();
    PointCloud::new(d, rows.concat())
}

/// Weighted-mean update for `p = 2`.
pub fn update_positions_p2(
    plan_x: &TransportPlan,
    plan_y: &TransportPlan,
    x: &PointCloud,
    y: &PointCloud,
    current: &PointCloud,
) -> Result<PointCloud> {
    update_positions(UpdateRule::Mean, &GroundCost::new(2.0)?, plan_x, plan_y, x, y, current, 0)
}

/// Damped Newton update for `p > 2`.
pub fn update_positions_newton(
    plan_x: &TransportPlan,
    plan_y: &TransportPlan,
    x: &PointCloud,
    y: &PointCloud,
    p: f64,
    current: &PointCloud,
    iters: usize,
) -> Result<PointCloud> {
    if !(p > 2.0) {
        return Err(Error::invalid(format!("Newton update needs p > 2, got {p}")));
    }
    update_positions(UpdateRule::Newton, &GroundCost::new(p)?, plan_x, plan_y, x, y, current, iters)
}

/// Weighted-median update for `p = 1`.
pub fn update_positions_median(
    plan_x: &TransportPlan,
    plan_y: &TransportPlan,
    x: &PointCloud,
    y: &PointCloud,
    current: &PointCloud,
) -> Result<PointCloud> {
    update_positions(UpdateRule::Median, &GroundCost::new(1.0)?, plan_x, plan_y, x, y, current, 0)
}

/// Reweighted-median update for `1 < p < 2`.
pub fn update_positions_irls(
    plan_x: &TransportPlan,
    plan_y: &TransportPlan,
    x: &PointCloud,
    y: &PointCloud,
    p: f64,
    current: &PointCloud,
    iters: usize,
) -> Result<PointCloud> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::invalid(format!("reweighted median update needs 1 < p < 2, got {p}")));
    }
    update_positions(UpdateRule::Irls, &GroundCost::new(p)?, plan_x, plan_y, x, y, current, iters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(p: f64) -> GroundCost {
        GroundCost::new(p).unwrap()
    }

    #[test]
    fn median_examples() {
        assert_eq!(lower_weighted_median(&[(0.0, 0.3), (2.0, 0.7)]), Some(2.0));
        assert_eq!(lower_weighted_median(&[(0.0, 0.5), (2.0, 0.5)]), Some(0.0));
        assert_eq!(lower_weighted_median(&[]), None);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(weighted_mean(&[(0.0, 1.0), (2.0, 1.0)]), Some(1.0));
        assert_eq!(weighted_mean(&[(5.0, 0.4)]), Some(5.0));
    }

    #[test]
    fn newton_examples() {
        for p in [2.5, 3.0, 4.0, 6.0] {
            let z = newton_minimize(&[(-1.0, 0.5), (1.0, 0.5)], &g(p), 0.7, 20);
            assert!(z.abs() < 1e-9, "p={p}: {z}");
        }
        let z = newton_minimize(&[(3.0, 1.0)], &g(4.0), 0.0, 20);
        assert_eq!(z, 3.0);
        let z = newton_minimize(&[(0.0, 0.5), (1.0, 0.5)], &g(4.0), 0.1, 20);
        assert!((z - 0.5).abs() < 1e-9);
    }

    #[test]
    fn irls_examples() {
        let z = irls_minimize(&[(4.0, 1.0)], &g(1.5), 0.0, 1);
        assert_eq!(z, 4.0);
        let samples = [(0.0, 0.5), (2.0, 0.5)];
        let z = irls_minimize(&samples, &g(1.5), 0.3, 20);
        assert!((0.0..=2.0).contains(&z));
        let f = |t| column_objective(&samples, &g(1.5), t);
        assert!(f(z) <= f(0.0) && f(z) <= f(2.0));
    }

    #[test]
    fn rule_selection() {
        assert_eq!(UpdateRule::for_exponent(1.0), UpdateRule::Median);
        assert_eq!(UpdateRule::for_exponent(1.5), UpdateRule::Irls);
        assert_eq!(UpdateRule::for_exponent(2.0), UpdateRule::Mean);
        assert_eq!(UpdateRule::for_exponent(3.0), UpdateRule::Newton);
    }
}
