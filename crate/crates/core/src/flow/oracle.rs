//! Dense linear programming oracle for tiny instances.
//!
//! This path shares nothing with the network simplex: it solves the
//! transport LP on a full tableau with Bland's rule. It exists to check the
//! graph solvers and is far too slow for anything but a handful of atoms.

use crate::error::{Error, Result};
use crate::measure::{balance, DiscreteMeasure, GroundCost};
use crate::plan::{PlanEntry, TransportPlan};

/// Largest support size accepted by [`brute_force_ot`].
pub const BRUTE_FORCE_MAX_ATOMS: usize = 8;

const PIVOT_EPS: f64 = 1e-12;

/// Solves `min c.x  s.t.  A x = b, x >= 0` by the two-phase simplex method.
///
/// Returns the optimal value and a basic optimal solution.
pub fn solve_dense_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<(f64, Vec<f64>)> {
    let rows = a.len();
    let n = c.len();
    if b.len() != rows || a.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("inconsistent LP dimensions"));
    }
    let w = n + rows + 1;
    let mut t = vec![vec![0.0; w]; rows];
    for r in 0..rows {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[r][j] = sign * a[r][j];
        }
        t[r][n + r] = 1.0;
        t[r][w - 1] = sign * b[r];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let mut phase1 = vec![0.0; n + rows];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    run_tableau(&mut t, &mut basis, &phase1, n + rows)?;
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let infeasibility: f64 = (0..rows).filter(|&r| basis[r] >= n).map(|r| t[r][w - 1]).sum();
    if infeasibility > 1e-9 * scale {
        return Err(Error::Infeasible(format!("LP infeasible (phase one value {infeasibility})")));
    }
    // Drive remaining artificial variables out; rows where that fails are redundant.
    for r in 0..rows {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, j);
            }
        }
    }
    let mut phase2 = c.to_vec();
    phase2.resize(n + rows, 0.0);
    run_tableau(&mut t, &mut basis, &phase2, n)?;

    let mut x = vec![0.0; n];
    for r in 0..rows {
        if basis[r] < n {
            x[basis[r]] = t[r][w - 1].max(0.0);
        }
    }
    let value = x.iter().zip(c).map(|(x, c)| x * c).sum();
    Ok((value, x))
}

/// Simplex iterations with Bland's rule; only columns below `enter_limit` may enter.
fn run_tableau(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], enter_limit: usize) -> Result<()> {
    let rows = t.len();
    let rhs = cost.len();
    loop {
        let entering = (0..enter_limit).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let rc = cost[j] - (0..rows).map(|r| cost[basis[r]] * t[r][j]).sum::<f64>();
            rc < -PIVOT_EPS
        });
        let Some(j) = entering else { return Ok(()) };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            if t[r][j] > PIVOT_EPS {
                let ratio = t[r][rhs] / t[r][j];
                let better = match leave {
                    None => true,
                    Some((lr, lv)) => ratio < lv - 1e-15 || (ratio <= lv + 1e-15 && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::Internal("LP unbounded".into()));
        };
        pivot(t, basis, r, j);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, j: usize) {
    let p = t[r][j];
    t[r].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[r].clone();
    for (k, row) in t.iter_mut().enumerate() {
        if k != r {
            let f = row[j];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    basis[r] = j;
}

/// Exact optimal transport on at most [`BRUTE_FORCE_MAX_ATOMS`] atoms per side.
pub fn brute_force_ot(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure, p: f64) -> Result<(f64, TransportPlan)> {
    let (m, n) = (mu_x.len(), mu_y.len());
    if m > BRUTE_FORCE_MAX_ATOMS || n > BRUTE_FORCE_MAX_ATOMS {
        return Err(Error::invalid(format!(
            "brute force oracle handles at most {BRUTE_FORCE_MAX_ATOMS} atoms per side, got {m} and {n}"
        )));
    }
    let cost = GroundCost::new(p)?;
    let mu_y = balance(mu_x, mu_y)?;
    let mut a = vec![vec![0.0; m * n]; m + n];
    for i in 0..m {
        for j in 0..n {
            a[i][i * n + j] = 1.0;
            a[m + j][i * n + j] = 1.0;
        }
    }
    let b: Vec<f64> = mu_x.weights().iter().chain(mu_y.weights()).copied().collect();
    let c: Vec<f64> = (0..m * n)
        .map(|k| cost.eval(mu_x.point(k / n), mu_y.point(k % n)))
        .collect();
    let (value, x) = solve_dense_lp(&a, &b, &c)?;
    let entries = x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, &mass)| PlanEntry {
            row: k / n,
            col: k % n,
            mass,
        })
        .collect();
    Ok((value, TransportPlan::new(m, n, entries)?))
}
