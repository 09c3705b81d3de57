//! Sparse transport plans and the evaluations built on them.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, GroundCost, PointCloud};

/// One nonzero cell `gamma[row][col] = mass` of a transport plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanEntry {
    pub row: usize,
    pub col: usize,
    pub mass: f64,
}

/// A sparse nonnegative `rows x cols` coupling matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<PlanEntry>,
}

impl TransportPlan {
    /// Builds a plan, dropping zero cells. Duplicate cells are kept as given;
    /// use [`TransportPlan::canonicalize`] to merge them.
    pub fn new(rows: usize, cols: usize, entries: Vec<PlanEntry>) -> Result<Self> {
        for e in &entries {
            if e.row >= rows || e.col >= cols {
                return Err(Error::invalid(format!(
                    "plan entry ({}, {}) outside a {rows}x{cols} plan",
                    e.row, e.col
                )));
            }
            if !(e.mass >= 0.0 && e.mass.is_finite()) {
                return Err(Error::invalid(format!("plan mass {} is not a nonnegative number", e.mass)));
            }
        }
        let mut entries = entries;
        entries.retain(|e| e.mass > 0.0);
        Ok(Self { rows, cols, entries })
    }

    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, entries: Vec<PlanEntry>) -> Self {
        Self { rows, cols, entries }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<PlanEntry> {
        self.entries
    }

    /// Number of stored nonzero cells.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for e in &self.entries {
            s[e.row] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for e in &self.entries {
            s[e.col] += e.mass;
        }
        s
    }

    /// Largest absolute deviation of the row and column sums from the given marginals.
    pub fn marginal_error(&self, row_marginal: &[f64], col_marginal: &[f64]) -> f64 {
        assert_eq!(row_marginal.len(), self.rows);
        assert_eq!(col_marginal.len(), self.cols);
        let r = self
            .row_sums()
            .iter()
            .zip(row_marginal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let c = self
            .col_sums()
            .iter()
            .zip(col_marginal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        r.max(c)
    }

    /// Sorts entries by `(row, col)` and merges duplicate cells by adding their masses.
    pub fn canonicalize(&mut self) {
        self.entries.sort_unstable_by_key(|e| (e.row, e.col));
        let mut out: Vec<PlanEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(last) if last.row == e.row && last.col == e.col => last.mass += e.mass,
                _ => out.push(e),
            }
        }
        self.entries = out;
    }

    /// The transposed plan (`cols x rows`).
    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            entries: self
                .entries
                .iter()
                .map(|e| PlanEntry {
                    row: e.col,
                    col: e.row,
                    mass: e.mass,
                })
                .collect(),
        }
    }
}

fn check_shapes(plan: &TransportPlan, x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    if plan.rows() != x.len() || plan.cols() != y.len() {
        return Err(Error::invalid(format!(
            "{}x{} plan does not match {} source and {} target points",
            plan.rows(),
            plan.cols(),
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// `<gamma, c>`, the cost of a plan on the `W_p^p` scale.
pub fn plan_cost(plan: &TransportPlan, x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    check_shapes(plan, x, y)?;
    let cost = GroundCost::new(p)?;
    Ok(plan_cost_with(plan, x, y, &cost))
}

pub(crate) fn plan_cost_with(plan: &TransportPlan, x: &PointCloud, y: &PointCloud, cost: &GroundCost) -> f64 {
    plan.entries()
        .iter()
        .map(|e| e.mass * cost.eval(x.point(e.row), y.point(e.col)))
        .sum()
}

/// Displacement interpolation `mu_t = sum_ij gamma_ij delta_{x_i + t (y_j - x_i)}`.
///
/// Atoms landing on bitwise-identical positions are merged.
pub fn interpolate(plan: &TransportPlan, x: &PointCloud, y: &PointCloud, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("interpolation time {t} outside [0, 1]")));
    }
    check_shapes(plan, x, y)?;
    let d = x.dim();
    let mut atoms: Vec<(Vec<f64>, f64)> = plan
        .entries()
        .iter()
        .map(|e| {
            let (a, b) = (x.point(e.row), y.point(e.col));
            let pos = if t == 0.0 {
                a.to_vec()
            } else if t == 1.0 {
                b.to_vec()
            } else {
                a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
            };
            (pos, e.mass)
        })
        .collect();
    atoms.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let mut coords = Vec::with_capacity(atoms.len() * d);
    let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut last: Option<&[f64]> = None;
    for (pos, w) in &atoms {
        if last == Some(pos.as_slice()) {
            *weights.last_mut().expect("nonempty") += w;
        } else {
            coords.extend_from_slice(pos);
            weights.push(*w);
            last = Some(pos);
        }
    }
    DiscreteMeasure::new(PointCloud::new(d, coords)?, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(v: &[f64]) -> PointCloud {
        PointCloud::new(1, v.to_vec()).unwrap()
    }

    fn entry(row: usize, col: usize, mass: f64) -> PlanEntry {
        PlanEntry { row, col, mass }
    }

    #[test]
    fn plan_cost_examples() {
        let plan = TransportPlan::new(1, 1, vec![entry(0, 0, 1.0)]).unwrap();
        assert_eq!(plan_cost(&plan, &cloud(&[0.0]), &cloud(&[2.0]), 2.0).unwrap(), 4.0);

        let empty = TransportPlan::empty(1, 1);
        assert_eq!(plan_cost(&empty, &cloud(&[0.0]), &cloud(&[2.0]), 2.0).unwrap(), 0.0);

        let plan = TransportPlan::new(2, 2, vec![entry(0, 0, 0.5), entry(1, 1, 0.5)]).unwrap();
        let c = plan_cost(&plan, &cloud(&[0.0, 2.0]), &cloud(&[1.0, 3.0]), 1.0).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plan_cost_shape_errors() {
        let plan = TransportPlan::new(2, 1, vec![entry(0, 0, 1.0)]).unwrap();
        assert!(plan_cost(&plan, &cloud(&[0.0]), &cloud(&[2.0]), 2.0).is_err());
        assert!(TransportPlan::new(1, 1, vec![entry(1, 0, 1.0)]).is_err());
        assert!(TransportPlan::new(1, 1, vec![entry(0, 0, -1.0)]).is_err());
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let x = cloud(&[0.0, 1.0]);
        let y = cloud(&[5.0, 7.0]);
        let plan = TransportPlan::new(2, 2, vec![entry(0, 0, 0.25), entry(0, 1, 0.25), entry(1, 1, 0.5)]).unwrap();
        let m0 = interpolate(&plan, &x, &y, 0.0).unwrap();
        assert_eq!(m0.points().coords(), &[0.0, 1.0]);
        assert_eq!(m0.weights(), &[0.5, 0.5]);
        let m1 = interpolate(&plan, &x, &y, 1.0).unwrap();
        assert_eq!(m1.points().coords(), &[5.0, 7.0]);
        assert_eq!(m1.weights(), &[0.25, 0.75]);

        let single = TransportPlan::new(1, 1, vec![entry(0, 0, 1.0)]).unwrap();
        let mid = interpolate(&single, &cloud(&[0.0]), &cloud(&[2.0]), 0.5).unwrap();
        assert_eq!(mid.points().coords(), &[1.0]);
        assert_eq!(mid.weights(), &[1.0]);
    }

    #[test]
    fn interpolation_rejects_bad_time() {
        let single = TransportPlan::new(1, 1, vec![entry(0, 0, 1.0)]).unwrap();
        assert!(interpolate(&single, &cloud(&[0.0]), &cloud(&[2.0]), 1.5).is_err());
        assert!(interpolate(&single, &cloud(&[0.0]), &cloud(&[2.0]), -0.1).is_err());
    }

    #[test]
    fn canonicalize_merges_duplicates() {
        let mut plan =
            TransportPlan::new(2, 2, vec![entry(1, 0, 0.25), entry(0, 1, 0.5), entry(1, 0, 0.25)]).unwrap();
        plan.canonicalize();
        assert_eq!(plan.entries(), &[entry(0, 1, 0.5), entry(1, 0, 0.5)]);
        assert_eq!(plan.row_sums(), vec![0.5, 0.5]);
        assert_eq!(plan.col_sums(), vec![0.5, 0.5]);
    }
}
