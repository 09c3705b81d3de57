//! Discrete measures, point sets and the ground cost.
//!
//! A [`DiscreteMeasure`] is a finite sum of weighted Dirac masses in `R^d`.
//! Positions are stored row-major in a [`PointCloud`]. Every solver in the
//! crate exchanges costs on the `W_p^p` scale; [`cost_to_distance`] is the one
//! place where a cost is turned into a distance.

use crate::error::{Error, Result};

/// Relative tolerance under which two total masses are considered equal and
/// silently rebalanced.
pub const MASS_REBALANCE_TOL: f64 = 1e-9;

/// Row-major list of points of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates cannot be split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        Ok(Self { dim, coords })
    }

    /// Builds a cloud from individual points, checking that they share a dimension.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.as_ref().len())
            .ok_or_else(|| Error::invalid("empty point list"))?;
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Copies the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointCloud {
            dim: self.dim,
            coords,
        }
    }

    /// Squared Frobenius norm of the stacked coordinates.
    pub(crate) fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }
}

/// A finite weighted sum of Dirac masses, `sum_i w_i delta_{x_i}`.
///
/// Atoms with zero weight are dropped on construction, so every stored weight
/// is strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: PointCloud,
    weights: Vec<f64>,
    mass: f64,
}

impl DiscreteMeasure {
    pub fn new(points: PointCloud, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} positions but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("weight {w} is not a nonnegative number")));
        }
        let (points, weights) = if weights.iter().any(|&w| w == 0.0) {
            let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
            let w = keep.iter().map(|&i| weights[i]).collect();
            (points.select(&keep), w)
        } else {
            (points, weights)
        };
        if weights.is_empty() {
            return Err(Error::invalid("measure has no atom with positive weight"));
        }
        let mass = weights.iter().sum();
        Ok(Self {
            points,
            weights,
            mass,
        })
    }

    /// Convenience constructor from a list of points.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P], weights: Vec<f64>) -> Result<Self> {
        Self::new(PointCloud::from_points(points)?, weights)
    }

    /// Uniform weights summing to one.
    pub fn uniform(points: PointCloud) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// A single atom of unit mass.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::new(PointCloud::new(point.len(), point.to_vec())?, vec![1.0])
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass
    }

    /// Position of atom `i`.
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    /// Returns the measure scaled to total mass `mass`.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid(format!("target mass {mass} must be positive")));
        }
        let s = mass / self.mass;
        Ok(Self {
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
            mass,
        })
    }

    pub fn normalized(&self) -> Self {
        self.with_mass(1.0).expect("mass is positive")
    }
}

/// Checks that two measures live in the same space and carry the same mass.
///
/// A relative mass difference up to [`MASS_REBALANCE_TOL`] is absorbed by
/// rescaling `mu_y`; the returned measure is the (possibly rescaled) `mu_y`.
pub fn balance(mu_x: &DiscreteMeasure, mu_y: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if mu_x.dim() != mu_y.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu_x.dim(),
            found: mu_y.dim(),
        });
    }
    let (a, b) = (mu_x.total_mass(), mu_y.total_mass());
    if a == b {
        return Ok(mu_y.clone());
    }
    if (a - b).abs() > MASS_REBALANCE_TOL * a.max(b) {
        return Err(Error::MassMismatch(a, b));
    }
    mu_y.with_mass(a)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Power {
    One,
    Two,
    Int(i32),
    Real(f64),
}

/// The ground cost `c(a, b) = sum_s |a_s - b_s|^p` (the `p`-th power of the
/// `L^p` norm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundCost {
    p: f64,
    power: Power,
}

impl GroundCost {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("exponent p = {p} must be a finite number >= 1")));
        }
        let power = if p == 1.0 {
            Power::One
        } else if p == 2.0 {
            Power::Two
        } else if p.fract() == 0.0 && p <= 16.0 {
            Power::Int(p as i32)
        } else {
            Power::Real(p)
        };
        Ok(Self { p, power })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `|t|^p` for a single coordinate difference.
    #[inline]
    pub fn pow_abs(&self, t: f64) -> f64 {
        let t = t.abs();
        match self.power {
            Power::One => t,
            Power::Two => t * t,
            Power::Int(k) => t.powi(k),
            Power::Real(p) => t.powf(p),
        }
    }

    /// Cost between two points; the caller guarantees equal length.
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self.power {
            Power::Two => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Power::One => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            _ => a.iter().zip(b).map(|(x, y)| self.pow_abs(x - y)).sum(),
        }
    }

    /// Largest cost between any point of `a` and any point of `b`, bounded
    /// from above by the bounding box of both clouds.
    pub(crate) fn bounding_cost(&self, a: &PointCloud, b: &PointCloud) -> f64 {
        let d = a.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in a.iter().chain(b.iter()) {
            for s in 0..d {
                lo[s] = lo[s].min(p[s]);
                hi[s] = hi[s].max(p[s]);
            }
        }
        (0..d).map(|s| self.pow_abs(hi[s] - lo[s])).sum()
    }
}

/// `sum_s |a_s - b_s|^p`.
pub fn ground_cost(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(GroundCost::new(p)?.eval(a, b))
}

/// Converts a `W_p^p` value into the distance `W_p`.
pub fn cost_to_distance(cost: f64, p: f64) -> f64 {
    cost.max(0.0).powf(1.0 / p)
}
