//! Seeded synthetic measures: point clouds with smooth or random weights, and
//! grid images in ten density classes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, PointCloud};

/// Weight profile of a synthetic point cloud.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Mixture of 3 to 10 isotropic Gaussian bumps evaluated at the points.
    Smooth,
    /// Independent uniform weights.
    Random,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(SyntheticKind::Smooth),
            "random" => Ok(SyntheticKind::Random),
            _ => Err(Error::invalid(format!("unknown synthetic kind `{s}` (expected smooth or random)"))),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Smooth => "smooth",
            SyntheticKind::Random => "random",
        })
    }
}

/// Floor on bump densities, relative to the largest weight, so that no atom
/// underflows to zero and the measure keeps all `n` points.
const DENSITY_FLOOR: f64 = 1e-9;

struct Bump {
    center: Vec<f64>,
    inv_two_var: f64,
    height: f64,
}

fn bumps(rng: &mut ChaCha8Rng, d: usize) -> Vec<Bump> {
    let count = rng.gen_range(3..=10);
    (0..count)
        .map(|_| {
            let sigma: f64 = rng.gen_range(0.08..0.3);
            Bump {
                center: (0..d).map(|_| rng.gen::<f64>()).collect(),
                inv_two_var: 1.0 / (2.0 * sigma * sigma),
                height: rng.gen_range(0.2..1.0),
            }
        })
        .collect()
}

fn bump_density(bumps: &[Bump], pt: &[f64]) -> f64 {
    bumps
        .iter()
        .map(|b| {
            let r2: f64 = b.center.iter().zip(pt).map(|(c, v)| (c - v) * (c - v)).sum();
            b.height * (-r2 * b.inv_two_var).exp()
        })
        .sum()
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let max = w.iter().copied().fold(0.0, f64::max);
    w.iter_mut().for_each(|v| *v = v.max(DENSITY_FLOOR * max));
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// `n` uniform points in `[0, 1]^d` with weights of the given kind.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, d: usize, seed: u64) -> Result<DiscreteMeasure> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("synthetic measures need n >= 1 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>()).collect();
    let points = PointCloud::new(d, coords)?;
    let weights = match kind {
        SyntheticKind::Smooth => {
            let b = bumps(&mut rng, d);
            points.iter().map(|pt| bump_density(&b, pt)).collect()
        }
        SyntheticKind::Random => (0..n).map(|_| rng.gen::<f64>()).collect(),
    };
    DiscreteMeasure::new(points, normalize(weights))
}

/// Density classes of the synthetic image benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageClass {
    /// Heavy-tailed bumps.
    Cauchy,
    /// Few large Gaussian blobs.
    Blobs,
    /// Random field with low frequencies only.
    FieldSmooth,
    /// Random field with mid frequencies.
    FieldModerate,
    /// Random field dominated by high frequencies.
    FieldRough,
    /// Exponential of a smooth random field.
    LogField,
    /// Logistic transform of a moderate random field.
    LogitField,
    /// Filled rectangles and discs on a faint background.
    Shapes,
    /// Bright sparse spots blurred on a dark background.
    Spots,
    /// Independent uniform pixels.
    WhiteNoise,
}

impl ImageClass {
    pub const ALL: [ImageClass; 10] = [
        ImageClass::Cauchy,
        ImageClass::Blobs,
        ImageClass::FieldSmooth,
        ImageClass::FieldModerate,
        ImageClass::FieldRough,
        ImageClass::LogField,
        ImageClass::LogitField,
        ImageClass::Shapes,
        ImageClass::Spots,
        ImageClass::WhiteNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImageClass::Cauchy => "cauchy",
            ImageClass::Blobs => "blobs",
            ImageClass::FieldSmooth => "field-smooth",
            ImageClass::FieldModerate => "field-moderate",
            ImageClass::FieldRough => "field-rough",
            ImageClass::LogField => "log-field",
            ImageClass::LogitField => "logit-field",
            ImageClass::Shapes => "shapes",
            ImageClass::Spots => "spots",
            ImageClass::WhiteNoise => "white-noise",
        }
    }
}

impl FromStr for ImageClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ImageClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown image class `{s}`")))
    }
}

impl fmt::Display for ImageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sum of random cosine waves with frequencies in `[lo, hi]` cycles per image.
fn random_field(rng: &mut ChaCha8Rng, size: usize, lo: f64, hi: f64, waves: usize) -> Vec<f64> {
    let params: Vec<(f64, f64, f64, f64)> = (0..waves)
        .map(|_| {
            let f = rng.gen_range(lo..hi);
            let theta = rng.gen_range(0.0..PI);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let amp = 1.0 / f.max(1.0);
            (f * theta.cos(), f * theta.sin(), phase, amp)
        })
        .collect();
    let mut out = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let (u, v) = (c as f64 / size as f64, r as f64 / size as f64);
            out.push(params.iter().map(|&(a, b, ph, amp)| amp * (2.0 * PI * (a * u + b * v) + ph).cos()).sum());
        }
    }
    standardize(out)
}

fn standardize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt().max(1e-12);
    v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
    v
}

fn shift_positive(mut v: Vec<f64>) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter_mut().for_each(|x| *x = *x - lo + 0.05 * (hi - lo).max(1e-12));
    v
}

/// Pixel values of a `size x size` image of class `class`, row-major and nonnegative.
pub fn generate_image(class: ImageClass, size: usize, seed: u64) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(Error::invalid("image size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (class as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d));
    let s = size as f64;
    let grid = |f: &mut dyn FnMut(f64, f64) -> f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(size * size);
        for r in 0..size {
            for c in 0..size {
                out.push(f((c as f64 + 0.5) / s, (r as f64 + 0.5) / s));
            }
        }
        out
    };
    let values = match class {
        ImageClass::Cauchy => {
            let k = rng.gen_range(2..=6);
            let centers: Vec<(f64, f64, f64)> =
                (0..k).map(|_| (rng.gen(), rng.gen(), rng.gen_range(0.03..0.15))).collect();
            grid(&mut |u, v| {
                centers
                    .iter()
                    .map(|&(a, b, g)| 1.0 / (1.0 + ((u - a).powi(2) + (v - b).powi(2)) / (g * g)))
                    .sum()
            })
        }
        ImageClass::Blobs => {
            let b = bumps(&mut rng, 2);
            grid(&mut |u, v| bump_density(&b, &[u, v]))
        }
        ImageClass::FieldSmooth => shift_positive(random_field(&mut rng, size, 0.5, 2.5, 12)),
        ImageClass::FieldModerate => shift_positive(random_field(&mut rng, size, 2.0, 6.0, 24)),
        ImageClass::FieldRough => shift_positive(random_field(&mut rng, size, 6.0, 16.0, 48)),
        ImageClass::LogField => random_field(&mut rng, size, 0.5, 3.0, 12).iter().map(|x| x.exp()).collect(),
        ImageClass::LogitField => random_field(&mut rng, size, 1.5, 5.0, 16)
            .iter()
            .map(|x| 1.0 / (1.0 + (-2.0 * x).exp()))
            .collect(),
        ImageClass::Shapes => {
            let k = rng.gen_range(2..=5);
            let shapes: Vec<(bool, f64, f64, f64, f64, f64)> = (0..k)
                .map(|_| {
                    (
                        rng.gen_bool(0.5),
                        rng.gen(),
                        rng.gen(),
                        rng.gen_range(0.08..0.3),
                        rng.gen_range(0.08..0.3),
                        rng.gen_range(0.5..1.0),
                    )
                })
                .collect();
            grid(&mut |u, v| {
                0.02 + shapes
                    .iter()
                    .map(|&(disc, a, b, rx, ry, h)| {
                        let inside = if disc {
                            ((u - a) / rx).powi(2) + ((v - b) / ry).powi(2) <= 1.0
                        } else {
                            (u - a).abs() <= rx && (v - b).abs() <= ry
                        };
                        if inside {
                            h
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
        }
        ImageClass::Spots => {
            let k = rng.gen_range(8..=30);
            let spots: Vec<(f64, f64, f64)> = (0..k).map(|_| (rng.gen(), rng.gen(), rng.gen_range(0.3..1.0))).collect();
            let inv = 1.0 / (2.0 * (1.2 / s).powi(2));
            grid(&mut |u, v| {
                0.01 + spots
                    .iter()
                    .map(|&(a, b, h)| h * (-((u - a).powi(2) + (v - b).powi(2)) * inv).exp())
                    .sum::<f64>()
            })
        }
        ImageClass::WhiteNoise => (0..size * size).map(|_| rng.gen::<f64>()).collect(),
    };
    Ok(values)
}

/// Turns row-major pixel values into a measure: pixel `(r, c)` sits at
/// `(c + 0.5, r + 0.5)` with weight `value / total`.
pub fn image_measure(values: &[f64], rows: usize, cols: usize) -> Result<DiscreteMeasure> {
    if values.len() != rows * cols {
        return Err(Error::invalid(format!(
            "{} pixel values for a {rows}x{cols} image",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("pixel value {v} must be finite and nonnegative")));
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("image has no mass"));
    }
    let mut coords = Vec::with_capacity(2 * values.len());
    for r in 0..rows {
        for c in 0..cols {
            coords.push(c as f64 + 0.5);
            coords.push(r as f64 + 0.5);
        }
    }
    DiscreteMeasure::new(
        PointCloud::new(2, coords)?,
        values.iter().map(|v| v / total).collect(),
    )
}
