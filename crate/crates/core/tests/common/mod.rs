#![allow(dead_code)]

use otrefine::barycenter::update::{column_objective, Sample};
use otrefine::measure::{DiscreteMeasure, GroundCost, PointCloud};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform positions in `[0, scale]^d` with random positive weights summing to one.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> DiscreteMeasure {
    let coords = (0..n * d).map(|_| rng.gen::<f64>() * scale).collect();
    let weights: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    DiscreteMeasure::new(
        PointCloud::new(d, coords).unwrap(),
        weights.iter().map(|w| w / total).collect(),
    )
    .unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Eight far-apart groups; inside each, two sources sit next to two targets.
pub fn separated_groups() -> (DiscreteMeasure, DiscreteMeasure) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for g in 0..8 {
        let (cx, cy) = ((g % 4) as f64 * 100.0, (g / 4) as f64 * 100.0);
        xs.push([cx, cy]);
        xs.push([cx + 1.0, cy + 0.5]);
        ys.push([cx + 0.3, cy + 2.0]);
        ys.push([cx + 1.5, cy - 1.0]);
    }
    let w = vec![1.0 / 16.0; 16];
    (
        DiscreteMeasure::from_points(&xs, w.clone()).unwrap(),
        DiscreteMeasure::from_points(&ys, w).unwrap(),
    )
}

pub fn random_column(r: &mut ChaCha8Rng) -> Vec<Sample> {
    let len = r.gen_range(1..=12);
    (0..len)
        .map(|_| (r.gen_range(-5.0..5.0), r.gen_range(0.01..1.0)))
        .collect()
}

/// Golden-section search over the sample hull.
pub fn golden_section(samples: &[Sample], cost: &GroundCost) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |z| column_objective(samples, cost, z);
    let mut a = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let mut b = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    [a, b, c, d].into_iter().min_by(|u, v| f(*u).total_cmp(&f(*v))).unwrap()
}
