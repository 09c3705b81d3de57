//! Exact min-cost flow and exact optimal transport.
//!
//! All solvers here share one network simplex engine ([`simplex`]). Masses
//! are converted to integers before pivoting: the positive side of every
//! problem is represented by [`MASS_UNITS`] units, apportioned with the
//! largest-remainder rule so that supply and demand balance exactly.

mod exact;
mod network;
pub mod oracle;
pub(crate) mod simplex;

pub use exact::{solve_exact, solve_exact_with, ExactConfig, ExactSolution};
pub use network::{solve_min_cost_flow, FlowArc, FlowNetwork, FlowSolution};
pub use oracle::brute_force_ot;

/// Integer units standing for the total positive mass of a problem.
pub const MASS_UNITS: i64 = 1_000_000_000_000;

/// Splits `units` integer units proportionally to `weights` (largest remainder).
///
/// The result sums to exactly `units`. Every weight must be nonnegative and
/// their sum positive.
pub(crate) fn apportion(weights: &[f64], units: i64) -> Vec<i64> {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let scale = units as f64 / total;
    let mut out = Vec::with_capacity(weights.len());
    let mut frac = Vec::with_capacity(weights.len());
    let mut assigned: i64 = 0;
    for (i, &w) in weights.iter().enumerate() {
        let raw = w * scale;
        let base = raw.floor();
        out.push(base as i64);
        assigned += base as i64;
        frac.push((raw - base, i));
    }
    let mut rest = units - assigned;
    if rest != 0 {
        frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let n = frac.len() as i64;
        if rest > 0 {
            // `rest` can exceed `n` only through rounding of huge weight vectors.
            let each = rest / n;
            if each > 0 {
                out.iter_mut().for_each(|u| *u += each);
                rest -= each * n;
            }
            for &(_, i) in frac.iter().take(rest as usize) {
                out[i] += 1;
            }
        } else {
            for &(_, i) in frac.iter().rev() {
                if rest == 0 {
                    break;
                }
                if out[i] > 0 {
                    out[i] -= 1;
                    rest += 1;
                }
            }
        }
    }
    out
}
