use super::simplex::{ArcSet, Basis, NetworkSimplex, REDUCED_COST_EPS};
use super::{apportion, MASS_UNITS};
use crate::error::{Error, Result};

/// Relative tolerance on the supply balance of a [`FlowNetwork`].
const BALANCE_TOL: f64 = 1e-9;

/// Directed arc with unbounded capacity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowArc {
    pub src: usize,
    pub dst: usize,
    pub cost: f64,
}

/// Node supplies (positive = source, negative = sink) plus uncapacitated arcs.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    supplies: Vec<f64>,
    arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn new(supplies: Vec<f64>, arcs: Vec<FlowArc>) -> Result<Self> {
        let n = supplies.len();
        if n == 0 {
            return Err(Error::invalid("flow network has no nodes"));
        }
        if supplies.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("non-finite supply"));
        }
        for a in &arcs {
            if a.src >= n || a.dst >= n {
                return Err(Error::invalid(format!("arc {} -> {} references a missing node", a.src, a.dst)));
            }
            if !(a.cost >= 0.0 && a.cost.is_finite()) {
                return Err(Error::invalid(format!("arc cost {} must be finite and nonnegative", a.cost)));
            }
        }
        Ok(Self { supplies, arcs })
    }

    pub fn supplies(&self) -> &[f64] {
        &self.supplies
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }
}

/// Optimal flow of a [`FlowNetwork`].
#[derive(Clone, Debug)]
pub struct FlowSolution {
    /// Flow per arc, in the network's arc order.
    pub flows: Vec<f64>,
    pub objective: f64,
    /// Node potentials with reduced costs `cost + pi[src] - pi[dst] >= 0` on
    /// every arc and `= 0` on arcs carrying flow.
    pub potentials: Vec<f64>,
}

/// Real arcs followed by one artificial arc per node, all incident to an extra root.
struct ArtificialArcs<'a> {
    arcs: &'a [FlowArc],
    root: usize,
    art_cost: f64,
    art_up: Vec<bool>,
}

impl ArcSet for ArtificialArcs<'_> {
    fn node_count(&self) -> usize {
        self.root + 1
    }

    fn priced_arcs(&self) -> usize {
        self.arcs.len()
    }

    #[inline]
    fn endpoints(&self, arc: usize) -> (usize, usize) {
        match self.arcs.get(arc) {
            Some(a) => (a.src, a.dst),
            None => {
                let u = arc - self.arcs.len();
                if self.art_up[u] {
                    (u, self.root)
                } else {
                    (self.root, u)
                }
            }
        }
    }

    #[inline]
    fn cost(&self, arc: usize) -> f64 {
        match self.arcs.get(arc) {
            Some(a) => a.cost,
            None if self.art_up[arc - self.arcs.len()] => 0.0,
            None => self.art_cost,
        }
    }
}

/// Solves an uncapacitated min-cost flow problem with nonnegative costs.
///
/// Supplies must sum to zero (up to a relative `1e-9`). They are represented
/// internally as integers so flow conservation holds exactly; the returned
/// flows are multiples of `total_supply / 10^12`.
pub fn solve_min_cost_flow(net: &FlowNetwork) -> Result<FlowSolution> {
    let n = net.supplies.len();
    let pos: f64 = net.supplies.iter().filter(|&&s| s > 0.0).sum();
    let neg: f64 = -net.supplies.iter().filter(|&&s| s < 0.0).sum::<f64>();
    if (pos - neg).abs() > BALANCE_TOL * pos.max(neg) {
        return Err(Error::Unbalanced(pos - neg));
    }
    if pos == 0.0 {
        return Ok(FlowSolution {
            flows: vec![0.0; net.arcs.len()],
            objective: 0.0,
            potentials: vec![0.0; n],
        });
    }

    let split = |sign: f64| -> Vec<i64> {
        let part: Vec<f64> = net.supplies.iter().map(|&s| (s * sign).max(0.0)).collect();
        apportion(&part, MASS_UNITS)
    };
    let (plus, minus) = (split(1.0), split(-1.0));
    let units: Vec<i64> = plus.iter().zip(&minus).map(|(a, b)| a - b).collect();

    let max_cost = net.arcs.iter().map(|a| a.cost).fold(0.0, f64::max);
    let node_total = (n + 1) as f64;
    let art_cost = (max_cost + 1.0) * node_total;
    let set = ArtificialArcs {
        arcs: &net.arcs,
        root: n,
        art_cost,
        art_up: units.iter().map(|&u| u >= 0).collect(),
    };
    let tree: Vec<(usize, i64)> = units
        .iter()
        .enumerate()
        .map(|(u, &s)| (net.arcs.len() + u, s.abs()))
        .collect();
    let basis = Basis::from_tree_arcs(&set, n, &tree)?;
    let tol = REDUCED_COST_EPS * max_cost + 16.0 * f64::EPSILON * art_cost;
    let mut engine = NetworkSimplex::new(&set, basis, tol);
    engine.run()?;

    let unit_mass = pos / MASS_UNITS as f64;
    let mut flows = vec![0.0; net.arcs.len()];
    for (arc, f) in engine.tree_flows() {
        if arc >= net.arcs.len() {
            if f > 0 {
                return Err(Error::Infeasible(format!(
                    "{} of the supply cannot reach a sink",
                    f as f64 * unit_mass
                )));
            }
        } else {
            flows[arc] = f as f64 * unit_mass;
        }
    }
    let objective = flows.iter().zip(&net.arcs).map(|(f, a)| f * a.cost).sum();
    let mut potentials = engine.potentials()[..n].to_vec();
    // Shift so the smallest potential is zero; only differences matter.
    let lo = potentials.iter().copied().fold(f64::INFINITY, f64::min);
    potentials.iter_mut().for_each(|p| *p -= lo);
    Ok(FlowSolution {
        flows,
        objective,
        potentials,
    })
}
