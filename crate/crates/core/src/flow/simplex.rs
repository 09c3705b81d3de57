//! Primal network simplex for uncapacitated min-cost flow.
//!
//! Arcs are never materialized by the engine: an [`ArcSet`] answers endpoint
//! and cost queries by index, so dense bipartite problems can generate costs
//! on the fly. Because no arc has an upper bound, every non-tree arc carries
//! zero flow and the only per-arc state is implicit. Flows live on the tree,
//! one value per non-root node (the flow on the arc to its parent), measured
//! in integer units.
//!
//! Entering arcs are chosen by block search over a cyclic candidate list.
//! The leaving arc is the last blocking arc met when walking the cycle from
//! its apex in the direction of the flow change, which keeps the basis
//! strongly feasible and prevents cycling on degenerate pivots.

use std::ops::Range;

use crate::error::{Error, Result};

pub(crate) const NONE: usize = usize::MAX;

/// Relative threshold on reduced costs, scaled by the largest arc cost.
pub(crate) const REDUCED_COST_EPS: f64 = 1e-12;

const MIN_BLOCK: usize = 10;

/// Read-only description of a network's arcs.
///
/// Arc indices below [`ArcSet::priced_arcs`] may enter the basis. Indices at or
/// above it are allowed in a starting tree (artificial arcs) but are never priced.
pub(crate) trait ArcSet: Sync {
    fn node_count(&self) -> usize;
    fn priced_arcs(&self) -> usize;
    fn endpoints(&self, arc: usize) -> (usize, usize);
    fn cost(&self, arc: usize) -> f64;

    /// Updates `best`/`best_arc` with the most negative reduced cost
    /// `c + pi[s] - pi[t]` found in `range`.
    #[inline]
    fn scan(&self, pi: &[f64], range: Range<usize>, best: &mut f64, best_arc: &mut usize) {
        for a in range {
            let (s, t) = self.endpoints(a);
            let rc = self.cost(a) + pi[s] - pi[t];
            if rc < *best {
                *best = rc;
                *best_arc = a;
            }
        }
    }
}

/// A spanning tree basis with its tree flows.
#[derive(Clone, Debug)]
pub(crate) struct Basis {
    pub root: usize,
    pub parent: Vec<usize>,
    pub pred: Vec<usize>,
    /// `true` when the predecessor arc points from the node to its parent.
    pub up: Vec<bool>,
    pub flow: Vec<i64>,
}

impl Basis {
    /// Orients a list of `(arc, flow)` tree arcs away from `root`.
    pub fn from_tree_arcs<A: ArcSet>(arcs: &A, root: usize, tree: &[(usize, i64)]) -> Result<Basis> {
        let n = arcs.node_count();
        if tree.len() + 1 != n {
            return Err(Error::Internal(format!(
                "{} tree arcs cannot span {n} nodes",
                tree.len()
            )));
        }
        let mut degree = vec![0usize; n + 1];
        for &(a, _) in tree {
            let (s, t) = arcs.endpoints(a);
            degree[s + 1] += 1;
            degree[t + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut incident = vec![0usize; 2 * tree.len()];
        for (k, &(a, _)) in tree.iter().enumerate() {
            let (s, t) = arcs.endpoints(a);
            incident[fill[s]] = k;
            fill[s] += 1;
            incident[fill[t]] = k;
            fill[t] += 1;
        }
        let mut basis = Basis {
            root,
            parent: vec![NONE; n],
            pred: vec![NONE; n],
            up: vec![false; n],
            flow: vec![0; n],
        };
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = vec![root];
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &k in &incident[offsets[u]..offsets[u + 1]] {
                let (a, f) = tree[k];
                let (s, t) = arcs.endpoints(a);
                let v = if s == u { t } else { s };
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                basis.parent[v] = u;
                basis.pred[v] = a;
                basis.up[v] = s == v;
                basis.flow[v] = f;
                queue.push(v);
            }
        }
        if queue.len() != n {
            return Err(Error::Internal("starting arcs do not form a spanning tree".into()));
        }
        Ok(basis)
    }
}

pub(crate) struct NetworkSimplex<'a, A: ArcSet> {
    arcs: &'a A,
    root: usize,
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    flow: Vec<i64>,
    depth: Vec<u32>,
    pi: Vec<f64>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    block: usize,
    next_arc: usize,
    tol: f64,
    stack: Vec<usize>,
    stem: Vec<usize>,
    pivots: u64,
}

impl<'a, A: ArcSet> NetworkSimplex<'a, A> {
    /// `tol` is the absolute reduced-cost threshold below which an arc enters.
    pub fn new(arcs: &'a A, basis: Basis, tol: f64) -> Self {
        let n = arcs.node_count();
        let priced = arcs.priced_arcs();
        let block = ((priced as f64).sqrt().ceil() as usize).max(MIN_BLOCK);
        let mut ns = Self {
            arcs,
            root: basis.root,
            parent: basis.parent,
            pred: basis.pred,
            up: basis.up,
            flow: basis.flow,
            depth: vec![0; n],
            pi: vec![0.0; n],
            first_child: vec![NONE; n],
            next_sib: vec![NONE; n],
            prev_sib: vec![NONE; n],
            block,
            next_arc: 0,
            tol,
            stack: Vec::new(),
            stem: Vec::new(),
            pivots: 0,
        };
        for u in 0..n {
            if u != ns.root {
                let p = ns.parent[u];
                ns.link(u, p);
            }
        }
        ns.recompute_potentials();
        ns
    }

    /// Pivots until no priced arc has a reduced cost below `-tol`.
    pub fn run(&mut self) -> Result<()> {
        loop {
            while let Some(a) = self.find_entering() {
                self.pivot(a)?;
            }
            // Potentials drift under incremental updates; confirm optimality
            // against freshly propagated ones before stopping.
            self.recompute_potentials();
            match self.find_entering() {
                Some(a) => self.pivot(a)?,
                None => return Ok(()),
            }
        }
    }

    pub fn pivots(&self) -> u64 {
        self.pivots
    }

    pub fn potentials(&self) -> &[f64] {
        &self.pi
    }

    /// `(arc, flow)` for every tree arc.
    pub fn tree_flows(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        (0..self.parent.len())
            .filter(move |&u| u != self.root)
            .map(move |u| (self.pred[u], self.flow[u]))
    }

    pub fn into_basis(self) -> Basis {
        Basis {
            root: self.root,
            parent: self.parent,
            pred: self.pred,
            up: self.up,
            flow: self.flow,
        }
    }

    fn link(&mut self, u: usize, p: usize) {
        let head = self.first_child[p];
        self.next_sib[u] = head;
        self.prev_sib[u] = NONE;
        if head != NONE {
            self.prev_sib[head] = u;
        }
        self.first_child[p] = u;
    }

    fn unlink(&mut self, u: usize) {
        let (prev, next) = (self.prev_sib[u], self.next_sib[u]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[self.parent[u]] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
    }

    /// Potential of `u` implied by its tree arc and its parent's potential.
    #[inline]
    fn child_potential(&self, u: usize) -> f64 {
        let c = self.arcs.cost(self.pred[u]);
        let p = self.pi[self.parent[u]];
        if self.up[u] {
            p - c
        } else {
            p + c
        }
    }

    fn recompute_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        self.depth[self.root] = 0;
        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();
        stack.push(self.root);
        while let Some(u) = stack.pop() {
            let mut c = self.first_child[u];
            while c != NONE {
                self.pi[c] = self.child_potential(c);
                self.depth[c] = self.depth[u] + 1;
                stack.push(c);
                c = self.next_sib[c];
            }
        }
        self.stack = stack;
    }

    fn find_entering(&mut self) -> Option<usize> {
        let total = self.arcs.priced_arcs();
        let mut best = -self.tol;
        let mut best_arc = NONE;
        let mut start = self.next_arc.min(total);
        let mut scanned = 0;
        while scanned < total {
            let len = self.block.min(total - scanned);
            let end = start + len;
            if end <= total {
                self.arcs.scan(&self.pi, start..end, &mut best, &mut best_arc);
                start = if end == total { 0 } else { end };
            } else {
                self.arcs.scan(&self.pi, start..total, &mut best, &mut best_arc);
                self.arcs.scan(&self.pi, 0..end - total, &mut best, &mut best_arc);
                start = end - total;
            }
            scanned += len;
            if best_arc != NONE {
                self.next_arc = start;
                return Some(best_arc);
            }
        }
        None
    }

    fn find_join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            let (du, dv) = (self.depth[u], self.depth[v]);
            if du >= dv {
                u = self.parent[u];
            }
            if dv >= du {
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, in_arc: usize) -> Result<()> {
        self.pivots += 1;
        let (first, second) = self.arcs.endpoints(in_arc);
        let join = self.find_join(first, second);

        // Flow moves first <- join on the first path and second -> join on the second.
        let mut delta = i64::MAX;
        let mut u_out = NONE;
        let mut side = 0u8;
        let mut u = first;
        while u != join {
            if self.up[u] && self.flow[u] < delta {
                delta = self.flow[u];
                u_out = u;
                side = 1;
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] && self.flow[u] <= delta {
                delta = self.flow[u];
                u_out = u;
                side = 2;
            }
            u = self.parent[u];
        }
        if side == 0 {
            return Err(Error::Internal("unbounded negative-cost cycle".into()));
        }

        if delta > 0 {
            u = first;
            while u != join {
                self.flow[u] += if self.up[u] { -delta } else { delta };
                u = self.parent[u];
            }
            u = second;
            while u != join {
                self.flow[u] += if self.up[u] { delta } else { -delta };
                u = self.parent[u];
            }
        }

        let (u_in, v_in) = if side == 1 { (first, second) } else { (second, first) };
        self.rehang(in_arc, u_in, v_in, u_out, delta);
        Ok(())
    }

    /// Cuts the subtree below `u_out`, re-roots it at `u_in` and hangs it
    /// under `v_in` through `in_arc`.
    fn rehang(&mut self, in_arc: usize, u_in: usize, v_in: usize, u_out: usize, in_flow: i64) {
        let mut stem = std::mem::take(&mut self.stem);
        stem.clear();
        let mut u = u_in;
        loop {
            stem.push(u);
            if u == u_out {
                break;
            }
            u = self.parent[u];
        }

        self.unlink(u_out);
        let mut new_parent = v_in;
        let mut new_pred = in_arc;
        let mut new_up = self.arcs.endpoints(in_arc).0 == u_in;
        let mut new_flow = in_flow;
        for &w in &stem {
            let (old_pred, old_up, old_flow) = (self.pred[w], self.up[w], self.flow[w]);
            if w != u_out {
                self.unlink(w);
            }
            self.parent[w] = new_parent;
            self.pred[w] = new_pred;
            self.up[w] = new_up;
            self.flow[w] = new_flow;
            self.link(w, new_parent);
            new_parent = w;
            new_pred = old_pred;
            new_up = !old_up;
            new_flow = old_flow;
        }
        self.stem = stem;

        let sigma = self.child_potential(u_in) - self.pi[u_in];
        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();
        self.pi[u_in] += sigma;
        self.depth[u_in] = self.depth[v_in] + 1;
        stack.push(u_in);
        while let Some(w) = stack.pop() {
            let d = self.depth[w] + 1;
            let mut c = self.first_child[w];
            while c != NONE {
                self.pi[c] += sigma;
                self.depth[c] = d;
                stack.push(c);
                c = self.next_sib[c];
            }
        }
        self.stack = stack;
    }
}
