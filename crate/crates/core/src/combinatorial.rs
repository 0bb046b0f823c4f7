//! Classical graph machinery over a static cost matrix: constrained
//! Kruskal spanning trees, minimum 1-trees, the Held-Karp subgradient
//! ascent, nearest-neighbor tours and 2-opt improvement.
//!
//! Everything here sees only matrix costs. Forced and forbidden edge sets
//! thread through all of it because the branch-and-bound layer branches on
//! exactly those; `ForcedCycle` / `Disconnected` errors double as the
//! infeasibility signals that prune a branch.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::convex::{ConvexError, Topology};
use crate::instance::BoundedCostMatrix;

#[derive(Debug, Error)]
pub enum ComboError {
    #[error("need at least {need} vertices, got {got}")]
    TooFewVertices { need: usize, got: usize },
    #[error("vertex {v} out of range for n={n}")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("edge ({u},{v}) is both forced and forbidden")]
    ConstraintConflict { u: usize, v: usize },
    #[error("vertex {v} has more than two forced edges")]
    ForcedDegreeExceeded { v: usize },
    #[error("forced edges close a cycle")]
    ForcedCycle,
    #[error("graph disconnected under the forbidden set")]
    Disconnected,
    #[error("forced edge ({u},{v}) touches an excluded vertex")]
    ForcedEdgeExcluded { u: usize, v: usize },
    #[error(transparent)]
    Topology(#[from] ConvexError),
}

impl ComboError {
    /// Branch-and-bound treats these as "this subproblem has no tour".
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, ComboError::ForcedCycle | ComboError::Disconnected)
    }
}

/// Forced (`S_Y`) and forbidden (`S_X`) edge sets for branching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeConstraintSet {
    forced: BTreeSet<(usize, usize)>,
    forbidden: BTreeSet<(usize, usize)>,
}

impl EdgeConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn force(&mut self, u: usize, v: usize) -> Result<(), ComboError> {
        let e = ordered(u, v);
        if self.forbidden.contains(&e) {
            return Err(ComboError::ConstraintConflict { u: e.0, v: e.1 });
        }
        if self.forced.contains(&e) {
            return Ok(());
        }
        for &w in [e.0, e.1].iter() {
            if self.forced_degree(w) >= 2 {
                return Err(ComboError::ForcedDegreeExceeded { v: w });
            }
        }
        self.forced.insert(e);
        Ok(())
    }

    pub fn forbid(&mut self, u: usize, v: usize) -> Result<(), ComboError> {
        let e = ordered(u, v);
        if self.forced.contains(&e) {
            return Err(ComboError::ConstraintConflict { u: e.0, v: e.1 });
        }
        self.forbidden.insert(e);
        Ok(())
    }

    pub fn is_forced(&self, u: usize, v: usize) -> bool {
        self.forced.contains(&ordered(u, v))
    }

    pub fn is_forbidden(&self, u: usize, v: usize) -> bool {
        self.forbidden.contains(&ordered(u, v))
    }

    pub fn forced_degree(&self, v: usize) -> usize {
        self.forced.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn forced_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forced.iter().copied()
    }

    pub fn forbidden_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forbidden.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.forced.len() + self.forbidden.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forced.is_empty() && self.forbidden.is_empty()
    }
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Vertex penalty terms of the Lagrangian relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct Penalties(pub Vec<f64>);

impl Penalties {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// One subgradient update: `π += t (deg - 2)`.
pub fn ascent_step(pi: &mut Penalties, degrees: &[usize], t: f64) {
    for (p, &d) in pi.0.iter_mut().zip(degrees) {
        *p += t * (d as f64 - 2.0);
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.rank.iter_mut().for_each(|r| *r = 0);
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

/// Reusable Kruskal state for one (matrix, exclusion, constraints) shape;
/// the ascent re-sorts the same edge list under fresh penalized keys every
/// iteration, so the candidate list is built once.
struct MstEngine {
    active_count: usize,
    /// Candidate edges among active vertices, forbidden ones removed.
    edges: Vec<(u32, u32)>,
    /// Forced edges among active vertices, pre-merged before the scan.
    forced: Vec<(u32, u32)>,
    keys: Vec<f64>,
    order: Vec<u32>,
    uf: UnionFind,
}

impl MstEngine {
    fn new(
        c: &BoundedCostMatrix,
        constraints: &EdgeConstraintSet,
        exclude: &[usize],
    ) -> Result<Self, ComboError> {
        let n = c.n();
        let mut active = vec![true; n];
        for &v in exclude {
            if v >= n {
                return Err(ComboError::VertexOutOfRange { v, n });
            }
            active[v] = false;
        }
        for (u, v) in constraints.forced_edges().chain(constraints.forbidden_edges()) {
            let hi = u.max(v);
            if hi >= n {
                return Err(ComboError::VertexOutOfRange { v: hi, n });
            }
        }
        // Forced edges touching an inactive vertex are left to the caller
        // (the 1-tree handles root edges in its own step).
        let mut edges = Vec::new();
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] || constraints.is_forbidden(i, j) || constraints.is_forced(i, j) {
                    continue;
                }
                edges.push((i as u32, j as u32));
            }
        }
        let forced: Vec<(u32, u32)> = constraints
            .forced_edges()
            .filter(|&(u, v)| active[u] && active[v])
            .map(|(u, v)| (u as u32, v as u32))
            .collect();
        let keys = vec![0.0; edges.len()];
        let order = (0..edges.len() as u32).collect();
        let active_count = active.iter().filter(|&&a| a).count();
        Ok(Self { active_count, edges, forced, keys, order, uf: UnionFind::new(n) })
    }

    /// Minimum spanning tree over the active vertices under
    /// `c̄(i,j) = c(i,j) + π_i + π_j`. Ties break on lexicographic edge
    /// index. Returns the edge list and penalized cost.
    fn run(
        &mut self,
        c: &BoundedCostMatrix,
        pi: &[f64],
        out_edges: &mut Vec<(usize, usize)>,
    ) -> Result<f64, ComboError> {
        out_edges.clear();
        if self.active_count == 0 {
            return Ok(0.0);
        }
        self.uf.reset();
        let mut cost = 0.0;
        let mut components = self.active_count;
        for &(u, v) in &self.forced {
            if !self.uf.union(u, v) {
                return Err(ComboError::ForcedCycle);
            }
            out_edges.push((u as usize, v as usize));
            cost += c.cost(u as usize, v as usize) + pi[u as usize] + pi[v as usize];
            components -= 1;
        }
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            self.keys[k] = c.cost(u as usize, v as usize) + pi[u as usize] + pi[v as usize];
        }
        for (k, o) in self.order.iter_mut().enumerate() {
            *o = k as u32;
        }
        let keys = &self.keys;
        self.order.sort_unstable_by(|&a, &b| {
            keys[a as usize]
                .partial_cmp(&keys[b as usize])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &k in &self.order {
            if components == 1 {
                break;
            }
            let (u, v) = self.edges[k as usize];
            if self.uf.union(u, v) {
                out_edges.push((u as usize, v as usize));
                cost += self.keys[k as usize];
                components -= 1;
            }
        }
        if components != 1 {
            return Err(ComboError::Disconnected);
        }
        Ok(cost)
    }
}

/// Constrained minimum spanning tree over all vertices except `exclude`.
///
/// The returned topology is kind `Tree` when it spans every vertex and
/// `General` when an exclusion leaves a subset tree.
pub fn mst_kruskal(
    c: &BoundedCostMatrix,
    constraints: &EdgeConstraintSet,
    exclude: &[usize],
) -> Result<(Topology, f64), ComboError> {
    for (u, v) in constraints.forced_edges() {
        if exclude.contains(&u) || exclude.contains(&v) {
            return Err(ComboError::ForcedEdgeExcluded { u, v });
        }
    }
    let mut engine = MstEngine::new(c, constraints, exclude)?;
    let mut edges = Vec::new();
    let zeros = vec![0.0; c.n()];
    let cost = engine.run(c, &zeros, &mut edges)?;
    let topology = if exclude.is_empty() {
        Topology::tree(c.n(), edges)?
    } else {
        Topology::general(c.n(), edges)?
    };
    Ok((topology, cost))
}

/// A minimum 1-tree: spanning tree over `V \ {root}` plus the two cheapest
/// root edges under penalized costs.
#[derive(Clone, Debug)]
pub struct OneTree {
    pub topology: Topology,
    pub root: usize,
    /// Total penalized cost `Σ c̄` over the 1-tree edges.
    pub penalized_cost: f64,
    /// Lagrangian bound value: `penalized_cost - 2 Σ π`.
    pub bound: f64,
    pub degrees: Vec<usize>,
}

impl OneTree {
    /// Degree-2 everywhere means the 1-tree is itself a tour.
    pub fn is_tour(&self) -> bool {
        self.degrees.iter().all(|&d| d == 2)
    }
}

/// Minimum 1-tree rooted at `root` under penalties `pi`.
pub fn min_one_tree(
    c: &BoundedCostMatrix,
    root: usize,
    pi: &Penalties,
    constraints: &EdgeConstraintSet,
) -> Result<OneTree, ComboError> {
    let mut engine = MstEngine::new(c, constraints, &[root])?;
    one_tree_with(&mut engine, c, root, &pi.0, constraints)
}

fn one_tree_with(
    engine: &mut MstEngine,
    c: &BoundedCostMatrix,
    root: usize,
    pi: &[f64],
    constraints: &EdgeConstraintSet,
) -> Result<OneTree, ComboError> {
    let n = c.n();
    if n < 3 {
        return Err(ComboError::TooFewVertices { need: 3, got: n });
    }
    if root >= n {
        return Err(ComboError::VertexOutOfRange { v: root, n });
    }
    let mut edges = Vec::with_capacity(n);
    let mut penalized = engine.run(c, pi, &mut edges)?;

    // Root edges: forced ones first, then the cheapest penalized.
    let mut picked: Vec<usize> = constraints
        .forced_edges()
        .filter(|&(u, v)| u == root || v == root)
        .map(|(u, v)| if u == root { v } else { u })
        .collect();
    if picked.len() < 2 {
        let mut by_cost: Vec<(f64, usize)> = (0..n)
            .filter(|&v| v != root && !picked.contains(&v) && !constraints.is_forbidden(root, v))
            .map(|v| (c.cost(root, v) + pi[root] + pi[v], v))
            .collect();
        by_cost.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
        });
        picked.extend(by_cost.iter().take(2 - picked.len()).map(|&(_, v)| v));
    }
    if picked.len() < 2 {
        return Err(ComboError::Disconnected);
    }
    for &v in &picked {
        edges.push(ordered(root, v));
        penalized += c.cost(root, v) + pi[root] + pi[v];
    }
    let topology = Topology::one_tree(n, edges, root)?;
    let degrees = topology.degrees();
    let two_sum_pi: f64 = 2.0 * pi.iter().sum::<f64>();
    Ok(OneTree {
        topology,
        root,
        penalized_cost: penalized,
        bound: penalized - two_sum_pi,
        degrees,
    })
}

#[derive(Clone, Debug)]
pub struct AscentConfig {
    pub max_iter: usize,
    pub t0: f64,
    pub decay: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        // Benchmark defaults: 1000 iterations, step 2 decaying by 5%.
        Self { max_iter: 1000, t0: 2.0, decay: 0.95 }
    }
}

#[derive(Clone, Debug)]
pub struct AscentResult {
    /// Largest Lagrangian bound seen over all iterations.
    pub best_bound: f64,
    pub best_pi: Penalties,
    pub best_tree: OneTree,
    /// Penalties after the final iteration, for warm-starting children.
    pub last_pi: Penalties,
    pub iterations: usize,
    /// The ascent stopped because a 1-tree was a tour.
    pub found_tour: bool,
}

/// Held-Karp subgradient ascent: iterate `π += t (deg - 2)` on the minimum
/// 1-tree, retaining the best bound seen. Stops early when a 1-tree is a
/// tour (its bound then equals that tour's matrix cost).
pub fn held_karp_ascent(
    c: &BoundedCostMatrix,
    root: usize,
    constraints: &EdgeConstraintSet,
    pi0: Option<&Penalties>,
    cfg: &AscentConfig,
) -> Result<AscentResult, ComboError> {
    let n = c.n();
    let mut engine = MstEngine::new(c, constraints, &[root])?;
    let mut pi = pi0.cloned().unwrap_or_else(|| Penalties::zeros(n));
    assert_eq!(pi.0.len(), n, "penalty vector length");
    let mut t = cfg.t0;
    let mut best: Option<(f64, Penalties, OneTree)> = None;
    let mut iterations = 0usize;
    let mut found_tour = false;
    for _ in 0..cfg.max_iter.max(1) {
        iterations += 1;
        let tree = one_tree_with(&mut engine, c, root, &pi.0, constraints)?;
        let bound = tree.bound;
        let tour = tree.is_tour();
        if best.as_ref().is_none_or(|(b, _, _)| bound > *b) {
            best = Some((bound, pi.clone(), tree.clone()));
        }
        if tour {
            found_tour = true;
            break;
        }
        ascent_step(&mut pi, &tree.degrees, t);
        t *= cfg.decay;
    }
    let (best_bound, best_pi, best_tree) = best.expect("at least one iteration ran");
    Ok(AscentResult { best_bound, best_pi, best_tree, last_pi: pi, iterations, found_tour })
}

/// Nearest-unvisited-neighbor tour from `start`; ties go to the lowest
/// vertex index.
pub fn greedy_tour(c: &BoundedCostMatrix, start: usize) -> Result<Topology, ComboError> {
    let n = c.n();
    if n < 3 {
        return Err(ComboError::TooFewVertices { need: 3, got: n });
    }
    if start >= n {
        return Err(ComboError::VertexOutOfRange { v: start, n });
    }
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    order.push(start);
    visited[start] = true;
    let mut cur = start;
    for _ in 1..n {
        let mut best: Option<(f64, usize)> = None;
        for v in 0..n {
            if visited[v] {
                continue;
            }
            let cost = c.cost(cur, v);
            if best.is_none_or(|(bc, bv)| cost < bc || (cost == bc && v < bv)) {
                best = Some((cost, v));
            }
        }
        let (_, v) = best.expect("unvisited vertex exists");
        order.push(v);
        visited[v] = true;
        cur = v;
    }
    Ok(Topology::tour(&order)?)
}

/// First-improvement 2-opt to local optimality. Swaps compare matrix costs
/// unless `evaluator` is given, in which case each candidate visit order is
/// scored by the callback (the convex branch-and-bound variant realizes the
/// candidate tour); a callback returning `None` rejects the swap.
pub fn two_opt(
    tour: &Topology,
    c: &BoundedCostMatrix,
    mut evaluator: Option<&mut dyn FnMut(&[usize]) -> Option<f64>>,
) -> Result<Topology, ComboError> {
    let mut order = tour
        .tour_order()
        .ok_or(ComboError::TooFewVertices { need: 3, got: tour.n() })?;
    let n = order.len();
    let mut current_score = match evaluator.as_mut() {
        Some(f) => f(&order),
        None => None,
    };
    'outer: loop {
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue; // wrap-adjacent edges share a vertex
                }
                match evaluator.as_mut() {
                    None => {
                        let (a, b) = (order[i], order[i + 1]);
                        let (d, e) = (order[j], order[(j + 1) % n]);
                        let delta = c.cost(a, d) + c.cost(b, e) - c.cost(a, b) - c.cost(d, e);
                        if delta < -1e-12 {
                            order[i + 1..=j].reverse();
                            continue 'outer;
                        }
                    }
                    Some(f) => {
                        let mut cand = order.clone();
                        cand[i + 1..=j].reverse();
                        let (Some(new), Some(cur)) = (f(&cand), current_score) else {
                            continue;
                        };
                        if new < cur - 1e-9 {
                            order = cand;
                            current_score = Some(new);
                            continue 'outer;
                        }
                    }
                }
            }
        }
        break;
    }
    Ok(Topology::tour(&order)?)
}

/// Matrix cost of a tour given as a visit order.
pub fn tour_matrix_cost(c: &BoundedCostMatrix, order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| c.cost(order[i], order[(i + 1) % n])).sum()
}
