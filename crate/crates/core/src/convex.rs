//! Fixed-topology continuous optimization: given a discrete edge set over
//! polytope targets, place one point per target minimizing the total
//! Euclidean edge length.
//!
//! The nonsmooth objective `Σ ||x_u - x_v||` is handled by smoothing each
//! term to `sqrt(||x_u - x_v||^2 + ε^2)` with a continuation schedule
//! `ε ∈ {1e-2, 1e-4, 1e-6}·diameter`, minimized by projected gradient
//! descent with a Barzilai-Borwein step and backtracking. Per-vertex
//! projections reuse the geometry module's warm-started dual state, so a
//! solve costs a few hundred cheap iterations. Reported costs are always
//! the unsmoothed objective.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{GeometryError, Point, Polytope};
use crate::instance::BoundedCostMatrix;
use crate::linalg::dist;

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
    #[error("invalid topology: {0}")]
    BadTopology(String),
    #[error("topology covers {expected} vertices but {got} sets were supplied")]
    SetCountMismatch { expected: usize, got: usize },
    #[error("cost matrix of size {matrix} does not cover vertex {vertex}")]
    MissingEntry { matrix: usize, vertex: usize },
    #[error("pinned point for vertex {vertex} is outside its set")]
    InfeasiblePin { vertex: usize },
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    Nonconverged {
        residual: f64,
        iterations: usize,
        best: Box<Realization>,
    },
}

/// Discrete structure class of an edge set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyKind {
    Path,
    Tree,
    OneTree,
    Tour,
    General,
}

/// An undirected edge set over vertex indices `0..n`, tagged with the
/// structure class it was validated as.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    kind: TopologyKind,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Cyclic tour visiting `order` (a permutation of `0..n`, `n >= 3`).
    pub fn tour(order: &[usize]) -> Result<Self, ConvexError> {
        let n = order.len();
        if n < 3 {
            return Err(ConvexError::BadTopology(format!("tour needs >= 3 vertices, got {n}")));
        }
        check_permutation(order)?;
        let mut edges = Vec::with_capacity(n);
        for i in 0..n {
            edges.push(norm_edge(order[i], order[(i + 1) % n]));
        }
        edges.sort_unstable();
        Ok(Self { n, kind: TopologyKind::Tour, edges })
    }

    /// Open path visiting `order` (a permutation of `0..n`, `n >= 2`).
    pub fn path(order: &[usize]) -> Result<Self, ConvexError> {
        let n = order.len();
        if n < 2 {
            return Err(ConvexError::BadTopology(format!("path needs >= 2 vertices, got {n}")));
        }
        check_permutation(order)?;
        let mut edges: Vec<(usize, usize)> =
            order.windows(2).map(|w| norm_edge(w[0], w[1])).collect();
        edges.sort_unstable();
        Ok(Self { n, kind: TopologyKind::Path, edges })
    }

    /// Spanning tree over `0..n`.
    pub fn tree(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, ConvexError> {
        let t = Self::build(n, edges, TopologyKind::Tree)?;
        if t.edges.len() != n - 1 {
            return Err(ConvexError::BadTopology(format!(
                "tree over {n} vertices needs {} edges, got {}",
                n - 1,
                t.edges.len()
            )));
        }
        if !t.is_connected() {
            return Err(ConvexError::BadTopology("tree is disconnected".into()));
        }
        Ok(t)
    }

    /// Spanning connected edge set with exactly one cycle, passing through
    /// `root`, where `root` has degree 2.
    pub fn one_tree(n: usize, edges: Vec<(usize, usize)>, root: usize) -> Result<Self, ConvexError> {
        let t = Self::build(n, edges, TopologyKind::OneTree)?;
        if t.edges.len() != n {
            return Err(ConvexError::BadTopology(format!(
                "1-tree over {n} vertices needs {n} edges, got {}",
                t.edges.len()
            )));
        }
        if !t.is_connected() {
            return Err(ConvexError::BadTopology("1-tree is disconnected".into()));
        }
        if t.degrees()[root] != 2 {
            return Err(ConvexError::BadTopology(format!(
                "1-tree root {root} must have degree 2, got {}",
                t.degrees()[root]
            )));
        }
        // Removing the root and its two edges must leave a spanning tree of
        // the remainder, which places the unique cycle through the root.
        let rest: Vec<(usize, usize)> = t
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| u != root && v != root)
            .collect();
        if rest.len() != n - 2 || !connected_on(n, &rest, Some(root)) {
            return Err(ConvexError::BadTopology("1-tree cycle does not pass through the root".into()));
        }
        Ok(t)
    }

    /// Arbitrary undirected edge set.
    pub fn general(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, ConvexError> {
        Self::build(n, edges, TopologyKind::General)
    }

    fn build(n: usize, edges: Vec<(usize, usize)>, kind: TopologyKind) -> Result<Self, ConvexError> {
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(ConvexError::BadTopology(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(ConvexError::BadTopology(format!("edge ({u},{v}) out of range for n={n}")));
            }
            norm.push(norm_edge(u, v));
        }
        norm.sort_unstable();
        let len = norm.len();
        norm.dedup();
        if norm.len() != len {
            return Err(ConvexError::BadTopology("duplicate edge".into()));
        }
        Ok(Self { n, kind, edges: norm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    fn is_connected(&self) -> bool {
        connected_on(self.n, &self.edges, None)
    }

    /// Visit order of a tour starting at vertex 0, walking toward the
    /// lower-indexed neighbor first. `None` if the edges are not a single
    /// cycle of degree 2.
    pub fn tour_order(&self) -> Option<Vec<usize>> {
        if self.edges.len() != self.n || self.n < 3 {
            return None;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        if adj.iter().any(|a| a.len() != 2) {
            return None;
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        let mut order = Vec::with_capacity(self.n);
        let mut prev = usize::MAX;
        let mut cur = 0usize;
        loop {
            order.push(cur);
            let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
            prev = cur;
            cur = next;
            if cur == 0 {
                break;
            }
            if order.len() > self.n {
                return None;
            }
        }
        (order.len() == self.n).then_some(order)
    }
}

fn norm_edge(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

fn check_permutation(order: &[usize]) -> Result<(), ConvexError> {
    let n = order.len();
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(ConvexError::BadTopology(format!("order is not a permutation of 0..{n}")));
        }
        seen[v] = true;
    }
    Ok(())
}

fn connected_on(n: usize, edges: &[(usize, usize)], skip: Option<usize>) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let verts: Vec<usize> = (0..n).filter(|&v| Some(v) != skip).collect();
    if verts.is_empty() {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![verts[0]];
    seen[verts[0]] = true;
    let mut count = 0usize;
    while let Some(v) = stack.pop() {
        count += 1;
        for &w in &adj[v] {
            if Some(w) != skip && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    count == verts.len()
}

/// Optimized placement for a fixed topology.
#[derive(Clone, Debug)]
pub struct Realization {
    pub points: Vec<Point>,
    /// Unsmoothed total edge length at `points`.
    pub cost: f64,
    /// Certificate gap estimate: smoothing bias at the final iterate plus
    /// the residual objective motion in the stall window.
    pub residual: f64,
    pub iterations: usize,
}

/// Sum of matrix costs over the topology's edges.
pub fn bounded_cost_of(topology: &Topology, c: &BoundedCostMatrix) -> Result<f64, ConvexError> {
    if topology.n() > c.n() {
        return Err(ConvexError::MissingEntry { matrix: c.n(), vertex: topology.n() - 1 });
    }
    Ok(topology.edges().iter().map(|&(u, v)| c.cost(u, v)).sum())
}

/// Minimize total edge length over point placements, one per set.
pub fn realize(
    topology: &Topology,
    sets: &[Polytope],
    tol: f64,
    pinned: Option<&HashMap<usize, Point>>,
) -> Result<Realization, ConvexError> {
    solve(topology, sets, tol, pinned, None)
}

/// As [`realize`], starting from caller-supplied points (projected onto
/// their sets first). Exposed for restart-agreement checks.
pub fn realize_from(
    topology: &Topology,
    sets: &[Polytope],
    tol: f64,
    pinned: Option<&HashMap<usize, Point>>,
    init: &[Point],
) -> Result<Realization, ConvexError> {
    solve(topology, sets, tol, pinned, Some(init))
}

/// Convenience wrapper returning only the cost.
pub fn realized_cost(
    topology: &Topology,
    sets: &[Polytope],
    tol: f64,
) -> Result<f64, ConvexError> {
    realize(topology, sets, tol, None).map(|r| r.cost)
}

const EPS_SCHEDULE: [f64; 3] = [1e-2, 1e-4, 1e-6];
const MAX_ITERS: usize = 50_000;
const STALL_WINDOW: usize = 25;

fn solve(
    topology: &Topology,
    sets: &[Polytope],
    tol: f64,
    pinned: Option<&HashMap<usize, Point>>,
    init: Option<&[Point]>,
) -> Result<Realization, ConvexError> {
    let n = topology.n();
    if sets.len() != n {
        return Err(ConvexError::SetCountMismatch { expected: n, got: sets.len() });
    }
    let d = sets.first().map_or(0, |s| s.dim());
    for s in sets {
        if s.dim() != d {
            return Err(ConvexError::Geometry(GeometryError::DimensionMismatch {
                expected: d,
                got: s.dim(),
            }));
        }
    }
    let tol = if tol > 0.0 { tol } else { crate::geometry::DEFAULT_TOL };

    let mut pin: Vec<Option<&Point>> = vec![None; n];
    if let Some(map) = pinned {
        for (&v, p) in map {
            if v >= n {
                return Err(ConvexError::BadTopology(format!("pinned vertex {v} out of range")));
            }
            if !sets[v].contains(p, tol)? {
                return Err(ConvexError::InfeasiblePin { vertex: v });
            }
            pin[v] = Some(p);
        }
    }

    // Initial placement: pins, then caller-supplied starts, then centers.
    let centers: Vec<(Point, f64)> = sets.iter().map(|s| s.chebyshev_center()).collect();
    let mut x = vec![0.0; n * d];
    let mut lam: Vec<Vec<f64>> = sets.iter().map(|s| vec![0.0; s.rows()]).collect();
    let mut scratch = crate::geometry::ProjScratch::default();
    for v in 0..n {
        let slot = &mut x[v * d..(v + 1) * d];
        if let Some(p) = pin[v] {
            slot.copy_from_slice(p.as_slice());
        } else if let Some(start) = init {
            let mut proj = vec![0.0; d];
            sets[v].project_warm(start[v].as_slice(), &mut proj, &mut lam[v], tol, &mut scratch)?;
            slot.copy_from_slice(&proj);
        } else {
            slot.copy_from_slice(centers[v].0.as_slice());
        }
    }

    // Scale estimate for the smoothing schedule.
    let mut diam = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            diam = diam.max(dist(centers[i].0.as_slice(), centers[j].0.as_slice()));
        }
    }
    let rad = centers.iter().map(|c| c.1).fold(0.0f64, f64::max);
    let diam = (diam + 2.0 * rad).max(1e-6);

    let edges = topology.edges();
    if edges.is_empty() {
        let points = gather_points(&x, n, d);
        return Ok(Realization { points, cost: 0.0, residual: 0.0, iterations: 0 });
    }

    let mut grad = vec![0.0; n * d];
    let mut grad_new = vec![0.0; n * d];
    let mut xt = vec![0.0; n * d];
    let mut proj_buf = vec![0.0; d];
    let mut target_buf = vec![0.0; d];

    let mut iterations = 0usize;
    let mut stall_delta = f64::INFINITY;
    let final_thresh = tol / diam;

    for (stage, eps_rel) in EPS_SCHEDULE.iter().enumerate() {
        let eps = eps_rel * diam;
        let last = stage == EPS_SCHEDULE.len() - 1;
        let (thresh, need, budget) = if last {
            (final_thresh, STALL_WINDOW, MAX_ITERS.saturating_sub(iterations))
        } else {
            (100.0 * final_thresh, 5, 4_000)
        };

        let mut f_cur = objective(&x, edges, d, eps);
        gradient(&x, edges, d, eps, &mut grad);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        // Steps beyond the instance diameter only send projection queries
        // far outside the sets; cap the step length at that scale.
        let alpha_max = 4.0 * diam;
        let mut alpha = (0.1 * diam / (gnorm + 1e-12)).min(alpha_max);
        // Stage ends when a full window of iterations makes less than the
        // threshold of cumulative relative progress.
        let mut window_anchor = f_cur;
        let mut window_count = 0usize;
        let mut settled = false;

        for _ in 0..budget {
            iterations += 1;
            // Projected trial step with backtracking on sufficient decrease.
            let mut ft;
            let mut halvings = 0usize;
            loop {
                step_and_project(
                    &x, &grad, alpha, sets, &pin, &mut xt, &mut lam, &mut proj_buf,
                    &mut target_buf, &mut scratch, d, tol,
                )?;
                ft = objective(&xt, edges, d, eps);
                let move2: f64 = xt
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if ft <= f_cur - 1e-4 * move2 / alpha || move2 <= 1e-30 || halvings >= 40 {
                    break;
                }
                alpha *= 0.5;
                halvings += 1;
            }

            gradient(&xt, edges, d, eps, &mut grad_new);
            // Barzilai-Borwein step (BB2) with safeguards.
            let mut sy = 0.0;
            let mut yy = 0.0;
            for i in 0..x.len() {
                let s = xt[i] - x[i];
                let y = grad_new[i] - grad[i];
                sy += s * y;
                yy += y * y;
            }
            alpha = if sy > 1e-30 && yy > 1e-30 {
                (sy / yy).clamp(1e-9 * diam, alpha_max)
            } else {
                (alpha * 2.0).min(alpha_max)
            };

            x.copy_from_slice(&xt);
            std::mem::swap(&mut grad, &mut grad_new);
            f_cur = ft;

            window_count += 1;
            if window_count >= need {
                let progress = (window_anchor - f_cur) / f_cur.abs().max(tol);
                if progress < thresh {
                    settled = true;
                    break;
                }
                window_anchor = f_cur;
                window_count = 0;
            }
        }
        if last {
            stall_delta = if settled {
                (window_anchor - f_cur).abs()
            } else {
                f_cur.abs() * thresh * need as f64
            };
        }
    }

    // Final safety projection, then report the unsmoothed objective.
    for v in 0..n {
        if pin[v].is_none() {
            target_buf.copy_from_slice(&x[v * d..(v + 1) * d]);
            sets[v].project_warm(&target_buf, &mut proj_buf, &mut lam[v], tol, &mut scratch)?;
            x[v * d..(v + 1) * d].copy_from_slice(&proj_buf);
        }
    }
    let cost = objective(&x, edges, d, 0.0);
    let eps_final = EPS_SCHEDULE[EPS_SCHEDULE.len() - 1] * diam;
    let bias = objective(&x, edges, d, eps_final) - cost;
    let residual = bias + stall_delta.min(cost.abs() + 1.0);
    let points = gather_points(&x, n, d);

    if iterations >= MAX_ITERS {
        return Err(ConvexError::Nonconverged {
            residual,
            iterations,
            best: Box::new(Realization { points, cost, residual, iterations }),
        });
    }
    Ok(Realization { points, cost, residual, iterations })
}

#[allow(clippy::too_many_arguments)]
fn step_and_project(
    x: &[f64],
    grad: &[f64],
    alpha: f64,
    sets: &[Polytope],
    pin: &[Option<&Point>],
    xt: &mut [f64],
    lam: &mut [Vec<f64>],
    proj_buf: &mut Vec<f64>,
    target_buf: &mut [f64],
    scratch: &mut crate::geometry::ProjScratch,
    d: usize,
    tol: f64,
) -> Result<(), ConvexError> {
    for (v, set) in sets.iter().enumerate() {
        let slot = v * d..(v + 1) * d;
        if pin[v].is_some() {
            xt[slot.clone()].copy_from_slice(&x[slot]);
            continue;
        }
        for k in 0..d {
            target_buf[k] = x[v * d + k] - alpha * grad[v * d + k];
        }
        set.project_warm(target_buf, proj_buf, &mut lam[v], tol, scratch)?;
        xt[slot].copy_from_slice(proj_buf);
    }
    Ok(())
}

fn objective(x: &[f64], edges: &[(usize, usize)], d: usize, eps: f64) -> f64 {
    let e2 = eps * eps;
    edges
        .iter()
        .map(|&(u, v)| {
            let a = &x[u * d..(u + 1) * d];
            let b = &x[v * d..(v + 1) * d];
            let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            (d2 + e2).sqrt()
        })
        .sum()
}

fn gradient(x: &[f64], edges: &[(usize, usize)], d: usize, eps: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    let e2 = eps * eps;
    for &(u, v) in edges {
        let (au, av) = (u * d, v * d);
        let mut d2 = 0.0;
        for k in 0..d {
            let diff = x[au + k] - x[av + k];
            d2 += diff * diff;
        }
        let rho = (d2 + e2).sqrt().max(1e-300);
        for k in 0..d {
            let diff = (x[au + k] - x[av + k]) / rho;
            out[au + k] += diff;
            out[av + k] -= diff;
        }
    }
}

fn gather_points(x: &[f64], n: usize, d: usize) -> Vec<Point> {
    (0..n)
        .map(|v| Point::new(x[v * d..(v + 1) * d].to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    fn points(ps: &[&[f64]]) -> Vec<Polytope> {
        ps.iter().map(|p| Polytope::singleton(p).unwrap()).collect()
    }

    #[test]
    fn topology_validation() {
        assert!(Topology::tour(&[0, 1]).is_err());
        assert!(Topology::tour(&[0, 1, 1]).is_err());
        let t = Topology::tour(&[0, 2, 1, 3]).unwrap();
        assert_eq!(t.kind(), TopologyKind::Tour);
        assert_eq!(t.edges().len(), 4);
        assert_eq!(t.tour_order().unwrap(), vec![0, 2, 1, 3]);

        let p = Topology::path(&[2, 0, 1]).unwrap();
        assert_eq!(p.edges(), &[(0, 1), (0, 2)]);

        assert!(Topology::tree(3, vec![(0, 1), (1, 2)]).is_ok());
        assert!(Topology::tree(3, vec![(0, 1), (0, 1)]).is_err());
        assert!(Topology::tree(4, vec![(0, 1), (1, 2)]).is_err());

        // Square cycle plus a tail hanging off the root: cycle through root.
        let ot = Topology::one_tree(5, vec![(0, 1), (1, 2), (2, 3), (0, 3), (2, 4)], 0);
        assert!(ot.is_ok());
        // Cycle not through the root.
        let bad = Topology::one_tree(5, vec![(1, 2), (2, 3), (1, 3), (0, 1), (0, 2)], 0);
        assert!(bad.is_err());
    }

    #[test]
    fn tour_over_fixed_points_is_perimeter() {
        let sets = points(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let t = Topology::tour(&[0, 1, 2]).unwrap();
        let r = realize(&t, &sets, 1e-9, None).unwrap();
        assert_relative_eq!(r.cost, 2.0 + 2f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(realized_cost(&t, &sets, 1e-9).unwrap(), r.cost, epsilon = 1e-12);
    }

    #[test]
    fn path_over_two_boxes_matches_min_distance() {
        let sets = vec![
            Polytope::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            Polytope::from_bounds(&[3.0, 0.0], &[4.0, 1.0]).unwrap(),
        ];
        let t = Topology::path(&[0, 1]).unwrap();
        let r = realize(&t, &sets, 1e-7, None).unwrap();
        assert_relative_eq!(r.cost, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn tour_over_four_boxes_on_square() {
        // Unit boxes centered on the corners of a 10x10 square; adjacent
        // boxes face each other at distance 9, so the optimal tour runs
        // 4 * 9 = 36 through the inner corners.
        let mk = |cx: f64, cy: f64| {
            Polytope::from_bounds(&[cx - 0.5, cy - 0.5], &[cx + 0.5, cy + 0.5]).unwrap()
        };
        let sets = vec![mk(0.0, 0.0), mk(10.0, 0.0), mk(10.0, 10.0), mk(0.0, 10.0)];
        let t = Topology::tour(&[0, 1, 2, 3]).unwrap();

        // Coarse brute-force oracle over box-boundary grids.
        let boundary = |cx: f64, cy: f64| -> Vec<(f64, f64)> {
            let mut pts = Vec::new();
            let k = 12;
            for i in 0..=k {
                let t = -0.5 + i as f64 / k as f64;
                pts.push((cx + t, cy - 0.5));
                pts.push((cx + t, cy + 0.5));
                pts.push((cx - 0.5, cy + t));
                pts.push((cx + 0.5, cy + t));
            }
            pts
        };
        let bnds = [
            boundary(0.0, 0.0),
            boundary(10.0, 0.0),
            boundary(10.0, 10.0),
            boundary(0.0, 10.0),
        ];
        let mut oracle = f64::INFINITY;
        for &(x0, y0) in &bnds[0] {
            for &(x1, y1) in &bnds[1] {
                let e01 = ((x0 - x1).powi(2) + (y0 - y1).powi(2)).sqrt();
                if e01 > oracle {
                    continue;
                }
                for &(x2, y2) in &bnds[2] {
                    let e12 = ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt();
                    if e01 + e12 > oracle {
                        continue;
                    }
                    for &(x3, y3) in &bnds[3] {
                        let c = e01
                            + e12
                            + ((x2 - x3).powi(2) + (y2 - y3).powi(2)).sqrt()
                            + ((x3 - x0).powi(2) + (y3 - y0).powi(2)).sqrt();
                        if c < oracle {
                            oracle = c;
                        }
                    }
                }
            }
        }
        assert_relative_eq!(oracle, 36.0, epsilon = 0.05);

        let r = realize(&t, &sets, 1e-7, None).unwrap();
        assert_relative_eq!(r.cost, 36.0, epsilon = 1e-5);
        // Waypoints feasible.
        for (p, s) in r.points.iter().zip(&sets) {
            assert!(s.contains(p, 1e-6).unwrap());
        }
    }

    #[test]
    fn pinned_vertices_stay_fixed() {
        let sets = vec![
            Polytope::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            Polytope::from_bounds(&[3.0, 0.0], &[4.0, 1.0]).unwrap(),
            Polytope::from_bounds(&[0.0, 3.0], &[1.0, 4.0]).unwrap(),
        ];
        let t = Topology::tour(&[0, 1, 2]).unwrap();
        let mut pins = HashMap::new();
        pins.insert(0usize, Point::new(vec![0.25, 0.25]));
        let r = realize(&t, &sets, 1e-7, Some(&pins)).unwrap();
        assert_eq!(r.points[0], Point::new(vec![0.25, 0.25]));

        pins.insert(0usize, Point::new(vec![5.0, 5.0]));
        assert!(matches!(
            realize(&t, &sets, 1e-7, Some(&pins)),
            Err(ConvexError::InfeasiblePin { vertex: 0 })
        ));
    }

    #[test]
    fn bounded_cost_sums_edges() {
        let c = BoundedCostMatrix::from_costs(
            3,
            vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        );
        let empty = Topology::general(3, vec![]).unwrap();
        assert_eq!(bounded_cost_of(&empty, &c).unwrap(), 0.0);
        let tour = Topology::tour(&[0, 1, 2]).unwrap();
        assert_relative_eq!(bounded_cost_of(&tour, &c).unwrap(), 3.0, epsilon = 1e-12);
        let big = Topology::general(4, vec![(0, 3)]).unwrap();
        assert!(matches!(
            bounded_cost_of(&big, &c),
            Err(ConvexError::MissingEntry { .. })
        ));
    }

    #[test]
    fn degenerate_sets_match_matrix_arithmetic() {
        // With point targets the realized cost is classical graph cost.
        let mut rng = SplitMix64::new(5);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..5)
                .map(|_| vec![rng.range_f64(0.0, 8.0), rng.range_f64(0.0, 8.0)])
                .collect();
            let sets: Vec<Polytope> = pts.iter().map(|p| Polytope::singleton(p).unwrap()).collect();
            let c = BoundedCostMatrix::from_points(&pts);
            let order = [0usize, 2, 4, 1, 3];
            let t = Topology::tour(&order).unwrap();
            let r = realize(&t, &sets, 1e-9, None).unwrap();
            let direct = bounded_cost_of(&t, &c).unwrap();
            assert!((r.cost - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn realized_at_least_bounded() {
        let mut rng = SplitMix64::new(77);
        for trial in 0..25 {
            let inst = instance::generate(5, 2, 1000 + trial).unwrap();
            let c = instance::bounded_matrix(&inst, 1e-8).unwrap();
            let order: Vec<usize> = {
                let mut o: Vec<usize> = (0..5).collect();
                for i in (1..5).rev() {
                    let j = 1 + rng.below(i as u64) as usize;
                    o.swap(i, j);
                }
                o
            };
            let t = Topology::tour(&order).unwrap();
            let r = realize(&t, &inst.sets, 1e-7, None).unwrap();
            let lb = bounded_cost_of(&t, &c).unwrap();
            assert!(
                r.cost >= lb - 5.0 * 1e-7,
                "realized {} < bounded {lb}",
                r.cost
            );
        }
    }

    #[test]
    fn restart_agreement() {
        let inst = instance::generate(5, 2, 9001).unwrap();
        let t = Topology::tour(&[0, 1, 2, 3, 4]).unwrap();
        let tol = 1e-6;
        let base = realize(&t, &inst.sets, tol, None).unwrap();
        let mut rng = SplitMix64::new(1);
        for _ in 0..16 {
            let init: Vec<Point> = inst
                .sets
                .iter()
                .map(|s| {
                    let (c, _) = s.chebyshev_center();
                    let dir = rng.unit_vector(2);
                    Point::new(vec![c.coords[0] + dir[0], c.coords[1] + dir[1]])
                })
                .collect();
            let r = realize_from(&t, &inst.sets, tol, None, &init).unwrap();
            assert!(
                (r.cost - base.cost).abs() <= 10.0 * tol,
                "restart disagreement: {} vs {}",
                r.cost,
                base.cost
            );
        }
    }

    #[test]
    fn monotone_under_set_enlargement() {
        let inst = instance::generate(4, 2, 31).unwrap();
        let t = Topology::tour(&[0, 1, 2, 3]).unwrap();
        let base = realize(&t, &inst.sets, 1e-7, None).unwrap();
        for grow in 0..4 {
            let mut sets = inst.sets.clone();
            let (h, g, d) = {
                let s = &sets[grow];
                let mut h = Vec::new();
                let mut g = Vec::new();
                for r in 0..s.rows() {
                    let (row, gi) = s.halfspace(r);
                    h.extend_from_slice(row);
                    g.push(gi + 0.05);
                }
                (h, g, s.dim())
            };
            sets[grow] = Polytope::from_halfspaces(h, g, d).unwrap();
            let bigger = realize(&t, &sets, 1e-7, None).unwrap();
            assert!(
                bigger.cost <= base.cost + 1e-6,
                "superset increased cost: {} > {}",
                bigger.cost,
                base.cost
            );
        }
    }

    #[test]
    fn stored_cost_matches_recomputation() {
        let inst = instance::generate(6, 2, 12).unwrap();
        let t = Topology::tour(&[0, 3, 1, 5, 2, 4]).unwrap();
        let r = realize(&t, &inst.sets, 1e-7, None).unwrap();
        let recomputed: f64 = t
            .edges()
            .iter()
            .map(|&(u, v)| dist(r.points[u].as_slice(), r.points[v].as_slice()))
            .sum();
        assert!((recomputed - r.cost).abs() < 1e-9);
    }
}
