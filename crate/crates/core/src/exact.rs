//! Exact solvers and certified lower bounds.
//!
//! Two independent routes to the optimum: [`solve_enumeration`] realizes
//! every distinct tour (the ground-truth oracle, factorial cost), and
//! [`solve_lattice`] runs best-first search over visited-subset states —
//! the Bellman-Held-Karp lattice — with an admissible bound per state:
//! the relaxed continuous cost of the visited prefix plus a matrix MST
//! over what remains. The continuous prefix cost depends on the whole
//! prefix order, not just the (subset, last) pair, so states carry their
//! order and the classical DP collapse does not apply; subset structure
//! only shapes the bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::combinatorial::{
    held_karp_ascent, min_one_tree, mst_kruskal, AscentConfig, ComboError, EdgeConstraintSet,
    Penalties,
};
use crate::convex::{realize, ConvexError, Topology};
use crate::geometry::Point;
use crate::instance::{BoundedCostMatrix, Instance};

/// Hard cap for the enumeration oracle: (n-1)!/2 tours.
pub const ENUMERATION_MAX: usize = 9;
/// Hard cap for the subset DP (memory grows as `n 2^n`).
pub const DP_MAX: usize = 18;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("instance with {n} sets exceeds the {max}-set limit of this solver")]
    TooLarge { n: usize, max: usize },
    #[error("need at least 3 sets, got {0}")]
    TooSmall(usize),
    #[error("node cap {0} exhausted before any complete tour was found")]
    CapBeforeIncumbent(usize),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Combo(#[from] ComboError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMethod {
    Enumeration,
    LatticeBnB,
}

#[derive(Clone, Debug)]
pub struct ExactResult {
    /// Visit order, starting at target 0; the tour closes back to 0.
    pub order: Vec<usize>,
    pub cost: f64,
    pub waypoints: Vec<Point>,
    /// Tours evaluated (enumeration) or states expanded (lattice).
    pub nodes: usize,
    pub method: ExactMethod,
    /// `false` only when the lattice search hit its node cap and returns
    /// its incumbent without an optimality proof.
    pub proven: bool,
}

/// All distinct tour visit orders on `n` targets: target 0 first and the
/// orientation fixed by `order[1] < order[n-1]`, giving `(n-1)!/2` orders.
pub fn tour_orders(n: usize) -> Vec<Vec<usize>> {
    let mut rest: Vec<usize> = (1..n).collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    current.push(0);
    permute_into(&mut rest, 0, &mut current, &mut out);
    out
}

fn permute_into(
    rest: &mut Vec<usize>,
    depth: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if depth == rest.len() {
        if rest.len() < 2 || current[1] < current[current.len() - 1] {
            out.push(current.clone());
        }
        return;
    }
    for i in depth..rest.len() {
        rest.swap(depth, i);
        current.push(rest[depth]);
        permute_into(rest, depth + 1, current, out);
        current.pop();
        rest.swap(depth, i);
    }
}

/// Ground-truth oracle: realize every distinct tour and take the minimum;
/// ties break toward the lexicographically smallest order.
pub fn solve_enumeration(inst: &Instance, tol: f64) -> Result<ExactResult, ExactError> {
    let n = inst.n_k();
    if n < 3 {
        return Err(ExactError::TooSmall(n));
    }
    if n > ENUMERATION_MAX {
        return Err(ExactError::TooLarge { n, max: ENUMERATION_MAX });
    }
    let orders = tour_orders(n);
    let nodes = orders.len();
    let best = orders
        .into_par_iter()
        .map(|order| {
            let topo = Topology::tour(&order)?;
            let r = realize(&topo, &inst.sets, tol, None)?;
            Ok::<_, ExactError>((r.cost, order, r.points))
        })
        .try_reduce_with(|a, b| {
            Ok(match a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)) {
                Ordering::Greater => b,
                _ => a,
            })
        })
        .expect("at least one tour")?;
    Ok(ExactResult {
        order: best.1,
        cost: best.0,
        waypoints: best.2,
        nodes,
        method: ExactMethod::Enumeration,
        proven: true,
    })
}

/// Lattice search state: a concrete visited prefix plus its lower bound.
#[derive(Clone, Debug)]
pub struct LatticeState {
    pub order: Vec<usize>,
    pub visited: u32,
    pub lb: f64,
}

struct HeapNode {
    lb: f64,
    order: Vec<usize>,
    visited: u32,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.lb == other.lb && self.order == other.order
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop the smallest bound.
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// Best-first exact search over the visited-subset lattice.
pub fn solve_lattice(
    inst: &Instance,
    c: &BoundedCostMatrix,
    tol: f64,
    node_cap: usize,
) -> Result<ExactResult, ExactError> {
    solve_lattice_inner(inst, c, tol, node_cap, None)
}

/// As [`solve_lattice`], recording every expanded state for admissibility
/// audits.
pub fn solve_lattice_traced(
    inst: &Instance,
    c: &BoundedCostMatrix,
    tol: f64,
    node_cap: usize,
) -> Result<(ExactResult, Vec<LatticeState>), ExactError> {
    let mut trace = Vec::new();
    let res = solve_lattice_inner(inst, c, tol, node_cap, Some(&mut trace))?;
    Ok((res, trace))
}

fn solve_lattice_inner(
    inst: &Instance,
    c: &BoundedCostMatrix,
    tol: f64,
    node_cap: usize,
    mut trace: Option<&mut Vec<LatticeState>>,
) -> Result<ExactResult, ExactError> {
    let n = inst.n_k();
    if n < 3 {
        return Err(ExactError::TooSmall(n));
    }
    assert!(n <= 32, "lattice state uses a 32-bit visited mask");
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let empty_cons = EdgeConstraintSet::new();

    let mut heap: BinaryHeap<HeapNode> = BinaryHeap::new();
    let root_lb = mst_kruskal(c, &empty_cons, &[])?.1;
    heap.push(HeapNode { lb: root_lb, order: vec![0], visited: 1 });

    let mut incumbent: Option<(f64, Vec<usize>, Vec<Point>)> = None;
    let mut expanded = 0usize;
    let mut proven = false;

    while let Some(node) = heap.pop() {
        if let Some((ic, _, _)) = &incumbent {
            if node.lb >= *ic {
                // Best-first order: every remaining state is bounded off.
                proven = true;
                break;
            }
        }
        if expanded >= node_cap {
            break;
        }
        expanded += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(LatticeState { order: node.order.clone(), visited: node.visited, lb: node.lb });
        }

        for next in 0..n {
            if node.visited >> next & 1 == 1 {
                continue;
            }
            let mut order = node.order.clone();
            order.push(next);
            let visited = node.visited | (1 << next);
            if visited == full {
                // Complete tour; evaluate only the canonical orientation.
                if n > 3 && order[1] > order[n - 1] {
                    continue;
                }
                let topo = Topology::tour(&order)?;
                let r = realize(&topo, &inst.sets, tol, None)?;
                let better = match &incumbent {
                    None => true,
                    Some((ic, io, _)) => {
                        r.cost < *ic || (r.cost == *ic && order < *io)
                    }
                };
                if better {
                    incumbent = Some((r.cost, order, r.points));
                }
                continue;
            }
            // Prefix bound: relaxed continuous cost of the path so far...
            let path_ids: Vec<usize> = (0..order.len()).collect();
            let sub_sets: Vec<_> = order.iter().map(|&v| inst.sets[v].clone()).collect();
            let prefix = realize(&Topology::path(&path_ids)?, &sub_sets, tol, None)?.cost;
            // ...plus a matrix MST over {last, unvisited, 0}, relaxing the
            // remaining path-and-return.
            let exclude: Vec<usize> = (1..n)
                .filter(|&v| v != next && visited >> v & 1 == 1)
                .collect();
            let completion = match mst_kruskal(c, &empty_cons, &exclude) {
                Ok((_, cost)) => cost,
                Err(e) if e.is_infeasibility() => continue,
                Err(e) => return Err(e.into()),
            };
            let lb = prefix + completion;
            if let Some((ic, _, _)) = &incumbent {
                if lb >= *ic {
                    continue;
                }
            }
            heap.push(HeapNode { lb, order, visited });
        }
    }
    if heap.is_empty() {
        proven = true;
    }
    let (cost, order, waypoints) =
        incumbent.ok_or(ExactError::CapBeforeIncumbent(node_cap))?;
    Ok(ExactResult {
        order,
        cost,
        waypoints,
        nodes: expanded,
        method: ExactMethod::LatticeBnB,
        proven,
    })
}

/// Classical Bellman-Held-Karp subset dynamic program on the matrix:
/// the optimal tour under static edge costs. Returns the canonical
/// orientation (`order[1] < order[n-1]`).
pub fn optimal_bounded_tour(c: &BoundedCostMatrix) -> Result<(f64, Vec<usize>), ExactError> {
    let n = c.n();
    if n < 3 {
        return Err(ExactError::TooSmall(n));
    }
    if n > DP_MAX {
        return Err(ExactError::TooLarge { n, max: DP_MAX });
    }
    let m = n - 1; // vertices 1..n mapped to bits 0..m
    let size = 1usize << m;
    let mut dp = vec![f64::INFINITY; size * m];
    let mut parent = vec![u8::MAX; size * m];
    for v in 0..m {
        dp[(1 << v) * m + v] = c.cost(0, v + 1);
    }
    for mask in 1usize..size {
        for last in 0..m {
            if mask >> last & 1 == 0 {
                continue;
            }
            let cur = dp[mask * m + last];
            if !cur.is_finite() {
                continue;
            }
            for nxt in 0..m {
                if mask >> nxt & 1 == 1 {
                    continue;
                }
                let nm = mask | (1 << nxt);
                let cand = cur + c.cost(last + 1, nxt + 1);
                if cand < dp[nm * m + nxt] {
                    dp[nm * m + nxt] = cand;
                    parent[nm * m + nxt] = last as u8;
                }
            }
        }
    }
    let fullmask = size - 1;
    let mut best = f64::INFINITY;
    let mut best_last = 0usize;
    for last in 0..m {
        let total = dp[fullmask * m + last] + c.cost(last + 1, 0);
        if total < best {
            best = total;
            best_last = last;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = fullmask;
    let mut last = best_last;
    while mask != 0 {
        order.push(last + 1);
        let p = parent[mask * m + last];
        mask &= !(1 << last);
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    order.push(0);
    order.reverse();
    if n > 3 && order[1] > order[n - 1] {
        order[1..].reverse();
    }
    Ok((best, order))
}

/// Certified lower bounds on the optimum, keyed by scheme name:
/// `MST-B`, `MOT-B` (best root, zero penalties), `WOT-B` (Held-Karp ascent
/// from the best MOT root) and, when the DP is tractable, `BoundedTour`.
pub fn lower_bound_suite(
    inst: &Instance,
    c: &BoundedCostMatrix,
) -> Result<std::collections::BTreeMap<String, f64>, ExactError> {
    let n = inst.n_k();
    let cons = EdgeConstraintSet::new();
    let mut out = std::collections::BTreeMap::new();
    out.insert("MST-B".to_string(), mst_kruskal(c, &cons, &[])?.1);
    let zeros = Penalties::zeros(n);
    let mut best_root = 0usize;
    let mut mot = f64::NEG_INFINITY;
    for root in 0..n {
        let b = min_one_tree(c, root, &zeros, &cons)?.bound;
        if b > mot {
            mot = b;
            best_root = root;
        }
    }
    out.insert("MOT-B".to_string(), mot);
    // Ascent from the strongest root; its iterate 0 is that MOT, so
    // WOT-B >= MOT-B by construction.
    let ascent = held_karp_ascent(c, best_root, &cons, None, &AscentConfig::default())?;
    out.insert("WOT-B".to_string(), ascent.best_bound);
    if (3..=ENUMERATION_MAX).contains(&n) {
        out.insert("BoundedTour".to_string(), optimal_bounded_tour(c)?.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorial::tour_matrix_cost;
    use crate::geometry::Polytope;
    use crate::instance;
    use approx::assert_relative_eq;

    fn point_instance(pts: &[Vec<f64>]) -> Instance {
        Instance::from_sets(pts.iter().map(|p| Polytope::singleton(p).unwrap()).collect())
    }

    #[test]
    fn order_generation_counts_and_canonical_form() {
        assert_eq!(tour_orders(3).len(), 1);
        assert_eq!(tour_orders(4).len(), 3);
        assert_eq!(tour_orders(7).len(), 360);
        for o in tour_orders(6) {
            assert_eq!(o[0], 0);
            assert!(o[1] < o[5]);
        }
    }

    #[test]
    fn enumeration_triangle() {
        let inst = point_instance(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = solve_enumeration(&inst, 1e-9).unwrap();
        assert_relative_eq!(r.cost, 2.0 + 2f64.sqrt(), epsilon = 1e-9);
        assert_eq!(r.order, vec![0, 1, 2]);
        assert_eq!(r.nodes, 1);
        assert!(r.proven);
    }

    #[test]
    fn enumeration_square_corners() {
        let inst = point_instance(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let r = solve_enumeration(&inst, 1e-9).unwrap();
        assert_relative_eq!(r.cost, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn enumeration_guards() {
        let inst = instance::generate(10, 2, 1).unwrap();
        assert!(matches!(
            solve_enumeration(&inst, 1e-7),
            Err(ExactError::TooLarge { n: 10, max: ENUMERATION_MAX })
        ));
    }

    #[test]
    fn lattice_matches_enumeration_small() {
        for seed in 0..8u64 {
            let inst = instance::generate(4, 2, 100 + seed).unwrap();
            let c = instance::bounded_matrix(&inst, 1e-8).unwrap();
            let a = solve_enumeration(&inst, 1e-7).unwrap();
            let b = solve_lattice(&inst, &c, 1e-7, 1_000_000).unwrap();
            assert!(b.proven);
            assert!(
                (a.cost - b.cost).abs() <= 1e-6 * a.cost.max(1.0),
                "seed {seed}: enum {} vs lattice {}",
                a.cost,
                b.cost
            );
        }
    }

    #[test]
    fn lattice_on_points_matches_classical_dp() {
        let mut rng = crate::rng::SplitMix64::new(55);
        for _ in 0..6 {
            let pts: Vec<Vec<f64>> = (0..6)
                .map(|_| vec![rng.range_f64(0.0, 6.0), rng.range_f64(0.0, 6.0)])
                .collect();
            let inst = point_instance(&pts);
            let c = instance::bounded_matrix(&inst, 1e-9).unwrap();
            let (dp_cost, dp_order) = optimal_bounded_tour(&c).unwrap();
            let lat = solve_lattice(&inst, &c, 1e-8, 1_000_000).unwrap();
            assert!(lat.proven);
            assert!((lat.cost - dp_cost).abs() < 1e-6, "{} vs {dp_cost}", lat.cost);
            assert_eq!(lat.order, dp_order);
            let en = solve_enumeration(&inst, 1e-8).unwrap();
            assert!((en.cost - dp_cost).abs() < 1e-6);
        }
    }

    #[test]
    fn lattice_admissibility_and_state_count() {
        let inst = instance::generate(6, 2, 77).unwrap();
        let c = instance::bounded_matrix(&inst, 1e-8).unwrap();
        let (res, trace) = solve_lattice_traced(&inst, &c, 1e-7, 1_000_000).unwrap();
        assert!(res.proven);
        // Every expanded state's bound must not exceed the best completion
        // through that exact prefix (constrained enumeration oracle).
        for st in trace.iter().filter(|s| s.order.len() > 1) {
            let mut best = f64::INFINITY;
            for full in tour_orders(6) {
                let matches_prefix = |o: &[usize]| o.starts_with(&st.order);
                let mut rev: Vec<usize> = full.clone();
                rev[1..].reverse();
                if matches_prefix(&full) || matches_prefix(&rev) {
                    let cost = realize(&Topology::tour(&full).unwrap(), &inst.sets, 1e-8, None)
                        .unwrap()
                        .cost;
                    best = best.min(cost);
                }
            }
            if best.is_finite() {
                assert!(
                    st.lb <= best + 1e-6,
                    "inadmissible bound {} > completion {best} at {:?}",
                    st.lb,
                    st.order
                );
            }
        }
        // State-space ceiling: distinct (visited, last) pairs.
        let mut states: Vec<(u32, usize)> = trace
            .iter()
            .map(|s| (s.visited, *s.order.last().unwrap()))
            .collect();
        states.sort_unstable();
        states.dedup();
        let ceiling: usize = (1..=5).map(|k| k * binom(5, k)).sum::<usize>() + 1;
        assert!(states.len() <= ceiling, "{} states > {ceiling}", states.len());
    }

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (1..=k).fold(1, |acc, i| acc * (n - i + 1) / i)
    }

    #[test]
    fn dp_matches_permutation_brute_force() {
        let mut rng = crate::rng::SplitMix64::new(31);
        for _ in 0..10 {
            let pts: Vec<Vec<f64>> = (0..7)
                .map(|_| vec![rng.range_f64(0.0, 9.0), rng.range_f64(0.0, 9.0)])
                .collect();
            let c = BoundedCostMatrix::from_points(&pts);
            let (dp_cost, dp_order) = optimal_bounded_tour(&c).unwrap();
            let brute = tour_orders(7)
                .into_iter()
                .map(|o| tour_matrix_cost(&c, &o))
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(dp_cost, brute, epsilon = 1e-9);
            assert_relative_eq!(tour_matrix_cost(&c, &dp_order), dp_cost, epsilon = 1e-9);
        }
    }

    #[test]
    fn suite_on_square_corners() {
        let inst = point_instance(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let c = instance::bounded_matrix(&inst, 1e-9).unwrap();
        let suite = lower_bound_suite(&inst, &c).unwrap();
        assert_relative_eq!(suite["MST-B"], 3.0, epsilon = 1e-9);
        assert_relative_eq!(suite["MOT-B"], 4.0, epsilon = 1e-9);
        assert_relative_eq!(suite["WOT-B"], 4.0, epsilon = 1e-9);
        assert_relative_eq!(suite["BoundedTour"], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn suite_ordering_holds_on_random_instances() {
        for seed in 0..6u64 {
            let inst = instance::generate(6, 2, 500 + seed).unwrap();
            let c = instance::bounded_matrix(&inst, 1e-8).unwrap();
            let suite = lower_bound_suite(&inst, &c).unwrap();
            let opt = solve_enumeration(&inst, 1e-7).unwrap().cost;
            assert!(suite["MST-B"] <= suite["MOT-B"] + 1e-9);
            assert!(suite["MOT-B"] <= suite["WOT-B"] + 1e-9);
            assert!(suite["WOT-B"] <= suite["BoundedTour"] + 1e-9);
            assert!(suite["BoundedTour"] <= opt + 1e-6, "seed {seed}");
        }
    }
}
