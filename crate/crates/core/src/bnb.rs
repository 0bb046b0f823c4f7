//! Branch-and-bound heuristic over forced/forbidden edge sets with 1-tree
//! bounds.
//!
//! The upper bound starts from a greedy tour improved by 2-opt. Nodes carry
//! an edge constraint set and the parent's final penalties; popping a node
//! re-runs a short Held-Karp ascent warm-started from those penalties,
//! prunes against the incumbent, accepts 1-trees that are tours as new
//! incumbents, and otherwise branches on the most expensive tree edge at an
//! over-covered vertex — one child forbids it, the other forces it.
//!
//! Two incumbent disciplines: `Bounded` (BBB) compares candidate tours by
//! matrix cost and realizes only the final tour; `Convex` (CBB) realizes
//! each candidate and compares realized costs, stopping after a stall
//! budget of non-improving expansions. Draining the queue proves matrix
//! optimality for BBB; for CBB it proves the incumbent optimal for the
//! continuous problem outright, since every surviving tour's realized cost
//! is at least its bounded cost, which the queue bounded below the
//! incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::combinatorial::{
    greedy_tour, held_karp_ascent, tour_matrix_cost, two_opt, AscentConfig, ComboError,
    EdgeConstraintSet, Penalties,
};
use crate::convex::{realize, ConvexError, Topology};
use crate::geometry::Polytope;
use crate::instance::BoundedCostMatrix;

#[derive(Debug, Error)]
pub enum BnbError {
    #[error("need at least 3 vertices, got {0}")]
    TooFew(usize),
    #[error("convex mode needs the polytope sets")]
    NeedSets,
    #[error("lower bound must be positive, got {0}")]
    NonPositiveBound(f64),
    #[error(transparent)]
    Combo(#[from] ComboError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}

/// Incumbent comparison discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnbMode {
    /// BBB: candidates compared by bounded (matrix) cost.
    Bounded,
    /// CBB: candidates realized and compared by continuous cost.
    Convex,
}

#[derive(Clone, Debug)]
pub struct BnbConfig {
    pub mode: BnbMode,
    /// Node expansion budget (`MAX`).
    pub max_nodes: usize,
    /// Ascent schedule for the root evaluation.
    pub root_ascent: AscentConfig,
    /// Shorter ascent for every other node, warm-started from the parent.
    pub node_ascent: AscentConfig,
    /// Root vertex of every 1-tree.
    pub root_vertex: usize,
    /// Starting vertex of the greedy upper-bound tour.
    pub greedy_start: usize,
    /// Convex mode: stop after this many non-improving expansions.
    pub stall_limit: usize,
    /// Tolerance handed to the convex realizations.
    pub tol: f64,
}

impl Default for BnbConfig {
    fn default() -> Self {
        let root = AscentConfig::default();
        Self {
            mode: BnbMode::Bounded,
            max_nodes: 10_000,
            node_ascent: AscentConfig { max_iter: 100, t0: root.t0 / 4.0, decay: root.decay },
            root_ascent: root,
            root_vertex: 0,
            greedy_start: 0,
            stall_limit: 15,
            tol: 1e-7,
        }
    }
}

/// Search-tree node state (exposed through traces).
#[derive(Clone, Debug)]
pub struct BnbNode {
    pub lower_bound: f64,
    pub constraints: EdgeConstraintSet,
    pub pi: Penalties,
    pub depth: usize,
}

/// What happened at one expanded node.
#[derive(Clone, Debug)]
pub struct NodeTrace {
    pub node: BnbNode,
    /// Bound from this node's own ascent.
    pub recomputed: f64,
    /// `max(stored, recomputed)`; what children inherit.
    pub effective: f64,
    pub pruned: bool,
    pub became_incumbent: bool,
    /// Incumbent comparison cost after processing this node.
    pub incumbent_after: f64,
}

#[derive(Clone, Debug)]
pub struct HeuristicResult {
    pub tour: Topology,
    pub bounded_cost: f64,
    pub realized_cost: f64,
    pub nodes_expanded: usize,
    pub proved_optimal_on_matrix: bool,
}

struct HeapEntry {
    stored: f64,
    seq: u64,
    node: BnbNode,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.stored == other.stored && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.stored.total_cmp(&self.stored).then(other.seq.cmp(&self.seq))
    }
}

pub fn branch_and_bound(
    c: &BoundedCostMatrix,
    sets: Option<&[Polytope]>,
    cfg: &BnbConfig,
) -> Result<HeuristicResult, BnbError> {
    run(c, sets, cfg, None)
}

/// As [`branch_and_bound`], recording a [`NodeTrace`] per expansion.
pub fn branch_and_bound_traced(
    c: &BoundedCostMatrix,
    sets: Option<&[Polytope]>,
    cfg: &BnbConfig,
) -> Result<(HeuristicResult, Vec<NodeTrace>), BnbError> {
    let mut trace = Vec::new();
    let res = run(c, sets, cfg, Some(&mut trace))?;
    Ok((res, trace))
}

fn run(
    c: &BoundedCostMatrix,
    sets: Option<&[Polytope]>,
    cfg: &BnbConfig,
    mut trace: Option<&mut Vec<NodeTrace>>,
) -> Result<HeuristicResult, BnbError> {
    let n = c.n();
    if n < 3 {
        return Err(BnbError::TooFew(n));
    }
    let convex_mode = cfg.mode == BnbMode::Convex;
    if convex_mode && sets.is_none() {
        return Err(BnbError::NeedSets);
    }

    // Upper bound: greedy tour improved by matrix 2-opt.
    let initial = two_opt(&greedy_tour(c, cfg.greedy_start)?, c, None)?;
    let mut incumbent_tour = initial;
    let mut incumbent_bounded =
        tour_matrix_cost(c, &incumbent_tour.tour_order().expect("valid tour"));
    let mut incumbent_realized = if convex_mode {
        Some(realize(&incumbent_tour, sets.unwrap(), cfg.tol, None)?.cost)
    } else {
        None
    };
    // Pruning compares bounded-cost lower bounds against this.
    let mut ub = if convex_mode { incumbent_realized.unwrap() } else { incumbent_bounded };

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(HeapEntry {
        stored: f64::NEG_INFINITY,
        seq,
        node: BnbNode {
            lower_bound: f64::NEG_INFINITY,
            constraints: EdgeConstraintSet::new(),
            pi: Penalties::zeros(n),
            depth: 0,
        },
    });

    let mut nodes_expanded = 0usize;
    let mut stalled = 0usize;
    let mut aborted = false;

    while let Some(entry) = heap.pop() {
        if entry.stored >= ub {
            // Stored keys only grow down the tree, so the whole frontier
            // is bounded off; the search is complete.
            break;
        }
        if nodes_expanded >= cfg.max_nodes {
            aborted = true;
            break;
        }
        if convex_mode && stalled > cfg.stall_limit {
            aborted = true;
            break;
        }
        nodes_expanded += 1;

        let ascent_cfg = if entry.node.depth == 0 { &cfg.root_ascent } else { &cfg.node_ascent };
        let pi0 = (entry.node.depth > 0).then_some(&entry.node.pi);
        let ascent = match held_karp_ascent(c, cfg.root_vertex, &entry.node.constraints, pi0, ascent_cfg) {
            Ok(a) => a,
            Err(e) if e.is_infeasibility() => continue,
            Err(e) => return Err(e.into()),
        };
        let recomputed = ascent.best_bound;
        let effective = recomputed.max(entry.stored);

        let mut became_incumbent = false;
        let pruned = effective >= ub;
        if !pruned {
            if ascent.best_tree.is_tour() {
                // The bound of a degree-2 1-tree is exactly its matrix cost.
                let cand_bounded = ascent.best_tree.bound;
                if convex_mode {
                    let cand_real =
                        realize(&ascent.best_tree.topology, sets.unwrap(), cfg.tol, None)?.cost;
                    if cand_real < incumbent_realized.unwrap() - 1e-12 {
                        incumbent_tour = ascent.best_tree.topology.clone();
                        incumbent_bounded = cand_bounded;
                        incumbent_realized = Some(cand_real);
                        ub = cand_real;
                        became_incumbent = true;
                    }
                } else if cand_bounded < incumbent_bounded - 1e-12 {
                    incumbent_tour = ascent.best_tree.topology.clone();
                    incumbent_bounded = cand_bounded;
                    ub = cand_bounded;
                    became_incumbent = true;
                }
            } else {
                // Branch on the costliest tree edge at an over-covered vertex.
                let (u, v) = branch_edge(c, &ascent.best_tree.topology, &ascent.best_tree.degrees, &entry.node.constraints);
                for forbid in [true, false] {
                    let mut cons = entry.node.constraints.clone();
                    let feasible = if forbid { cons.forbid(u, v) } else { cons.force(u, v) };
                    if feasible.is_err() {
                        continue;
                    }
                    seq += 1;
                    heap.push(HeapEntry {
                        stored: effective,
                        seq,
                        node: BnbNode {
                            lower_bound: effective,
                            constraints: cons,
                            pi: ascent.last_pi.clone(),
                            depth: entry.node.depth + 1,
                        },
                    });
                }
            }
        }
        if convex_mode {
            if became_incumbent {
                stalled = 0;
            } else {
                stalled += 1;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(NodeTrace {
                node: BnbNode { lower_bound: entry.stored, ..entry.node.clone() },
                recomputed,
                effective,
                pruned,
                became_incumbent,
                incumbent_after: ub,
            });
        }
    }

    let proved_optimal_on_matrix = !aborted;
    let realized_cost = match (incumbent_realized, sets) {
        (Some(r), _) => r,
        (None, Some(s)) => realize(&incumbent_tour, s, cfg.tol, None)?.cost,
        // Matrix-only runs degenerate to the bounded cost.
        (None, None) => incumbent_bounded,
    };
    Ok(HeuristicResult {
        tour: incumbent_tour,
        bounded_cost: incumbent_bounded,
        realized_cost,
        nodes_expanded,
        proved_optimal_on_matrix,
    })
}

/// Highest-degree vertex above 2 (lowest index on ties), then its costliest
/// incident tree edge by bounded cost (lexicographic on ties), skipping
/// forced edges.
fn branch_edge(
    c: &BoundedCostMatrix,
    tree: &Topology,
    degrees: &[usize],
    cons: &EdgeConstraintSet,
) -> (usize, usize) {
    let vertex = degrees
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d > 2)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(v, _)| v)
        .expect("branching requires an over-covered vertex");
    let mut best: Option<((usize, usize), f64)> = None;
    for &(a, b) in tree.edges() {
        if a != vertex && b != vertex {
            continue;
        }
        if cons.is_forced(a, b) {
            continue;
        }
        let cost = c.cost(a, b);
        let better = match best {
            None => true,
            Some((be, bc)) => cost > bc || (cost == bc && (a, b) < be),
        };
        if better {
            best = Some(((a, b), cost));
        }
    }
    best.expect("an unforced edge exists at a degree>2 vertex").0
}

/// Optimality-gap certificate: `(realized - lower) / lower`, an upper bound
/// on the true relative gap when `lower` bounds the optimum from below.
pub fn certify_gap(result: &HeuristicResult, lower_bound: f64) -> Result<f64, BnbError> {
    if lower_bound <= 0.0 {
        return Err(BnbError::NonPositiveBound(lower_bound));
    }
    Ok((result.realized_cost - lower_bound) / lower_bound)
}
