//! Traveling salesman solvers over graphs of convex sets.
//!
//! Targets are polytopes in `R^d`; an edge between two targets costs the
//! Euclidean distance between freely chosen points inside them. The crate
//! provides:
//!
//! * [`geometry`] — polytope primitives: membership, projection, Chebyshev
//!   centers, and minimum set-to-set distance (the *bounded edge cost*);
//! * [`convex`] — the fixed-topology continuous optimizer that turns a
//!   discrete edge set into a *realized cost*;
//! * [`instance`] — random benchmark instances on an `n×n` grid plus the
//!   text serialization format and cost-matrix construction;
//! * [`combinatorial`] — constrained Kruskal MST, minimum 1-trees,
//!   Held-Karp subgradient ascent, greedy tours and 2-opt;
//! * [`bnb`] — the 1-tree branch-and-bound heuristic (bounded and convex
//!   incumbent variants);
//! * [`exact`] — exhaustive and lattice-search exact solvers plus the
//!   lower-bound suite used to certify heuristics;
//! * [`agcs`] — the augmented-graph construction that encodes the tour
//!   specification as a layered subset lattice.

pub mod agcs;
pub mod bnb;
pub mod combinatorial;
pub mod convex;
pub mod exact;
pub mod geometry;
pub mod instance;
pub mod rng;

mod linalg;

pub use geometry::{Point, Polytope};
pub use instance::{BoundedCostMatrix, Instance};
