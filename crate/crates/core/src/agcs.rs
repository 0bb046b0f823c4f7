//! Augmented-graph construction that encodes the tour specification as a
//! shortest-path problem: one copy of the complete target graph per visited
//! subset containing target 0, layered by subset size, with a directed
//! inter-layer edge into each subgraph for the target whose visit it
//! records. Paths from the source copy of target 0 to its copy in the full
//! subset correspond exactly to visit orders.
//!
//! The lattice here is the semantic reference and visualization object; the
//! executable counterpart is the state search in [`crate::exact`].

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgcsError {
    #[error("target count {0} outside the supported range 2..=20")]
    SizeGuard(usize),
    #[error("path step {step}: edge ({from}, {to}) is not in the graph")]
    NotAnEdge { step: usize, from: u32, to: u32 },
    #[error("path must start at the source vertex {expected}, got {got}")]
    BadStart { expected: u32, got: u32 },
    #[error("path must end at the sink vertex {expected}, got {got}")]
    BadEnd { expected: u32, got: u32 },
    #[error("path is empty")]
    EmptyPath,
}

/// One vertex of the augmented graph: a copy of `target` inside the
/// subgraph of visited subset `subset` (bitmask over targets, bit 0 set).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgcsVertex {
    pub target: usize,
    pub subset: u32,
}

/// The augmented graph. Vertex ids are dense (`subgraph_index * n + target`)
/// with subgraphs ordered by (popcount, subset value), so construction is
/// deterministic.
#[derive(Clone, Debug)]
pub struct AugmentedGraph {
    n: usize,
    subsets: Vec<u32>,
    subset_index: HashMap<u32, usize>,
    vertices: Vec<AgcsVertex>,
    intra_edges: Vec<(u32, u32)>,
    inter_edges: Vec<(u32, u32)>,
    source: u32,
    sink: u32,
}

/// Closed-form size of the construction for `n` targets:
/// `(subgraphs, vertices, edges)` = `(2^(n-1), n·2^(n-1), (n-1)(2n+1)·2^(n-2))`.
pub fn count_formulas(n: usize) -> (u128, u128, u128) {
    assert!(n >= 2, "need at least two targets");
    let p = 1u128 << (n - 1);
    let subgraphs = p;
    let vertices = n as u128 * p;
    let edges = (n as u128 - 1) * (2 * n as u128 + 1) * (p / 2);
    (subgraphs, vertices, edges)
}

/// Build the augmented graph for `n` targets (`2 <= n <= 20`; the edge set
/// grows as `n^2 2^n`).
pub fn build(n: usize) -> Result<AugmentedGraph, AgcsError> {
    if !(2..=20).contains(&n) {
        return Err(AgcsError::SizeGuard(n));
    }
    let mut subsets: Vec<u32> = (0u32..1 << n).filter(|s| s & 1 == 1).collect();
    subsets.sort_unstable_by_key(|&s| (s.count_ones(), s));
    let subset_index: HashMap<u32, usize> =
        subsets.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut vertices = Vec::with_capacity(subsets.len() * n);
    for &s in &subsets {
        for target in 0..n {
            vertices.push(AgcsVertex { target, subset: s });
        }
    }
    let vid = |sub_idx: usize, target: usize| (sub_idx * n + target) as u32;

    let mut intra_edges = Vec::new();
    let mut inter_edges = Vec::new();
    for (si, &s) in subsets.iter().enumerate() {
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    intra_edges.push((vid(si, u), vid(si, v)));
                }
            }
        }
        if s.count_ones() >= 2 {
            for v in 1..n {
                if s >> v & 1 == 0 {
                    continue;
                }
                let parent = s & !(1 << v);
                let pi = subset_index[&parent];
                inter_edges.push((vid(pi, v), vid(si, v)));
            }
        }
    }
    let full = subsets[subsets.len() - 1];
    debug_assert_eq!(full.count_ones() as usize, n);
    let source = vid(0, 0);
    let sink = vid(subsets.len() - 1, 0);
    Ok(AugmentedGraph {
        n,
        subsets,
        subset_index,
        vertices,
        intra_edges,
        inter_edges,
        source,
        sink,
    })
}

impl AugmentedGraph {
    pub fn n_targets(&self) -> usize {
        self.n
    }

    pub fn subgraph_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.intra_edges.len() + self.inter_edges.len()
    }

    pub fn source(&self) -> u32 {
        self.source
    }

    pub fn sink(&self) -> u32 {
        self.sink
    }

    pub fn vertex(&self, id: u32) -> AgcsVertex {
        self.vertices[id as usize]
    }

    pub fn subsets(&self) -> &[u32] {
        &self.subsets
    }

    pub fn intra_edges(&self) -> &[(u32, u32)] {
        &self.intra_edges
    }

    pub fn inter_edges(&self) -> &[(u32, u32)] {
        &self.inter_edges
    }

    /// Vertex id of `target`'s copy in `subset`.
    pub fn id_of(&self, target: usize, subset: u32) -> Option<u32> {
        let si = *self.subset_index.get(&subset)?;
        (target < self.n).then(|| (si * self.n + target) as u32)
    }

    pub fn has_edge(&self, from: u32, to: u32) -> bool {
        let a = self.vertex(from);
        let b = self.vertex(to);
        if a.subset == b.subset {
            a.target != b.target
        } else {
            // Inter-layer: same target, child subset adds exactly it.
            a.target == b.target
                && b.subset & !a.subset == 1 << a.target
                && a.target != 0
                && b.subset >> a.target & 1 == 1
        }
    }

    /// Extract the target visit order from a source-to-sink path: the
    /// sequence of targets at inter-layer crossings, prefixed by 0.
    pub fn path_to_tour(&self, path: &[u32]) -> Result<Vec<usize>, AgcsError> {
        let first = *path.first().ok_or(AgcsError::EmptyPath)?;
        if first != self.source {
            return Err(AgcsError::BadStart { expected: self.source, got: first });
        }
        let last = *path.last().expect("nonempty");
        if last != self.sink {
            return Err(AgcsError::BadEnd { expected: self.sink, got: last });
        }
        let mut order = vec![0usize];
        for (step, w) in path.windows(2).enumerate() {
            let (from, to) = (w[0], w[1]);
            if !self.has_edge(from, to) {
                return Err(AgcsError::NotAnEdge { step, from, to });
            }
            let (a, b) = (self.vertex(from), self.vertex(to));
            if a.subset != b.subset {
                order.push(a.target);
            }
        }
        debug_assert_eq!(order.len(), self.n, "one crossing per non-initial target");
        Ok(order)
    }

    /// Deterministic DOT text: one cluster per subset, layered left to
    /// right by subset size.
    pub fn export_dot(&self) -> String {
        let mut out = String::new();
        out.push_str("digraph agcs {\n  rankdir=LR;\n");
        for (si, &s) in self.subsets.iter().enumerate() {
            out.push_str(&format!(
                "  subgraph cluster_{si} {{\n    label=\"{}\";\n",
                subset_label(s, self.n)
            ));
            for t in 0..self.n {
                let id = (si * self.n + t) as u32;
                let mut attrs = format!("label=\"K{t}{}\"", subset_label(s, self.n));
                if id == self.source {
                    attrs.push_str(", role=\"source\"");
                }
                if id == self.sink {
                    // The tour closes here: this copy shares its point with
                    // the source copy of target 0.
                    attrs.push_str(", role=\"sink\", closes=\"source\"");
                }
                out.push_str(&format!("    v{id} [{attrs}];\n"));
            }
            out.push_str("  }\n");
        }
        for &(a, b) in &self.intra_edges {
            out.push_str(&format!("  v{a} -> v{b};\n"));
        }
        for &(a, b) in &self.inter_edges {
            out.push_str(&format!("  v{a} -> v{b} [style=bold];\n"));
        }
        out.push_str("}\n");
        out
    }

    /// Deterministic JSON mirror of the structure (fixed key order).
    pub fn export_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"targets\": {},\n", self.n));
        out.push_str(&format!("  \"subgraphs\": {},\n", self.subgraph_count()));
        out.push_str(&format!("  \"source\": {},\n", self.source));
        out.push_str(&format!("  \"sink\": {},\n", self.sink));
        out.push_str("  \"vertices\": [\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let sep = if i + 1 == self.vertices.len() { "" } else { "," };
            out.push_str(&format!(
                "    {{\"id\": {i}, \"target\": {}, \"subset\": {}}}{sep}\n",
                v.target, v.subset
            ));
        }
        out.push_str("  ],\n");
        let emit = |edges: &[(u32, u32)], out: &mut String| {
            for (i, &(a, b)) in edges.iter().enumerate() {
                let sep = if i + 1 == edges.len() { "" } else { "," };
                out.push_str(&format!("    [{a}, {b}]{sep}\n"));
            }
        };
        out.push_str("  \"intra_edges\": [\n");
        emit(&self.intra_edges, &mut out);
        out.push_str("  ],\n");
        out.push_str("  \"inter_edges\": [\n");
        emit(&self.inter_edges, &mut out);
        out.push_str("  ]\n}\n");
        out
    }
}

fn subset_label(s: u32, n: usize) -> String {
    let members: Vec<String> = (0..n).filter(|&t| s >> t & 1 == 1).map(|t| t.to_string()).collect();
    format!("{{{}}}", members.join(","))
}
