//! Benchmark instances: seeded random generation on an `n×n` grid, the
//! versioned text serialization, and pairwise cost-matrix construction.
//!
//! Generation is bit-reproducible from the seed: it draws exclusively from
//! [`crate::rng::SplitMix64`] in a fixed order (grid cells by partial
//! Fisher-Yates, then per-set halfspaces), avoids libm in the sampling path,
//! and serializes floats in shortest round-trip form. The format grammar and
//! draw order are documented in `FORMATS.md`.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{GeometryError, Point, Polytope};
use crate::linalg::{dist, dot};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("need at least 3 target sets, got {0}")]
    TooFewSets(usize),
    #[error("generator supports dimensions 2 and 3, got {0}")]
    UnsupportedDim(usize),
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
    #[error("distance computation failed for pair ({i},{j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        source: GeometryError,
    },
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unsupported format header: {0:?}")]
    BadHeader(String),
    #[error("line {line}: polytope rejected: {source}")]
    BadSet {
        line: usize,
        source: GeometryError,
    },
}

/// A TSP-GCS problem: `n_k` bounded polytopes in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub d: usize,
    pub sets: Vec<Polytope>,
    pub seed: u64,
    /// Grid side length used at generation time (`n_k` for generated
    /// instances).
    pub grid: usize,
}

impl Instance {
    pub fn n_k(&self) -> usize {
        self.sets.len()
    }

    /// Hand-assembled instance (tests, fixtures). `grid` records nothing
    /// meaningful here and is set to the set count.
    pub fn from_sets(sets: Vec<Polytope>) -> Self {
        let d = sets.first().map_or(0, |s| s.dim());
        let grid = sets.len();
        Self { d, sets, seed: 0, grid }
    }
}

/// Cell width of the placement grid, in workspace units.
pub const CELL_WIDTH: f64 = 1.0;
/// Every generated set fits in a ball of this radius around its cell center.
pub const SET_RADIUS_CAP: f64 = 0.45;

/// Generate `n_k` random polytope targets placed on distinct cells of an
/// `n_k × n_k` unit grid. Deterministic in `seed`.
pub fn generate(n_k: usize, d: usize, seed: u64) -> Result<Instance, InstanceError> {
    if n_k < 3 {
        return Err(InstanceError::TooFewSets(n_k));
    }
    if !(2..=3).contains(&d) {
        return Err(InstanceError::UnsupportedDim(d));
    }
    let mut rng = SplitMix64::new(seed);
    let cells = rng.sample_distinct(n_k * n_k, n_k);
    let mut sets = Vec::with_capacity(n_k);
    for cell in cells {
        let col = cell % n_k;
        let row = cell / n_k;
        let mut center = vec![
            (col as f64 + 0.5) * CELL_WIDTH,
            (row as f64 + 0.5) * CELL_WIDTH,
        ];
        center.resize(d, 0.5 * CELL_WIDTH);
        sets.push(random_set(&mut rng, &center, d)?);
    }
    Ok(Instance { d, sets, seed, grid: n_k })
}

/// One random bounded polytope: the cell-centered bounding box (half-width
/// `0.45/sqrt(d)`, so the whole set stays inside the 0.45 ball) intersected
/// with 6-10 random halfspaces at offsets in `[0.15, 0.45]` from the center.
fn random_set(rng: &mut SplitMix64, center: &[f64], d: usize) -> Result<Polytope, InstanceError> {
    let half = SET_RADIUS_CAP * CELL_WIDTH / (d as f64).sqrt();
    let mut h = Vec::new();
    let mut g = Vec::new();
    for i in 0..d {
        let mut row = vec![0.0; d];
        row[i] = 1.0;
        h.extend_from_slice(&row);
        g.push(center[i] + half);
        row[i] = -1.0;
        h.extend_from_slice(&row);
        g.push(-(center[i] - half));
    }
    let extra = 6 + rng.below(5) as usize;
    for _ in 0..extra {
        let dir = rng.unit_vector(d);
        let off = rng.range_f64(0.15 * CELL_WIDTH, SET_RADIUS_CAP * CELL_WIDTH);
        g.push(dot(&dir, center) + off);
        h.extend(dir);
    }
    Ok(Polytope::from_halfspaces(h, g, d)?)
}

/// Symmetric matrix of pairwise costs with zero diagonal. The triangle
/// inequality is deliberately not assumed: set-to-set distances violate it
/// whenever one large set touches two mutually distant ones.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedCostMatrix {
    n: usize,
    costs: Vec<f64>,
    witnesses: Option<Vec<(Point, Point)>>,
}

impl BoundedCostMatrix {
    /// Build from a full row-major `n×n` buffer; enforces shape, symmetry
    /// and a zero diagonal.
    pub fn from_costs(n: usize, costs: Vec<f64>) -> Self {
        assert_eq!(costs.len(), n * n, "matrix shape");
        for i in 0..n {
            assert_eq!(costs[i * n + i], 0.0, "nonzero diagonal at {i}");
            for j in 0..i {
                assert_eq!(costs[i * n + j], costs[j * n + i], "asymmetry at ({i},{j})");
            }
        }
        Self { n, costs, witnesses: None }
    }

    /// Distance matrix of fixed points (the degenerate-instance case).
    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut costs = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(&points[i], &points[j]);
                costs[i * n + j] = d;
                costs[j * n + i] = d;
            }
        }
        Self { n, costs, witnesses: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.n + j]
    }

    pub fn witnesses(&self, i: usize, j: usize) -> Option<(&Point, &Point)> {
        let w = self.witnesses.as_ref()?;
        if i == j {
            return None;
        }
        let (a, b) = (i.min(j), i.max(j));
        let idx = pair_index(self.n, a, b);
        let (pa, pb) = &w[idx];
        Some(if i < j { (pa, pb) } else { (pb, pa) })
    }

    /// `i,j,cost` rows for the upper triangle.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,cost\n");
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push_str(&format!("{i},{j},{}\n", self.cost(i, j)));
            }
        }
        out
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Minimum set-to-set distance for every pair (the bounded edge costs).
/// Pairs are independent and evaluated in parallel; each entry is written
/// exactly once before the matrix is returned.
pub fn bounded_matrix(inst: &Instance, tol: f64) -> Result<BoundedCostMatrix, InstanceError> {
    let n = inst.n_k();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let solved: Vec<(f64, Point, Point)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            inst.sets[i]
                .min_distance(&inst.sets[j], tol)
                .map(|md| (md.cost, md.witness_a, md.witness_b))
                .map_err(|source| InstanceError::Pair { i, j, source })
        })
        .collect::<Result<_, _>>()?;
    let mut costs = vec![0.0; n * n];
    let mut witnesses = Vec::with_capacity(pairs.len());
    for (&(i, j), (c, wa, wb)) in pairs.iter().zip(solved) {
        costs[i * n + j] = c;
        costs[j * n + i] = c;
        witnesses.push((wa, wb));
    }
    Ok(BoundedCostMatrix { n, costs, witnesses: Some(witnesses) })
}

/// Distances between Chebyshev centers: a center-based surrogate that
/// dominates the bounded costs entrywise.
pub fn chebyshev_matrix(inst: &Instance) -> BoundedCostMatrix {
    let n = inst.n_k();
    let centers: Vec<Point> = inst.sets.iter().map(|s| s.chebyshev_center().0).collect();
    let mut costs = vec![0.0; n * n];
    let mut witnesses = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(centers[i].as_slice(), centers[j].as_slice());
            costs[i * n + j] = d;
            costs[j * n + i] = d;
            witnesses.push((centers[i].clone(), centers[j].clone()));
        }
    }
    BoundedCostMatrix { n, costs, witnesses: Some(witnesses) }
}

const FORMAT_HEADER: &str = "gcs-tsp-instance v1";

/// Serialize to the versioned text format. Floats use Rust's shortest
/// round-trip formatting, so `parse(serialize(x)) == x` bit-exactly.
pub fn serialize(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    out.push_str(&format!("dim {}\n", inst.d));
    out.push_str(&format!("sets {}\n", inst.n_k()));
    out.push_str(&format!("seed {}\n", inst.seed));
    out.push_str(&format!("grid {}\n", inst.grid));
    for (id, set) in inst.sets.iter().enumerate() {
        out.push_str(&format!("set {id} {}\n", set.rows()));
        for r in 0..set.rows() {
            let (row, g) = set.halfspace(r);
            for v in row {
                out.push_str(&format!("{v} "));
            }
            out.push_str(&format!("{g}\n"));
        }
    }
    out.push_str("end\n");
    out
}

pub fn parse(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String), ParseError> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.trim().to_string()))
            .ok_or_else(|| ParseError::Malformed { line: 0, msg: format!("missing {expect}") })
    };
    let (_, header) = next("header")?;
    if header != FORMAT_HEADER {
        return Err(ParseError::BadHeader(header));
    }
    let field = |input: (usize, String), key: &str| -> Result<u64, ParseError> {
        let (line, l) = input;
        let rest = l
            .strip_prefix(key)
            .ok_or_else(|| ParseError::Malformed { line, msg: format!("expected `{key} <value>`") })?;
        rest.trim()
            .parse()
            .map_err(|e| ParseError::Malformed { line, msg: format!("bad {key}: {e}") })
    };
    let d = field(next("dim")?, "dim")? as usize;
    let n = field(next("sets")?, "sets")? as usize;
    let seed = field(next("seed")?, "seed")?;
    let grid = field(next("grid")?, "grid")? as usize;
    let mut sets = Vec::with_capacity(n);
    for id in 0..n {
        let (line, l) = next("set header")?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "set" {
            return Err(ParseError::Malformed { line, msg: "expected `set <id> <rows>`".into() });
        }
        let got_id: usize = parts[1]
            .parse()
            .map_err(|e| ParseError::Malformed { line, msg: format!("bad set id: {e}") })?;
        if got_id != id {
            return Err(ParseError::Malformed { line, msg: format!("expected set {id}, got {got_id}") });
        }
        let rows: usize = parts[2]
            .parse()
            .map_err(|e| ParseError::Malformed { line, msg: format!("bad row count: {e}") })?;
        let mut h = Vec::with_capacity(rows * d);
        let mut g = Vec::with_capacity(rows);
        let mut set_line = line;
        for _ in 0..rows {
            let (line, l) = next("halfspace row")?;
            set_line = line;
            let vals: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|e| ParseError::Malformed { line, msg: format!("bad float: {e}") })?;
            if vals.len() != d + 1 {
                return Err(ParseError::Malformed {
                    line,
                    msg: format!("expected {} values, got {}", d + 1, vals.len()),
                });
            }
            h.extend_from_slice(&vals[..d]);
            g.push(vals[d]);
        }
        let set = Polytope::from_halfspaces(h, g, d)
            .map_err(|source| ParseError::BadSet { line: set_line, source })?;
        sets.push(set);
    }
    let (line, tail) = next("end")?;
    if tail != "end" {
        return Err(ParseError::Malformed { line, msg: "expected `end`".into() });
    }
    Ok(Instance { d, sets, seed, grid })
}
