//! Polytope primitives: membership, projection, Chebyshev centers and the
//! minimum distance between two polytopes (the bounded edge cost).
//!
//! All sets are `{x : Hx <= g}` in H-representation. Projections are solved
//! by Hildreth's dual coordinate ascent followed by an active-set polish
//! that solves the KKT equality system exactly; set-to-set distances run
//! alternating projections between the two sets with a closest-pair polish.
//! Both are dependency-free and fast at the row counts used here (a dozen
//! halfspaces in 2-3 dimensions).

use std::sync::OnceLock;
use thiserror::Error;

use crate::linalg::{axpy, dist, dot, norm, solve_in_place};

/// Absolute default tolerance, in workspace units.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid polytope data: {0}")]
    InvalidData(String),
    #[error("polytope is empty (no feasible point within tolerance)")]
    Empty,
    #[error("polytope is unbounded along a coordinate axis")]
    Unbounded,
    #[error("iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    Numerical {
        residual: f64,
        iterations: usize,
        /// Best iterate seen, for diagnostics.
        best: Vec<f64>,
    },
}

/// A point in workspace coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// Result of a set-to-set distance query.
#[derive(Clone, Debug)]
pub struct MinDistance {
    pub cost: f64,
    pub witness_a: Point,
    pub witness_b: Point,
    pub iterations: usize,
}

/// Bounded nonempty polytope `{x : Hx <= g}` in `R^d`.
///
/// Construction rejects empty and unbounded input, so every constructed
/// value supports projection and distance queries. Values are immutable;
/// all operations are pure and safe to call concurrently.
#[derive(Debug)]
pub struct Polytope {
    /// Row-major `m x d`.
    h: Vec<f64>,
    g: Vec<f64>,
    d: usize,
    m: usize,
    /// Squared and plain row norms, precomputed.
    rn2: Vec<f64>,
    rn: Vec<f64>,
    cheb: OnceLock<(Vec<f64>, f64)>,
}

impl Clone for Polytope {
    fn clone(&self) -> Self {
        Self {
            h: self.h.clone(),
            g: self.g.clone(),
            d: self.d,
            m: self.m,
            rn2: self.rn2.clone(),
            rn: self.rn.clone(),
            cheb: self.cheb.clone(),
        }
    }
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.h == other.h && self.g == other.g
    }
}

impl Polytope {
    /// Build from row-major halfspace data, validating that the set is
    /// nonempty and bounded.
    pub fn from_halfspaces(h: Vec<f64>, g: Vec<f64>, d: usize) -> Result<Self, GeometryError> {
        if d == 0 {
            return Err(GeometryError::InvalidData("dimension must be positive".into()));
        }
        let m = g.len();
        if h.len() != m * d {
            return Err(GeometryError::InvalidData(format!(
                "H has {} entries, expected {} ({} rows x {} cols)",
                h.len(),
                m * d,
                m,
                d
            )));
        }
        if m < d + 1 {
            return Err(GeometryError::InvalidData(format!(
                "{m} rows cannot bound a set in R^{d} (need at least {})",
                d + 1
            )));
        }
        if h.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidData("non-finite entry".into()));
        }
        let mut rn2 = Vec::with_capacity(m);
        let mut rn = Vec::with_capacity(m);
        for i in 0..m {
            let row = &h[i * d..(i + 1) * d];
            let n2 = dot(row, row);
            if n2 < 1e-24 {
                return Err(GeometryError::InvalidData(format!("row {i} is zero")));
            }
            rn2.push(n2);
            rn.push(n2.sqrt());
        }
        let poly = Self {
            h,
            g,
            d,
            m,
            rn2,
            rn,
            cheb: OnceLock::new(),
        };
        if !poly.is_bounded_all_axes() {
            return Err(GeometryError::Unbounded);
        }
        // Nonemptiness: the origin must project to a feasible point. The
        // full projection path (escalating sweeps plus the active-set
        // polish) is used so sharp wedge corners don't stall into a false
        // emptiness verdict.
        let mut x = vec![0.0; d];
        let mut lambda = vec![0.0; m];
        let mut scratch = ProjScratch::default();
        let probe = vec![0.0; d];
        if poly
            .project_warm(&probe, &mut x, &mut lambda, 1e-6 * poly.scale(), &mut scratch)
            .is_err()
        {
            return Err(GeometryError::Empty);
        }
        Ok(poly)
    }

    /// Axis-aligned box `lo <= x <= hi`. Zero-width coordinates are allowed,
    /// which is how degenerate (point) targets are expressed.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        let d = lo.len();
        if hi.len() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, got: hi.len() });
        }
        let mut h = Vec::with_capacity(2 * d * d);
        let mut g = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            h.extend_from_slice(&row);
            g.push(hi[i]);
            row[i] = -1.0;
            h.extend_from_slice(&row);
            g.push(-lo[i]);
        }
        Self::from_halfspaces(h, g, d)
    }

    /// Degenerate polytope containing exactly one point.
    pub fn singleton(p: &[f64]) -> Result<Self, GeometryError> {
        Self::from_bounds(p, p)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn halfspace(&self, i: usize) -> (&[f64], f64) {
        (&self.h[i * self.d..(i + 1) * self.d], self.g[i])
    }

    /// Magnitude used to scale absolute tolerances.
    fn scale(&self) -> f64 {
        let off = self
            .g
            .iter()
            .zip(&self.rn)
            .map(|(gi, ni)| (gi / ni).abs())
            .fold(0.0f64, f64::max);
        1.0 + off
    }

    fn raw(&self) -> RawPoly<'_> {
        RawPoly {
            h: &self.h,
            g: &self.g,
            rn2: &self.rn2,
            m: self.m,
            d: self.d,
        }
    }

    /// `true` iff `Hx <= g + tol` componentwise.
    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool, GeometryError> {
        if x.dim() != self.d {
            return Err(GeometryError::DimensionMismatch { expected: self.d, got: x.dim() });
        }
        Ok(self.max_violation(x.as_slice()) <= tol)
    }

    /// Largest constraint violation at `x` (negative slack), `<= 0` inside.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.m {
            let (row, gi) = self.halfspace(i);
            worst = worst.max(dot(row, x) - gi);
        }
        worst
    }

    /// Center and radius of the largest inscribed ball.
    ///
    /// Computed once per value and cached. The maximization runs as a
    /// projection of a far point along the radius coordinate of the
    /// augmented set `{(x, r) : Hx + r*rownorm <= g, r >= 0}`; the active-set
    /// polish then lands on the optimal vertex exactly in the generic case.
    pub fn chebyshev_center(&self) -> (Point, f64) {
        let (c, r) = self.cheb.get_or_init(|| self.compute_chebyshev());
        (Point::new(c.clone()), *r)
    }

    fn compute_chebyshev(&self) -> (Vec<f64>, f64) {
        let d = self.d;
        let m = self.m;
        // Augmented rows [h_i, rn_i] with offset g_i, plus r >= 0.
        let mut ah = Vec::with_capacity((m + 1) * (d + 1));
        let mut ag = Vec::with_capacity(m + 1);
        let mut arn2 = Vec::with_capacity(m + 1);
        for i in 0..m {
            let (row, gi) = self.halfspace(i);
            ah.extend_from_slice(row);
            ah.push(self.rn[i]);
            ag.push(gi);
            arn2.push(2.0 * self.rn2[i]);
        }
        ah.extend(std::iter::repeat(0.0).take(d));
        ah.push(-1.0);
        ag.push(0.0);
        arn2.push(1.0);
        let aug = RawPoly { h: &ah, g: &ag, rn2: &arn2, m: m + 1, d: d + 1 };

        // Feasible anchor inside the original set.
        let mut anchor = vec![0.0; d];
        let mut lam = vec![0.0; m];
        self.raw().project_loop(&vec![0.0; d], &mut anchor, &mut lam, 50_000, 1e-13 * self.scale(), 0.0);

        let mut x = anchor;
        let mut lambda = vec![0.0; m + 1];
        // Hildreth's sweep count grows with the query distance, so several
        // re-anchored moderate-range stages beat one far query; the polish
        // snaps onto the optimal vertex once the active set is identified.
        for _stage in 0..3 {
            let reach = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs())) + self.scale();
            let far = 1e3 * reach;
            let mut q = x.clone();
            q.push(far);
            let mut z = vec![0.0; d + 1];
            lambda.iter_mut().for_each(|l| *l = 0.0);
            aug.project_loop(&q, &mut z, &mut lambda, 60_000, 1e-14 * reach, 0.0);
            let mut scratch = ProjScratch::default();
            if aug.polish(&q, &z, &lambda, 1e-12 * far, &mut scratch) {
                z.copy_from_slice(&scratch.out);
            }
            x = z[..d].to_vec();
        }
        // Exact supported radius at the returned center.
        let mut r = f64::INFINITY;
        for i in 0..m {
            let (row, gi) = self.halfspace(i);
            r = r.min((gi - dot(row, &x)) / self.rn[i]);
        }
        (x, r.max(0.0))
    }

    /// Euclidean projection of `y` onto the set, accurate to `tol`.
    pub fn project(&self, y: &Point, tol: f64) -> Result<Point, GeometryError> {
        if y.dim() != self.d {
            return Err(GeometryError::DimensionMismatch { expected: self.d, got: y.dim() });
        }
        let mut x = vec![0.0; self.d];
        let mut lambda = vec![0.0; self.m];
        let mut scratch = ProjScratch::default();
        self.project_warm(y.as_slice(), &mut x, &mut lambda, tol, &mut scratch)?;
        Ok(Point::new(x))
    }

    /// Projection core with caller-owned dual state and scratch buffers, so
    /// sequences of related queries (alternating projections, gradient
    /// steps) warm-start and stay allocation-free.
    pub(crate) fn project_warm(
        &self,
        y: &[f64],
        x: &mut Vec<f64>,
        lambda: &mut Vec<f64>,
        tol: f64,
        scratch: &mut ProjScratch,
    ) -> Result<(), GeometryError> {
        let scale = self.scale() + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if self.max_violation(y) <= 0.0 {
            x.clear();
            x.extend_from_slice(y);
            lambda.iter_mut().for_each(|l| *l = 0.0);
            return Ok(());
        }
        let raw = self.raw();
        let feas = (0.5 * tol).max(1e-12 * scale);
        let mut total = 0usize;
        // A few sweeps usually identify the active set; the polish then
        // finishes exactly. Escalate the sweep budget only when it fails.
        for cap in [12usize, 60, 400, 4000, 20_000] {
            let out = raw.project_loop(y, x, lambda, cap, 1e-3 * feas, feas);
            total += out.sweeps;
            if raw.polish(y, x, lambda, 1e-10 * scale, scratch) {
                x.clear();
                x.extend_from_slice(&scratch.out);
                return Ok(());
            }
            if out.max_violation <= feas && out.stalled {
                return Ok(());
            }
        }
        let residual = raw.violation(x);
        if residual <= tol {
            return Ok(());
        }
        Err(GeometryError::Numerical { residual, iterations: total, best: x.clone() })
    }

    /// Minimum Euclidean distance between two polytopes with witness points,
    /// `cost = 0` exactly when the sets intersect within `tol`.
    pub fn min_distance(&self, other: &Polytope, tol: f64) -> Result<MinDistance, GeometryError> {
        if self.d != other.d {
            return Err(GeometryError::DimensionMismatch { expected: self.d, got: other.d });
        }
        let scale = self.scale().max(other.scale());
        let tol = if tol > 0.0 { tol } else { DEFAULT_TOL };
        let mut scratch = ProjScratch::default();
        let mut xa = self.chebyshev_center().0.coords;
        let mut xb = vec![0.0; self.d];
        let mut la = vec![0.0; self.m];
        let mut lb = vec![0.0; other.m];
        other.project_warm(&xa, &mut xb, &mut lb, tol, &mut scratch)?;
        let mut buf = vec![0.0; self.d];
        self.project_warm(&xb, &mut buf, &mut la, tol, &mut scratch)?;
        xa = buf.clone();
        let mut gap = dist(&xa, &xb);
        let mut iterations = 1usize;
        let cap = 20_000;
        let mut converged = false;
        while iterations < cap {
            iterations += 1;
            let prev = gap;
            other.project_warm(&xa, &mut xb, &mut lb, tol, &mut scratch)?;
            self.project_warm(&xb, &mut buf, &mut la, tol, &mut scratch)?;
            std::mem::swap(&mut xa, &mut buf);
            gap = dist(&xa, &xb);
            if gap <= tol {
                converged = true;
                break;
            }
            if prev - gap < 0.1 * tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(GeometryError::Numerical { residual: gap, iterations, best: xa });
        }
        if gap <= tol {
            return Ok(MinDistance {
                cost: 0.0,
                witness_a: Point::new(xa),
                witness_b: Point::new(xb),
                iterations,
            });
        }
        if let Some((pa, pb)) = polish_pair(self, other, &xa, &xb, 1e-9 * scale) {
            let pd = dist(&pa, &pb);
            if pd <= gap + 1e-9 * scale {
                return Ok(MinDistance {
                    cost: pd,
                    witness_a: Point::new(pa),
                    witness_b: Point::new(pb),
                    iterations,
                });
            }
        }
        Ok(MinDistance {
            cost: gap,
            witness_a: Point::new(xa),
            witness_b: Point::new(xb),
            iterations,
        })
    }

    /// Farkas certificates that the support function is finite along every
    /// coordinate axis: for each direction `c` in `{±e_i}` there must exist
    /// `λ >= 0` with `H^T λ = c`, found by nonnegative least squares.
    fn is_bounded_all_axes(&self) -> bool {
        let d = self.d;
        let m = self.m;
        // Normalized rows keep the residual threshold scale-free.
        let mut hn = self.h.clone();
        for i in 0..m {
            for j in 0..d {
                hn[i * d + j] /= self.rn[i];
            }
        }
        let mut lambda = vec![0.0; m];
        let mut res = vec![0.0; d];
        for axis in 0..d {
            for sign in [1.0, -1.0] {
                lambda.iter_mut().for_each(|l| *l = 0.0);
                res.iter_mut().for_each(|r| *r = 0.0);
                res[axis] = -sign; // res = H^T λ - c
                let mut ok = false;
                for _sweep in 0..600 {
                    let mut biggest = 0.0f64;
                    for i in 0..m {
                        let row = &hn[i * d..(i + 1) * d];
                        let step = dot(row, &res);
                        let nl = (lambda[i] - step).max(0.0);
                        let delta = nl - lambda[i];
                        if delta != 0.0 {
                            axpy(delta, row, &mut res);
                            lambda[i] = nl;
                        }
                        biggest = biggest.max(delta.abs());
                    }
                    let infres = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if infres <= 1e-8 {
                        ok = true;
                        break;
                    }
                    if biggest <= 1e-14 {
                        break;
                    }
                }
                if !ok && res.iter().fold(0.0f64, |a, v| a.max(v.abs())) > 1e-7 {
                    return false;
                }
            }
        }
        true
    }
}

/// Borrowed halfspace system, shared by the polytope itself and the
/// augmented systems built for Chebyshev queries.
struct RawPoly<'a> {
    h: &'a [f64],
    g: &'a [f64],
    rn2: &'a [f64],
    m: usize,
    d: usize,
}

struct ProjOutcome {
    max_violation: f64,
    sweeps: usize,
    stalled: bool,
}

impl<'a> RawPoly<'a> {
    fn row(&self, i: usize) -> &[f64] {
        &self.h[i * self.d..(i + 1) * self.d]
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.m {
            worst = worst.max(dot(self.row(i), x) - self.g[i]);
        }
        worst
    }

    /// Hildreth dual coordinate ascent for `min ||x - y||^2, Hx <= g`,
    /// maintaining `x = y - H^T λ`. Stops when per-sweep updates fall below
    /// `stop_tol` and the violation is within `feas_tol` (or update motion
    /// dies out entirely).
    fn project_loop(
        &self,
        y: &[f64],
        x: &mut Vec<f64>,
        lambda: &mut [f64],
        max_sweeps: usize,
        stop_tol: f64,
        feas_tol: f64,
    ) -> ProjOutcome {
        debug_assert_eq!(lambda.len(), self.m);
        x.clear();
        x.extend_from_slice(y);
        for i in 0..self.m {
            if lambda[i] != 0.0 {
                let li = lambda[i];
                axpy(-li, self.row(i), x);
            }
        }
        let mut sweeps = 0;
        let mut stalled = false;
        while sweeps < max_sweeps {
            sweeps += 1;
            let mut biggest = 0.0f64;
            for i in 0..self.m {
                let row = self.row(i);
                let v = dot(row, x) - self.g[i];
                let nl = (lambda[i] + v / self.rn2[i]).max(0.0);
                let delta = nl - lambda[i];
                if delta != 0.0 {
                    axpy(-delta, row, x);
                    lambda[i] = nl;
                    biggest = biggest.max(delta.abs() * self.rn2[i].sqrt());
                }
            }
            if biggest <= stop_tol {
                stalled = true;
                if feas_tol <= 0.0 || self.violation(x) <= feas_tol {
                    break;
                }
                if biggest == 0.0 {
                    break;
                }
            }
        }
        ProjOutcome { max_violation: self.violation(x), sweeps, stalled }
    }

    /// Active-set refinement: guess the tight rows from the iterate, solve
    /// the equality-constrained projection exactly and accept the result if
    /// it satisfies the KKT conditions of the inequality problem. On success
    /// the result is left in `scratch.out`.
    fn polish(&self, y: &[f64], x: &[f64], lambda: &[f64], eps: f64, scratch: &mut ProjScratch) -> bool {
        let d = self.d;
        let lam_scale = lambda.iter().fold(0.0f64, |a, v| a.max(*v));
        let cand = &mut scratch.cand;
        cand.clear();
        for i in 0..self.m {
            let slack = self.g[i] - dot(self.row(i), x);
            let active = lambda[i] > 1e-10 * (1.0 + lam_scale) || slack <= 100.0 * eps;
            if active {
                cand.push((slack, i));
            }
        }
        if cand.is_empty() {
            if self.violation(y) <= eps {
                scratch.out.clear();
                scratch.out.extend_from_slice(y);
                return true;
            }
            return false;
        }
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        // Greedy independent subset by modified Gram-Schmidt, at most d rows.
        let basis = &mut scratch.basis;
        let keep = &mut scratch.keep;
        basis.clear();
        keep.clear();
        for &(_, i) in cand.iter() {
            if keep.len() == d {
                break;
            }
            let start = basis.len();
            basis.extend_from_slice(self.row(i));
            for q in 0..keep.len() {
                let c = {
                    let (head, tail) = basis.split_at(start);
                    dot(&tail[..d], &head[q * d..(q + 1) * d])
                };
                let (head, tail) = basis.split_at_mut(start);
                axpy(-c, &head[q * d..(q + 1) * d], &mut tail[..d]);
            }
            let rn = norm(&basis[start..]);
            if rn > 1e-9 * self.rn2[i].sqrt() {
                for v in &mut basis[start..] {
                    *v /= rn;
                }
                keep.push(i);
            } else {
                basis.truncate(start);
            }
        }
        let k = keep.len();
        if k == 0 {
            return false;
        }
        // Solve (A A^T) mu = A y - g_A, then x* = y - A^T mu.
        let gram = &mut scratch.gram;
        let rhs = &mut scratch.rhs;
        gram.clear();
        gram.resize(k * k, 0.0);
        rhs.clear();
        rhs.resize(k, 0.0);
        for a in 0..k {
            let ia = keep[a];
            for b in 0..k {
                gram[a * k + b] = dot(self.row(ia), self.row(keep[b]));
            }
            rhs[a] = dot(self.row(ia), y) - self.g[ia];
        }
        if solve_in_place(gram, rhs, k, 1e-12).is_none() {
            return false;
        }
        let out = &mut scratch.out;
        out.clear();
        out.extend_from_slice(y);
        for a in 0..k {
            axpy(-rhs[a], self.row(keep[a]), out);
        }
        let mu_scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if rhs.iter().any(|&mu| mu < -1e-9 * (1.0 + mu_scale)) {
            return false;
        }
        if self.violation(out) > eps {
            return false;
        }
        true
    }
}

/// Reusable buffers for the projection polish; one per solver thread.
#[derive(Default)]
pub(crate) struct ProjScratch {
    cand: Vec<(f64, usize)>,
    keep: Vec<usize>,
    basis: Vec<f64>,
    gram: Vec<f64>,
    rhs: Vec<f64>,
    out: Vec<f64>,
}

/// Exact closest-pair refinement for two polytopes: take the near-active
/// rows at both iterates, solve the equality-constrained KKT system and
/// verify it against the inequality problem.
fn polish_pair(
    pa: &Polytope,
    pb: &Polytope,
    xa: &[f64],
    xb: &[f64],
    eps: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let d = pa.dim();
    let sel = |p: &Polytope, x: &[f64]| -> Vec<usize> {
        let mut cand: Vec<(f64, usize)> = (0..p.rows())
            .filter_map(|i| {
                let (row, gi) = p.halfspace(i);
                let slack = gi - dot(row, x);
                (slack.abs() <= 1e4 * eps).then_some((slack, i))
            })
            .collect();
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut keep = Vec::new();
        for (_, i) in cand {
            if keep.len() == d {
                break;
            }
            let (row, _) = p.halfspace(i);
            let mut r = row.to_vec();
            for q in &basis {
                let c = dot(&r, q);
                axpy(-c, q, &mut r);
            }
            let rn = norm(&r);
            if rn > 1e-9 * norm(row) {
                for v in r.iter_mut() {
                    *v /= rn;
                }
                basis.push(r);
                keep.push(i);
            }
        }
        keep
    };
    let ka = sel(pa, xa);
    let kb = sel(pb, xb);
    let na = ka.len();
    let nb = kb.len();
    // Unknowns: x (d), y (d), mu (na), nu (nb).
    let n = 2 * d + na + nb;
    if n == 0 {
        return None;
    }
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    // x - y + Ha^T mu = 0
    for r in 0..d {
        a[r * n + r] = 1.0;
        a[r * n + d + r] = -1.0;
        for (j, &i) in ka.iter().enumerate() {
            a[r * n + 2 * d + j] = pa.halfspace(i).0[r];
        }
    }
    // y - x + Hb^T nu = 0
    for r in 0..d {
        let rr = d + r;
        a[rr * n + d + r] = 1.0;
        a[rr * n + r] = -1.0;
        for (j, &i) in kb.iter().enumerate() {
            a[rr * n + 2 * d + na + j] = pb.halfspace(i).0[r];
        }
    }
    for (j, &i) in ka.iter().enumerate() {
        let rr = 2 * d + j;
        let (row, gi) = pa.halfspace(i);
        for c in 0..d {
            a[rr * n + c] = row[c];
        }
        b[rr] = gi;
    }
    for (j, &i) in kb.iter().enumerate() {
        let rr = 2 * d + na + j;
        let (row, gi) = pb.halfspace(i);
        for c in 0..d {
            a[rr * n + d + c] = row[c];
        }
        b[rr] = gi;
    }
    solve_in_place(&mut a, &mut b, n, 1e-10)?;
    let x = b[..d].to_vec();
    let y = b[d..2 * d].to_vec();
    let mu = &b[2 * d..2 * d + na];
    let nu = &b[2 * d + na..];
    let mscale = mu.iter().chain(nu).fold(0.0f64, |acc, v| acc.max(v.abs()));
    if mu.iter().chain(nu).any(|&v| v < -1e-8 * (1.0 + mscale)) {
        return None;
    }
    if pa.max_violation(&x) > eps || pb.max_violation(&y) > eps {
        return None;
    }
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    pub(crate) fn unit_box() -> Polytope {
        Polytope::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    /// Triangle with vertices (0,0), (1,0), (0,1).
    fn triangle() -> Polytope {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Polytope::from_halfspaces(
            vec![-1.0, 0.0, 0.0, -1.0, s, s],
            vec![0.0, 0.0, s],
            2,
        )
        .unwrap()
    }

    fn pt(x: f64, y: f64) -> Point {
        Point::new(vec![x, y])
    }

    /// Random bounded polytope inside the cell `center ± 0.45`, mirroring
    /// the instance generator's shape family.
    pub(crate) fn random_polytope(rng: &mut SplitMix64, center: &[f64]) -> Polytope {
        let d = center.len();
        let half = 0.45 / (d as f64).sqrt();
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
            let off = rng.range_f64(0.15, 0.45);
            g.push(dot(&dir, center) + off);
            h.extend_from_slice(&dir);
        }
        Polytope::from_halfspaces(h, g, d).unwrap()
    }

    #[test]
    fn contains_unit_box() {
        let b = unit_box();
        assert!(b.contains(&pt(0.5, 0.5), 0.0).unwrap());
        assert!(b.contains(&pt(1.0 + 1e-9, 0.5), 1e-8).unwrap());
        assert!(!b.contains(&pt(2.0, 0.0), 1e-8).unwrap());
    }

    #[test]
    fn contains_checks_dimension() {
        let b = unit_box();
        let e = b.contains(&Point::new(vec![0.5]), 0.0);
        assert!(matches!(e, Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn construction_rejects_unbounded() {
        // Half-plane x <= 0 plus a redundant second copy.
        let r = Polytope::from_halfspaces(vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], 2);
        assert!(matches!(r, Err(GeometryError::Unbounded)));
        // Vertical strip: bounded in x only.
        let r = Polytope::from_halfspaces(
            vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
            2,
        );
        assert!(matches!(r, Err(GeometryError::Unbounded)));
    }

    #[test]
    fn construction_rejects_empty() {
        // x <= 0 and x >= 1 with y boxed.
        let r = Polytope::from_halfspaces(
            vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0],
            vec![0.0, -1.0, 1.0, 0.0],
            2,
        );
        assert!(matches!(r, Err(GeometryError::Empty)));
    }

    #[test]
    fn chebyshev_unit_box() {
        let (c, r) = unit_box().chebyshev_center();
        assert_relative_eq!(c.coords[0], 0.5, epsilon = 1e-7);
        assert_relative_eq!(c.coords[1], 0.5, epsilon = 1e-7);
        assert_relative_eq!(r, 0.5, epsilon = 1e-7);
    }

    #[test]
    fn chebyshev_degenerate_point() {
        let p = Polytope::singleton(&[1.25, -3.5]).unwrap();
        let (c, r) = p.chebyshev_center();
        assert_relative_eq!(c.coords[0], 1.25, epsilon = 1e-8);
        assert_relative_eq!(c.coords[1], -3.5, epsilon = 1e-8);
        assert!(r.abs() < 1e-8);
    }

    /// Independent oracle: maximize the inscribed radius over a refining
    /// grid of candidate centers.
    fn chebyshev_grid_oracle(p: &Polytope, lo: &[f64], hi: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut lo = lo.to_vec();
        let mut hi = hi.to_vec();
        for _level in 0..12 {
            let mut best_pt = vec![0.0; 2];
            for i in 0..=40 {
                for j in 0..=40 {
                    let x = lo[0] + (hi[0] - lo[0]) * i as f64 / 40.0;
                    let y = lo[1] + (hi[1] - lo[1]) * j as f64 / 40.0;
                    let mut r = f64::INFINITY;
                    for row in 0..p.rows() {
                        let (h, g) = p.halfspace(row);
                        let n = norm(h);
                        r = r.min((g - dot(h, &[x, y])) / n);
                    }
                    if r > best {
                        best = r;
                        best_pt = vec![x, y];
                    }
                }
            }
            let w0 = (hi[0] - lo[0]) / 8.0;
            let w1 = (hi[1] - lo[1]) / 8.0;
            lo = vec![best_pt[0] - w0, best_pt[1] - w1];
            hi = vec![best_pt[0] + w0, best_pt[1] + w1];
        }
        best
    }

    #[test]
    fn chebyshev_triangle_matches_grid_oracle() {
        let t = triangle();
        let expected = (2.0 - 2.0f64.sqrt()) / 2.0;
        let oracle = chebyshev_grid_oracle(&t, &[0.0, 0.0], &[1.0, 1.0]);
        assert_relative_eq!(oracle, expected, epsilon = 1e-5);
        let (_, r) = t.chebyshev_center();
        assert_relative_eq!(r, expected, epsilon = 1e-7);
    }

    #[test]
    fn project_inside_is_identity() {
        let b = unit_box();
        let p = b.project(&pt(0.3, 0.7), 1e-9).unwrap();
        assert_eq!(p, pt(0.3, 0.7));
    }

    #[test]
    fn project_clamps_to_face() {
        let b = unit_box();
        let p = b.project(&pt(2.0, 0.5), 1e-9).unwrap();
        assert_relative_eq!(p.coords[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(p.coords[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn project_onto_hypotenuse() {
        // Dense boundary sampling pins the expected projection of (1,1).
        let t = triangle();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for k in 0..=20_000 {
            let s = k as f64 / 20_000.0;
            let (x, y) = (s, 1.0 - s);
            let d2 = (x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0);
            if d2 < best.0 {
                best = (d2, x, y);
            }
        }
        assert_relative_eq!(best.1, 0.5, epsilon = 1e-4);
        let p = t.project(&pt(1.0, 1.0), 1e-9).unwrap();
        assert_relative_eq!(p.coords[0], 0.5, epsilon = 1e-8);
        assert_relative_eq!(p.coords[1], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn min_distance_axis_separated_boxes() {
        let a = unit_box();
        let b = Polytope::from_bounds(&[3.0, 0.0], &[4.0, 1.0]).unwrap();
        let md = a.min_distance(&b, 1e-9).unwrap();
        assert_relative_eq!(md.cost, 2.0, epsilon = 1e-8);
        assert_relative_eq!(md.witness_a.coords[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(md.witness_b.coords[0], 3.0, epsilon = 1e-7);
    }

    #[test]
    fn min_distance_overlapping_boxes_is_zero() {
        let a = unit_box();
        let b = Polytope::from_bounds(&[0.5, 0.5], &[1.5, 1.5]).unwrap();
        let md = a.min_distance(&b, 1e-9).unwrap();
        assert_eq!(md.cost, 0.0);
    }

    #[test]
    fn min_distance_corner_to_corner() {
        let a = unit_box();
        let b = Polytope::from_bounds(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        // Dense sampling of both boundaries as the independent oracle.
        let sample_box = |lo: f64, hi: f64, k: usize| -> Vec<(f64, f64)> {
            let mut pts = Vec::new();
            for i in 0..=k {
                let t = lo + (hi - lo) * i as f64 / k as f64;
                pts.push((t, lo));
                pts.push((t, hi));
                pts.push((lo, t));
                pts.push((hi, t));
            }
            pts
        };
        let pa = sample_box(0.0, 1.0, 160);
        let pb = sample_box(2.0, 3.0, 160);
        let mut oracle = f64::INFINITY;
        for &(x1, y1) in &pa {
            for &(x2, y2) in &pb {
                let d = ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt();
                if d < oracle {
                    oracle = d;
                }
            }
        }
        assert_relative_eq!(oracle, 2f64.sqrt(), epsilon = 1e-2);
        let md = a.min_distance(&b, 1e-9).unwrap();
        assert_relative_eq!(md.cost, 2f64.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(md.witness_a.coords[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(md.witness_a.coords[1], 1.0, epsilon = 1e-7);
        assert_relative_eq!(md.witness_b.coords[0], 2.0, epsilon = 1e-7);
    }

    #[test]
    fn min_distance_properties_random_pairs() {
        let mut rng = SplitMix64::new(2024);
        let tol = 1e-7;
        for trial in 0..60 {
            let c1 = [rng.range_f64(-3.0, 3.0), rng.range_f64(-3.0, 3.0)];
            let c2 = [rng.range_f64(-3.0, 3.0), rng.range_f64(-3.0, 3.0)];
            let p = random_polytope(&mut rng, &c1);
            let q = random_polytope(&mut rng, &c2);
            let fwd = p.min_distance(&q, tol).unwrap();
            let bwd = q.min_distance(&p, tol).unwrap();
            assert!(
                (fwd.cost - bwd.cost).abs() <= 2.0 * tol + 1e-9,
                "asymmetry at trial {trial}: {} vs {}",
                fwd.cost,
                bwd.cost
            );
            assert!(p.contains(&fwd.witness_a, tol).unwrap());
            assert!(q.contains(&fwd.witness_b, tol).unwrap());
            // Sampled pairs never beat the reported minimum.
            for _ in 0..30 {
                let ra = rng.unit_vector(2);
                let rb = rng.unit_vector(2);
                let qa = Point::new(vec![c1[0] + 0.6 * ra[0], c1[1] + 0.6 * ra[1]]);
                let qb = Point::new(vec![c2[0] + 0.6 * rb[0], c2[1] + 0.6 * rb[1]]);
                let sa = p.project(&qa, tol).unwrap();
                let sb = q.project(&qb, tol).unwrap();
                let d = dist(sa.as_slice(), sb.as_slice());
                assert!(d >= fwd.cost - tol, "sampled pair beats minimum: {d} < {}", fwd.cost);
            }
            // Chebyshev-center distance dominates the bounded cost.
            let (ca, _) = p.chebyshev_center();
            let (cb, _) = q.chebyshev_center();
            assert!(dist(ca.as_slice(), cb.as_slice()) >= fwd.cost - tol);
        }
    }

    #[test]
    fn project_is_idempotent() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..40 {
            let c = [rng.range_f64(-2.0, 2.0), rng.range_f64(-2.0, 2.0)];
            let p = random_polytope(&mut rng, &c);
            let y = pt(rng.range_f64(-4.0, 4.0), rng.range_f64(-4.0, 4.0));
            let a = p.project(&y, 1e-9).unwrap();
            let b = p.project(&a, 1e-9).unwrap();
            assert!(dist(a.as_slice(), b.as_slice()) <= 1e-9);
        }
    }
}
