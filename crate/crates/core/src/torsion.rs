//! Finite-difference solution of the torsion problem `Δu = 2` in `Ω`,
//! `u = 0` on `Γ`, and the fields derived from it.
//!
//! The grid is the square lattice `hZ²` restricted to the domain. At nodes
//! next to the boundary the five-point Laplacian uses the exact distance to
//! the boundary along each grid line (Shortley-Weller).

use std::collections::VecDeque;
use std::sync::Arc;

use crate::constants::{fmt_float, Exponent};
use crate::domain::{BoundarySample, Point, StarDomain2D};
use crate::error::{domain_err, Error, Result};
use crate::field::AnalyticField;
use crate::linalg::{solve, CsrMatrix};
use crate::quadrature::GaussRule;

const NONE: u32 = u32::MAX;
/// East, west, north, south.
const DIRS: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];
/// Largest tolerated fraction of the volume whose Hessian stencil is missing.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;
/// Required relative residual of the linear solve.
pub const SOLVE_TOL: f64 = 1e-10;
/// Boundary arms shorter than this fraction of `h` are left out of the
/// derivative stencils.
pub const SHORT_ARM: f64 = 0.01;

/// What lies one step away from a node along a grid line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// Another unknown.
    Node(u32),
    /// The boundary, at this distance (in `(0, h]`).
    Cut(f64),
}

/// Inside nodes of `hZ²` with boundary-intersection data.
#[derive(Debug, Clone)]
pub struct Grid {
    pub h: f64,
    half: i64,
    width: usize,
    index: Vec<u32>,
    /// Integer lattice coordinates of each unknown.
    pub coords: Vec<[i64; 2]>,
    /// Neighbour information, ordered east, west, north, south.
    pub links: Vec<[Link; 4]>,
    /// Volume quadrature weight attached to each node.
    pub weights: Vec<f64>,
    /// Sum of the weights (approximates `|Ω|`).
    pub volume: f64,
}

impl Grid {
    pub fn new(domain: &StarDomain2D, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return domain_err(format!("grid spacing {h} must be positive"));
        }
        let (r_i, r_e) = domain.ball_radii();
        let resolve = 0.5 * r_i.min(r_e);
        if h > resolve {
            return Err(Error::GridTooCoarse(format!(
                "spacing {h} exceeds half the smallest touching-ball radius ({resolve:.4})"
            )));
        }
        let rmax = domain
            .boundary_sample(4096)?
            .iter()
            .map(|b| b.position[0].hypot(b.position[1]))
            .fold(0.0, f64::max);
        let half = (rmax / h).ceil() as i64 + 2;
        let width = (2 * half + 1) as usize;
        let mut index = vec![NONE; width * width];
        let mut coords = Vec::new();
        for iy in -half..=half {
            for ix in -half..=half {
                let p = [ix as f64 * h, iy as f64 * h];
                if domain.contains(p) {
                    index[((iy + half) as usize) * width + (ix + half) as usize] = coords.len() as u32;
                    coords.push([ix, iy]);
                }
            }
        }
        if coords.len() < 9 {
            return Err(Error::GridTooCoarse(format!("only {} inside nodes", coords.len())));
        }
        let mut grid = Self { h, half, width, index, coords, links: Vec::new(), weights: Vec::new(), volume: 0.0 };
        grid.links = (0..grid.coords.len()).map(|i| grid.node_links(domain, i)).collect();
        grid.check_connected()?;
        grid.weights = grid.volume_weights(domain);
        grid.volume = grid.weights.iter().sum();
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> Point {
        let [ix, iy] = self.coords[i];
        [ix as f64 * self.h, iy as f64 * self.h]
    }

    /// Unknown at lattice position `(ix, iy)`, if inside.
    pub fn node_at(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix.abs() > self.half || iy.abs() > self.half {
            return None;
        }
        let k = self.index[((iy + self.half) as usize) * self.width + (ix + self.half) as usize];
        (k != NONE).then_some(k as usize)
    }

    /// All four neighbours are unknowns.
    pub fn is_regular(&self, i: usize) -> bool {
        self.links[i].iter().all(|l| matches!(l, Link::Node(_)))
    }

    fn node_links(&self, domain: &StarDomain2D, i: usize) -> [Link; 4] {
        let [ix, iy] = self.coords[i];
        let p = self.point(i);
        let mut out = [Link::Cut(self.h); 4];
        for (k, d) in DIRS.iter().enumerate() {
            out[k] = match self.node_at(ix + d[0], iy + d[1]) {
                Some(j) => Link::Node(j as u32),
                None => Link::Cut(cut_distance(domain, p, [d[0] as f64, d[1] as f64], self.h)),
            };
        }
        out
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for l in &self.links[i] {
                if let Link::Node(j) = *l {
                    let j = j as usize;
                    if !seen[j] {
                        seen[j] = true;
                        count += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        if count != n {
            return Err(Error::GridTooCoarse(format!(
                "inside region splits: {count} of {n} nodes reachable"
            )));
        }
        Ok(())
    }

    /// Cell-based weights: every cell's area inside `Ω` is shared equally
    /// between its inside corners. Cut cells get their area from a Gauss
    /// rule across the cell of the inside length of each vertical line.
    fn volume_weights(&self, domain: &StarDomain2D) -> Vec<f64> {
        let h = self.h;
        let mut w = vec![0.0; self.len()];
        for cy in -self.half..self.half {
            for cx in -self.half..self.half {
                let corners = [
                    self.node_at(cx, cy),
                    self.node_at(cx + 1, cy),
                    self.node_at(cx, cy + 1),
                    self.node_at(cx + 1, cy + 1),
                ];
                let inside: Vec<usize> = corners.iter().flatten().copied().collect();
                if inside.is_empty() {
                    continue;
                }
                let area = if inside.len() == 4 {
                    h * h
                } else {
                    let (x0, y0) = (cx as f64 * h, cy as f64 * h);
                    // Break the x-range where Γ crosses the bottom or top edge,
                    // so that the inside length is smooth on each piece.
                    let mut cuts = vec![0.0, h];
                    for (y, left, right) in [(y0, corners[0], corners[1]), (y0 + h, corners[2], corners[3])] {
                        if left.is_some() != right.is_some() {
                            let start = if left.is_some() { [x0, y] } else { [x0 + h, y] };
                            let dir = if left.is_some() { [1.0, 0.0] } else { [-1.0, 0.0] };
                            let d = cut_distance(domain, start, dir, h);
                            cuts.push(if left.is_some() { d } else { h - d });
                        }
                    }
                    cuts.sort_by(f64::total_cmp);
                    cuts.windows(2)
                        .map(|w| {
                            let piece = GaussRule::on(8, w[0], w[1]);
                            piece.integrate(|t| inside_length(domain, x0 + t, y0, h))
                        })
                        .sum()
                };
                for &k in &inside {
                    w[k] += area / inside.len() as f64;
                }
            }
        }
        w
    }

    /// `Σ w_i g_i`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Normalized `L^p` norm of non-negative nodal values; nodes with
    /// `mask[i] == false` are left out.
    pub fn lp_norm(&self, values: &[f64], p: Exponent, mask: Option<&[bool]>) -> f64 {
        let keep = |i: usize| mask.map_or(true, |m| m[i]);
        match p {
            Exponent::Infinite => (0..self.len())
                .filter(|&i| keep(i))
                .map(|i| values[i].abs())
                .fold(0.0, f64::max),
            Exponent::Finite(pv) => {
                let s: f64 = (0..self.len())
                    .filter(|&i| keep(i))
                    .map(|i| self.weights[i] * values[i].abs().powf(pv))
                    .sum();
                (s / self.volume).powf(1.0 / pv)
            }
        }
    }

    /// Distance to the boundary at every node.
    pub fn boundary_distances(&self, domain: &StarDomain2D) -> Vec<f64> {
        use rayon::prelude::*;
        (0..self.len()).into_par_iter().map(|i| domain.delta_gamma(self.point(i))).collect()
    }
}

/// Distance from the inside point `p` to the boundary along unit lattice
/// direction `dir`, knowing that `p + h dir` is not inside.
fn cut_distance(domain: &StarDomain2D, p: Point, dir: [f64; 2], h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if domain.contains([p[0] + mid * dir[0], p[1] + mid * dir[1]]) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * h {
            break;
        }
    }
    (0.5 * (lo + hi)).max(1e-12 * h)
}

/// Length of `{y ∈ [y0, y0+h] : (x, y) ∈ Ω}`, assuming at most one crossing.
fn inside_length(domain: &StarDomain2D, x: f64, y0: f64, h: f64) -> f64 {
    let a = domain.contains([x, y0]);
    let b = domain.contains([x, y0 + h]);
    match (a, b) {
        (true, true) => h,
        (false, false) => 0.0,
        _ => {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if domain.contains([x, y0 + mid]) == a {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cross = 0.5 * (lo + hi);
            if a { cross } else { h - cross }
        }
    }
}

/// Where a nodal field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Solved,
    Analytic,
    Derived,
}

type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Known values of a field on the boundary, used by difference stencils
/// that reach a cut point.
#[derive(Clone)]
pub enum BoundaryData {
    /// The field vanishes on `Γ` (the torsion function).
    Zero,
    /// The field equals `|x - z|²/2` on `Γ` (`h = Q - u` with `u = 0` there).
    HalfSquaredDistance(Point),
    /// Arbitrary Dirichlet data.
    Function(PointFn),
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Zero => write!(f, "Zero"),
            BoundaryData::HalfSquaredDistance(z) => write!(f, "HalfSquaredDistance({z:?})"),
            BoundaryData::Function(_) => write!(f, "Function"),
        }
    }
}

impl BoundaryData {
    pub fn value(&self, x: Point) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::HalfSquaredDistance(z) => {
                0.5 * ((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2))
            }
            BoundaryData::Function(g) => g(x),
        }
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub boundary: BoundaryData,
}

impl DiscreteField {
    /// Samples an analytic field at the nodes.
    pub fn sample(grid: Arc<Grid>, f: &AnalyticField, boundary: BoundaryData) -> Self {
        let values = (0..grid.len()).map(|i| f.value(&grid.point(i))).collect();
        Self { grid, values, provenance: Provenance::Analytic, boundary }
    }

    /// Values of the field one step away along each axis:
    /// `(h_minus, f_minus, h_plus, f_plus)` for `axis` 0 (x) or 1 (y).
    /// Three points `(offset, value)` along `axis` through node `i` for the
    /// derivative stencils. A boundary cut closer than `SHORT_ARM * h` would
    /// make the stencil ill-conditioned, so it is replaced by the second
    /// node on the opposite side. `Err` carries the two arm points when no
    /// such replacement exists (the node then sits on `Γ` up to roundoff).
    fn axis_points(&self, i: usize, axis: usize) -> std::result::Result<[(f64, f64); 3], [(f64, f64); 2]> {
        let grid = &self.grid;
        let p = grid.point(i);
        let side = |k: usize| -> (f64, f64) {
            match grid.links[i][k] {
                Link::Node(j) => (grid.h, self.values[j as usize]),
                Link::Cut(d) => {
                    let dir = DIRS[k];
                    let q = [p[0] + d * dir[0] as f64, p[1] + d * dir[1] as f64];
                    (d, self.boundary.value(q))
                }
            }
        };
        let (plus, minus) = if axis == 0 { (0, 1) } else { (2, 3) };
        let (hp, fp) = side(plus);
        let (hm, fm) = side(minus);
        let centre = (0.0, self.values[i]);
        let second = |k: usize| -> Option<f64> {
            let dir = DIRS[k];
            let [ix, iy] = grid.coords[i];
            match grid.links[i][k] {
                Link::Node(_) => grid.node_at(ix + 2 * dir[0], iy + 2 * dir[1]).map(|j| self.values[j]),
                Link::Cut(_) => None,
            }
        };
        let short = SHORT_ARM * grid.h;
        if hp >= short && hm >= short {
            return Ok([(-hm, fm), centre, (hp, fp)]);
        }
        let fallback = if hp < short && hm >= short {
            second(minus).map(|fmm| [(-2.0 * grid.h, fmm), (-hm, fm), centre])
        } else if hm < short && hp >= short {
            second(plus).map(|fpp| [centre, (hp, fp), (2.0 * grid.h, fpp)])
        } else {
            None
        };
        fallback.ok_or([(-hm, fm), (hp, fp)])
    }

    /// Derivative along `axis`; at a degenerate node, the chord through the
    /// two boundary points.
    fn axis_first(&self, i: usize, axis: usize) -> f64 {
        match self.axis_points(i, axis) {
            Ok(pts) => quadratic_derivatives(pts).0,
            Err([(xm, fm), (xp, fp)]) => (fp - fm) / (xp - xm),
        }
    }

    fn axis_second(&self, i: usize, axis: usize) -> Option<f64> {
        self.axis_points(i, axis).ok().map(|pts| quadratic_derivatives(pts).1)
    }

    /// Writes `x,y,value` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for i in 0..self.grid.len() {
            let p = self.grid.point(i);
            s.push_str(&format!("{},{},{}\n", fmt_float(p[0]), fmt_float(p[1]), fmt_float(self.values[i])));
        }
        s
    }
}

/// Diagnostics of a torsion solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub h: f64,
    pub unknowns: usize,
    pub residual: f64,
    pub direct: bool,
    /// Observed order against a reference, when a refinement pair exists.
    pub order: Option<f64>,
}

/// Solves `Δu = 2`, `u = 0` on `Γ` with Shortley-Weller differences.
pub fn solve_torsion(domain: &StarDomain2D, h: f64) -> Result<(DiscreteField, SolveReport)> {
    let grid = Arc::new(Grid::new(domain, h)?);
    solve_on_grid(grid)
}

/// Torsion solve on an existing grid.
pub fn solve_on_grid(grid: Arc<Grid>) -> Result<(DiscreteField, SolveReport)> {
    solve_poisson(grid, |_| 2.0, BoundaryData::Zero)
}

/// Solves `Δu = f` with Dirichlet data on the cut points.
pub fn solve_poisson(
    grid: Arc<Grid>,
    source: impl Fn(Point) -> f64,
    boundary: BoundaryData,
) -> Result<(DiscreteField, SolveReport)> {
    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let p = grid.point(i);
        let mut row = Vec::with_capacity(5);
        let mut diag = 0.0;
        let mut rhs = source(p);
        for (plus, minus) in [(0usize, 1usize), (2, 3)] {
            let arm = |k: usize| match grid.links[i][k] {
                Link::Node(_) => grid.h,
                Link::Cut(d) => d,
            };
            let (hp, hm) = (arm(plus), arm(minus));
            let cp = 2.0 / (hp * (hp + hm));
            let cm = 2.0 / (hm * (hp + hm));
            diag -= 2.0 / (hp * hm);
            for (k, c) in [(plus, cp), (minus, cm)] {
                match grid.links[i][k] {
                    Link::Node(j) => row.push((j as usize, c)),
                    Link::Cut(d) => {
                        let dir = DIRS[k];
                        let q = [p[0] + d * dir[0] as f64, p[1] + d * dir[1] as f64];
                        rhs -= c * boundary.value(q);
                    }
                }
            }
        }
        row.push((i, diag));
        rows.push(row);
        b.push(rhs);
    }
    let a = CsrMatrix::from_rows(rows);
    let sol = solve(&a, &b)?;
    if sol.residual > SOLVE_TOL {
        return Err(Error::Numerical(format!(
            "linear solve stopped at relative residual {:.3e}",
            sol.residual
        )));
    }
    let report = SolveReport { h: grid.h, unknowns: n, residual: sol.residual, direct: sol.direct, order: None };
    let field = DiscreteField { grid, values: sol.x, provenance: Provenance::Solved, boundary };
    Ok((field, report))
}

/// Exact torsion function of the ellipse `x²/a² + y²/b² < 1`.
pub fn exact_ellipse_torsion(a: f64, b: f64) -> Result<AnalyticField> {
    if !(a > 0.0 && b > 0.0) {
        return domain_err("semi-axes must be positive");
    }
    let c = a * a * b * b / (a * a + b * b);
    let (ia, ib) = (1.0 / (a * a), 1.0 / (b * b));
    Ok(AnalyticField::new(
        format!("ellipse_torsion_{a}_{b}"),
        2,
        move |p| c * (p[0] * p[0] * ia + p[1] * p[1] * ib - 1.0),
        move |p, g| {
            g[0] = 2.0 * c * ia * p[0];
            g[1] = 2.0 * c * ib * p[1];
        },
    ))
}

/// Constant Hessian of [`exact_ellipse_torsion`].
pub fn ellipse_torsion_hessian(a: f64, b: f64) -> [[f64; 2]; 2] {
    let s = a * a + b * b;
    [[2.0 * b * b / s, 0.0], [0.0, 2.0 * a * a / s]]
}

/// Nodal gradient.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|g| g[0].hypot(g[1])).collect()
    }
}

/// Nodal Hessian with the nodes where no stencil was available masked out.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub values: Vec<[[f64; 2]; 2]>,
    pub mask: Vec<bool>,
    pub excluded_fraction: f64,
}

impl MatrixField {
    /// Frobenius norms.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|m| (m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2)).sqrt())
            .collect()
    }

    /// `I - H`, the Hessian of `|x - z|²/2 - u` from that of `u`.
    pub fn identity_minus(&self) -> MatrixField {
        MatrixField {
            values: self
                .values
                .iter()
                .map(|m| [[1.0 - m[0][0], -m[0][1]], [-m[1][0], 1.0 - m[1][1]]])
                .collect(),
            mask: self.mask.clone(),
            excluded_fraction: self.excluded_fraction,
        }
    }
}

/// First and second derivative at `0` of the quadratic through three points.
fn quadratic_derivatives(pts: [(f64, f64); 3]) -> (f64, f64) {
    let [(x0, f0), (x1, f1), (x2, f2)] = pts;
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let d012 = (d12 - d01) / (x2 - x0);
    (d01 + d012 * (-x0 - x1), 2.0 * d012)
}

/// Gradient from the quadratic through each node and its two neighbours
/// (or boundary cut points) along each axis.
pub fn gradient(field: &DiscreteField) -> VectorField {
    let values = (0..field.grid.len())
        .map(|i| {
            [field.axis_first(i, 0), field.axis_first(i, 1)]
        })
        .collect();
    VectorField { values }
}

/// Hessian: pure second derivatives from three-point stencils, mixed
/// derivative from the diagonal neighbours where available and otherwise
/// by differencing the gradient (one-sided second order near `Γ`).
pub fn hessian(field: &DiscreteField) -> Result<MatrixField> {
    let grid = &field.grid;
    let grad = gradient(field);
    let h = grid.h;
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    let mut excluded = 0.0;
    for i in 0..n {
        let (Some(fxx), Some(fyy)) = (field.axis_second(i, 0), field.axis_second(i, 1)) else {
            values.push([[0.0; 2]; 2]);
            mask.push(false);
            excluded += grid.weights[i];
            continue;
        };
        let [ix, iy] = grid.coords[i];
        let diag = [
            grid.node_at(ix + 1, iy + 1),
            grid.node_at(ix - 1, iy + 1),
            grid.node_at(ix + 1, iy - 1),
            grid.node_at(ix - 1, iy - 1),
        ];
        let fxy = if let [Some(ne), Some(nw), Some(se), Some(sw)] = diag {
            Some(
                (field.values[ne] - field.values[nw] - field.values[se] + field.values[sw])
                    / (4.0 * h * h),
            )
        } else {
            let along_y = directional(grid, i, [0, 1], |j| grad.values[j][0]);
            let along_x = directional(grid, i, [1, 0], |j| grad.values[j][1]);
            match (along_y, along_x) {
                (Some(a), Some(b)) => Some(0.5 * (a + b)),
                (Some(a), None) | (None, Some(a)) => Some(a),
                (None, None) => None,
            }
        };
        match fxy {
            Some(m) => {
                values.push([[fxx, m], [m, fyy]]);
                mask.push(true);
            }
            None => {
                values.push([[fxx, 0.0], [0.0, fyy]]);
                mask.push(false);
                excluded += grid.weights[i];
            }
        }
    }
    let excluded_fraction = excluded / grid.volume;
    if excluded_fraction > MAX_EXCLUDED_FRACTION {
        return Err(Error::GridTooCoarse(format!(
            "Hessian stencil missing on {:.2}% of the volume",
            100.0 * excluded_fraction
        )));
    }
    Ok(MatrixField { values, mask, excluded_fraction })
}

/// Derivative of a nodal quantity along a lattice direction using nodes only.
fn directional(grid: &Grid, i: usize, dir: [i64; 2], g: impl Fn(usize) -> f64) -> Option<f64> {
    let h = grid.h;
    let [ix, iy] = grid.coords[i];
    let at = |k: i64| grid.node_at(ix + k * dir[0], iy + k * dir[1]);
    match (at(-2), at(-1), at(1), at(2)) {
        (_, Some(m), Some(p), _) => Some((g(p) - g(m)) / (2.0 * h)),
        (_, _, Some(p), Some(pp)) => Some((-3.0 * g(i) + 4.0 * g(p) - g(pp)) / (2.0 * h)),
        (Some(mm), Some(m), _, _) => Some((3.0 * g(i) - 4.0 * g(m) + g(mm)) / (2.0 * h)),
        (_, _, Some(p), None) => Some((g(p) - g(i)) / h),
        (_, Some(m), None, _) => Some((g(i) - g(m)) / h),
        _ => None,
    }
}

/// Nodal minimum of `u`, refined by one Newton step on the local quadratic.
pub fn locate_min(u: &DiscreteField) -> Result<Point> {
    let grid = &u.grid;
    let (imin, _) = u
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::DegenerateGeometry("empty field".into()))?;
    if !grid.is_regular(imin) {
        return Err(Error::DegenerateGeometry("minimum sits on the boundary ring".into()));
    }
    let h = grid.h;
    let [ix, iy] = grid.coords[imin];
    let v = |dx: i64, dy: i64| grid.node_at(ix + dx, iy + dy).map(|j| u.values[j]);
    let p = grid.point(imin);
    let (Some(e), Some(w), Some(n), Some(s)) = (v(1, 0), v(-1, 0), v(0, 1), v(0, -1)) else {
        return Ok(p);
    };
    let c = u.values[imin];
    let gx = (e - w) / (2.0 * h);
    let gy = (n - s) / (2.0 * h);
    let hxx = (e - 2.0 * c + w) / (h * h);
    let hyy = (n - 2.0 * c + s) / (h * h);
    let hxy = match (v(1, 1), v(-1, 1), v(1, -1), v(-1, -1)) {
        (Some(a), Some(b), Some(cc), Some(d)) => (a - b - cc + d) / (4.0 * h * h),
        _ => 0.0,
    };
    let det = hxx * hyy - hxy * hxy;
    if !(det > 0.0 && hxx > 0.0) {
        return Ok(p);
    }
    let dx = -(hyy * gx - hxy * gy) / det;
    let dy = -(-hxy * gx + hxx * gy) / det;
    if dx.abs() > h || dy.abs() > h {
        return Ok(p);
    }
    Ok([p[0] + dx, p[1] + dy])
}

/// `h = |x - z|²/2 - u`.
pub fn h_field(u: &DiscreteField, z: Point) -> DiscreteField {
    let grid = u.grid.clone();
    let values = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            0.5 * ((p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2)) - u.values[i]
        })
        .collect();
    DiscreteField { grid, values, provenance: Provenance::Derived, boundary: BoundaryData::HalfSquaredDistance(z) }
}

/// Sum of the axis second derivatives at every node (the Shortley-Weller
/// Laplacian except next to very short boundary arms); `None` at nodes that
/// lie on `Γ` up to roundoff.
pub fn discrete_laplacian(field: &DiscreteField) -> Vec<Option<f64>> {
    (0..field.grid.len())
        .map(|i| Some(field.axis_second(i, 0)? + field.axis_second(i, 1)?))
        .collect()
}

/// Interpolates a nodal field at `q` with a biquadratic on a 3×3 block of
/// inside nodes, falling back to bilinear on a cell with four inside corners.
pub fn interpolate(field: &DiscreteField, q: Point) -> Option<f64> {
    let grid = &field.grid;
    let h = grid.h;
    let (sx, sy) = (q[0] / h, q[1] / h);
    let (fx, fy) = (sx.floor() as i64, sy.floor() as i64);
    let mut best: Option<(f64, f64)> = None;
    for i0 in [fx - 1, fx] {
        for j0 in [fy - 1, fy] {
            let mut vals = [[0.0; 3]; 3];
            let mut ok = true;
            'blk: for (a, row) in vals.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    match grid.node_at(i0 + a as i64, j0 + b as i64) {
                        Some(k) => *v = field.values[k],
                        None => {
                            ok = false;
                            break 'blk;
                        }
                    }
                }
            }
            if !ok {
                continue;
            }
            let tx = sx - (i0 + 1) as f64;
            let ty = sy - (j0 + 1) as f64;
            let off = tx.abs().max(ty.abs());
            let lx = lagrange3(tx);
            let ly = lagrange3(ty);
            let mut v = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    v += lx[a] * ly[b] * vals[a][b];
                }
            }
            if best.map_or(true, |(o, _)| off < o) {
                best = Some((off, v));
            }
        }
    }
    if let Some((_, v)) = best {
        return Some(v);
    }
    let c = [grid.node_at(fx, fy), grid.node_at(fx + 1, fy), grid.node_at(fx, fy + 1), grid.node_at(fx + 1, fy + 1)];
    if let [Some(a), Some(b), Some(c2), Some(d)] = c {
        let tx = sx - fx as f64;
        let ty = sy - fy as f64;
        let v = field.values[a] * (1.0 - tx) * (1.0 - ty)
            + field.values[b] * tx * (1.0 - ty)
            + field.values[c2] * (1.0 - tx) * ty
            + field.values[d] * tx * ty;
        return Some(v);
    }
    None
}

/// Lagrange basis on nodes `-1, 0, 1`.
fn lagrange3(t: f64) -> [f64; 3] {
    [0.5 * t * (t - 1.0), (1.0 - t) * (1.0 + t), 0.5 * t * (t + 1.0)]
}

/// A scalar trace on boundary samples; `valid[k]` is false where no
/// interior stencil was available.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub samples: Vec<BoundarySample>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl BoundaryTrace {
    /// Fraction of the boundary length whose samples were flagged.
    pub fn excluded_fraction(&self) -> f64 {
        let total: f64 = self.samples.iter().map(|s| s.weight).sum();
        let bad: f64 = self
            .samples
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| !**v)
            .map(|(s, _)| s.weight)
            .sum();
        bad / total
    }

    pub fn length(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    /// `∫_Γ g dS` over the valid samples, with the weights renormalized to
    /// the full length.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        let total = self.length();
        let mut acc = 0.0;
        let mut len = 0.0;
        for (k, s) in self.samples.iter().enumerate() {
            if self.valid[k] {
                acc += g(k) * s.weight;
                len += s.weight;
            }
        }
        acc * total / len
    }
}

/// Outward normal derivative of a field vanishing on `Γ`, by a second-order
/// one-sided difference along `-ν` at distances `2h` and `4h`.
pub fn normal_derivative(u: &DiscreteField, samples: &[BoundarySample]) -> BoundaryTrace {
    let ell = 2.0 * u.grid.h;
    let mut values = Vec::with_capacity(samples.len());
    let mut valid = Vec::with_capacity(samples.len());
    for s in samples {
        let at = |t: f64| interpolate(u, [s.position[0] - t * s.normal[0], s.position[1] - t * s.normal[1]]);
        match (at(ell), at(2.0 * ell)) {
            (Some(f1), Some(f2)) => {
                let f0 = u.boundary.value(s.position);
                // derivative along -ν of t ↦ u(x - tν)
                let d = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * ell);
                values.push(-d);
                valid.push(true);
            }
            _ => {
                values.push(0.0);
                valid.push(false);
            }
        }
    }
    BoundaryTrace { samples: samples.to_vec(), values, valid }
}

/// Normalized boundary `L^p` norm, `(Σ |g|^p w / |Γ|)^{1/p}`.
pub fn boundary_lp_norm(trace: &BoundaryTrace, g: impl Fn(usize) -> f64, p: Exponent) -> f64 {
    match p {
        Exponent::Infinite => (0..trace.samples.len())
            .filter(|&k| trace.valid[k])
            .map(|k| g(k).abs())
            .fold(0.0, f64::max),
        Exponent::Finite(pv) => (trace.integrate(|k| g(k).abs().powf(pv)) / trace.length()).powf(1.0 / pv),
    }
}

/// `R ‖ν - (x - z)/R‖_{2,Γ}`.
pub fn gauss_map_deviation(samples: &[BoundarySample], z: Point, radius: f64) -> f64 {
    let (mut acc, mut len) = (0.0, 0.0);
    for s in samples {
        let dx = s.normal[0] - (s.position[0] - z[0]) / radius;
        let dy = s.normal[1] - (s.position[1] - z[1]) / radius;
        acc += (dx * dx + dy * dy) * s.weight;
        len += s.weight;
    }
    radius * (acc / len).sqrt()
}

/// Max nodal error against an analytic field.
pub fn max_nodal_error(u: &DiscreteField, exact: &AnalyticField) -> f64 {
    (0..u.grid.len())
        .map(|i| (u.values[i] - exact.value(&u.grid.point(i))).abs())
        .fold(0.0, f64::max)
}

/// Observed order `log2(e(h)/e(h/2))` of successive errors.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
