//! Planar star-shaped domains described by a radial function about the origin.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::constants::DomainScalars;
use crate::error::{domain_err, Error, Result};

pub type Point = [f64; 2];

const CHECK_SAMPLES: usize = 4096;
const SEARCH_SAMPLES: usize = 1024;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Radial function `r(φ)` of a star-shaped boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialFunction {
    /// `c0 + Σ_k (cos[k-1] cos kφ + sin[k-1] sin kφ)`.
    Fourier { c0: f64, cos: Vec<f64>, sin: Vec<f64> },
    /// Ellipse with semi-axes `a` (along direction `angle`) and `b`, centered at the origin.
    Ellipse { a: f64, b: f64, angle: f64 },
}

impl RadialFunction {
    /// `(r, r', r'')` at `φ`.
    pub fn eval(&self, phi: f64) -> (f64, f64, f64) {
        match self {
            RadialFunction::Fourier { c0, cos, sin } => {
                let (mut r, mut d1, mut d2) = (*c0, 0.0, 0.0);
                let n = cos.len().max(sin.len());
                for i in 0..n {
                    let k = (i + 1) as f64;
                    let a = cos.get(i).copied().unwrap_or(0.0);
                    let b = sin.get(i).copied().unwrap_or(0.0);
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    let (s, c) = (k * phi).sin_cos();
                    r += a * c + b * s;
                    d1 += k * (-a * s + b * c);
                    d2 -= k * k * (a * c + b * s);
                }
                (r, d1, d2)
            }
            RadialFunction::Ellipse { a, b, angle } => {
                let psi = phi - angle;
                let (s, c) = psi.sin_cos();
                let (s2, c2) = (2.0 * psi).sin_cos();
                let dd = b * b * c * c + a * a * s * s;
                let d1 = (a * a - b * b) * s2;
                let d2 = 2.0 * (a * a - b * b) * c2;
                let ab = a * b;
                let r = ab / dd.sqrt();
                let r1 = -0.5 * ab * dd.powf(-1.5) * d1;
                let r2 = 0.75 * ab * dd.powf(-2.5) * d1 * d1 - 0.5 * ab * dd.powf(-1.5) * d2;
                (r, r1, r2)
            }
        }
    }

    fn rotated(&self, alpha: f64) -> Self {
        match self {
            RadialFunction::Fourier { c0, cos, sin } => {
                let n = cos.len().max(sin.len());
                let mut nc = vec![0.0; n];
                let mut ns = vec![0.0; n];
                for i in 0..n {
                    let k = (i + 1) as f64;
                    let a = cos.get(i).copied().unwrap_or(0.0);
                    let b = sin.get(i).copied().unwrap_or(0.0);
                    let (s, c) = (k * alpha).sin_cos();
                    nc[i] = a * c - b * s;
                    ns[i] = a * s + b * c;
                }
                RadialFunction::Fourier { c0: *c0, cos: nc, sin: ns }
            }
            RadialFunction::Ellipse { a, b, angle } => {
                RadialFunction::Ellipse { a: *a, b: *b, angle: angle + alpha }
            }
        }
    }

    fn scaled(&self, lambda: f64) -> Self {
        match self {
            RadialFunction::Fourier { c0, cos, sin } => RadialFunction::Fourier {
                c0: lambda * c0,
                cos: cos.iter().map(|v| lambda * v).collect(),
                sin: sin.iter().map(|v| lambda * v).collect(),
            },
            RadialFunction::Ellipse { a, b, angle } => {
                RadialFunction::Ellipse { a: lambda * a, b: lambda * b, angle: *angle }
            }
        }
    }
}

/// One point of a discretized boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub phi: f64,
    pub position: Point,
    pub normal: Point,
    pub curvature: f64,
    /// Arclength weight `√(r² + r'²) Δφ`.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cached {
    perimeter: f64,
    diameter: f64,
    r_i: f64,
    r_e: f64,
    inradius: f64,
    kappa_min: f64,
    kappa_max: f64,
}

/// A bounded star-shaped planar domain `{ρ(cos φ, sin φ) : ρ < r(φ)}`.
#[derive(Debug, Clone)]
pub struct StarDomain2D {
    radial: RadialFunction,
    ring: Vec<Point>,
    cache: OnceLock<Cached>,
}

impl PartialEq for StarDomain2D {
    fn eq(&self, other: &Self) -> bool {
        self.radial == other.radial
    }
}

impl StarDomain2D {
    pub fn new(radial: RadialFunction) -> Result<Self> {
        if let RadialFunction::Ellipse { a, b, .. } = radial {
            if !(a > 0.0 && b > 0.0) {
                return domain_err(format!("ellipse semi-axes must be positive: {a}, {b}"));
            }
        }
        for i in 0..CHECK_SAMPLES {
            let phi = 2.0 * PI * i as f64 / CHECK_SAMPLES as f64;
            let (r, _, _) = radial.eval(phi);
            if !(r > 0.0) || !r.is_finite() {
                return domain_err(format!("radial function is {r} at phi = {phi}"));
            }
        }
        let ring = (0..SEARCH_SAMPLES)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / SEARCH_SAMPLES as f64;
                let (r, _, _) = radial.eval(phi);
                [r * phi.cos(), r * phi.sin()]
            })
            .collect();
        Ok(Self { radial, ring, cache: OnceLock::new() })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(RadialFunction::Fourier { c0: radius, cos: vec![], sin: vec![] })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(RadialFunction::Ellipse { a, b, angle: 0.0 })
    }

    /// `r(φ) = 1 + ε cos kφ`.
    pub fn cosine(eps: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return domain_err("mode number must be at least 1");
        }
        let mut cos = vec![0.0; k];
        cos[k - 1] = eps;
        Self::new(RadialFunction::Fourier { c0: 1.0, cos, sin: vec![] })
    }

    pub fn fourier(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(RadialFunction::Fourier { c0, cos, sin })
    }

    pub fn radial(&self) -> &RadialFunction {
        &self.radial
    }

    /// The domain rotated by `alpha` about the origin.
    pub fn rotated(&self, alpha: f64) -> Result<Self> {
        Self::new(self.radial.rotated(alpha))
    }

    /// The domain dilated by `lambda > 0` about the origin.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return domain_err("scale factor must be positive");
        }
        Self::new(self.radial.scaled(lambda))
    }

    pub fn radius_at(&self, phi: f64) -> f64 {
        self.radial.eval(phi).0
    }

    pub fn boundary_point(&self, phi: f64) -> Point {
        let r = self.radius_at(phi);
        [r * phi.cos(), r * phi.sin()]
    }

    /// Full boundary data at parameter `φ` with arclength weight `dphi`.
    pub fn sample_at(&self, phi: f64, dphi: f64) -> BoundarySample {
        let (r, r1, r2) = self.radial.eval(phi);
        let (s, c) = phi.sin_cos();
        let speed = (r * r + r1 * r1).sqrt();
        BoundarySample {
            phi,
            position: [r * c, r * s],
            normal: [(r * c + r1 * s) / speed, (r * s - r1 * c) / speed],
            curvature: (r * r + 2.0 * r1 * r1 - r * r2) / speed.powi(3),
            weight: speed * dphi,
        }
    }

    /// `m` samples uniform in `φ`.
    pub fn boundary_sample(&self, m: usize) -> Result<Vec<BoundarySample>> {
        if m < 64 {
            return domain_err(format!("need at least 64 boundary samples, got {m}"));
        }
        let dphi = 2.0 * PI / m as f64;
        Ok((0..m).map(|i| self.sample_at(i as f64 * dphi, dphi)).collect())
    }

    /// Open membership test.
    pub fn contains(&self, p: Point) -> bool {
        let rho = p[0].hypot(p[1]);
        rho < self.radius_at(p[1].atan2(p[0]))
    }

    /// `½ ∫ r² dφ` in closed form.
    pub fn area(&self) -> f64 {
        match &self.radial {
            RadialFunction::Fourier { c0, cos, sin } => {
                let s: f64 = cos.iter().chain(sin).map(|v| v * v).sum();
                PI * (c0 * c0 + 0.5 * s)
            }
            RadialFunction::Ellipse { a, b, .. } => PI * a * b,
        }
    }

    fn cached(&self) -> &Cached {
        self.cache.get_or_init(|| self.compute_cache())
    }

    fn compute_cache(&self) -> Cached {
        let m = CHECK_SAMPLES;
        let dphi = 2.0 * PI / m as f64;
        let mut speed_sum = 0.0;
        let mut kappa_min = f64::INFINITY;
        let mut kappa_max = f64::NEG_INFINITY;
        for i in 0..m {
            let b = self.sample_at(i as f64 * dphi, dphi);
            let (r, r1, _) = self.radial.eval(b.phi);
            speed_sum += r.hypot(r1);
            kappa_min = kappa_min.min(b.curvature);
            kappa_max = kappa_max.max(b.curvature);
        }
        let perimeter = speed_sum * dphi;
        let diameter = self.compute_diameter();
        let inradius = self.compute_inradius();
        let r_i = self.interior_radius(inradius, kappa_max);
        let r_e = self.exterior_radius(diameter, kappa_min);
        Cached { perimeter, diameter, r_i, r_e, inradius, kappa_min, kappa_max }
    }

    /// `∫ √(r² + r'²) dφ` by the periodic trapezoid rule.
    pub fn perimeter(&self) -> f64 {
        self.cached().perimeter
    }

    pub fn diameter(&self) -> f64 {
        self.cached().diameter
    }

    /// Largest distance from a point of `Ω` to `Γ`.
    pub fn inradius(&self) -> f64 {
        self.cached().inradius
    }

    pub fn max_curvature(&self) -> f64 {
        self.cached().kappa_max
    }

    pub fn min_curvature(&self) -> f64 {
        self.cached().kappa_min
    }

    /// Convex boundary (non-negative curvature everywhere) in the plane.
    pub fn mean_convex(&self) -> bool {
        self.min_curvature() >= 0.0
    }

    /// `(H0, R)` with `R = 2|Ω|/|Γ|`.
    pub fn h0_and_r(&self) -> (f64, f64) {
        let r = 2.0 * self.area() / self.perimeter();
        (1.0 / r, r)
    }

    /// Radii of the uniform interior and exterior touching balls.
    pub fn ball_radii(&self) -> (f64, f64) {
        let c = self.cached();
        (c.r_i, c.r_e)
    }

    /// Aperture and height of the uniform interior cone condition.
    pub fn cone_params(&self) -> (f64, f64) {
        (PI / 4.0, self.cached().r_i)
    }

    pub fn scalars(&self) -> DomainScalars {
        let c = self.cached();
        DomainScalars {
            dim: 2,
            volume: self.area(),
            surface: c.perimeter,
            diameter: c.diameter,
            r_i: c.r_i,
            r_e: c.r_e,
            inradius: c.inradius,
        }
    }

    /// Normalized boundary `L²` norm of `H - H0`.
    pub fn curvature_deviation(&self) -> f64 {
        self.curvature_deviation_with(1 << 14)
    }

    pub fn curvature_deviation_with(&self, m: usize) -> f64 {
        let (h0, _) = self.h0_and_r();
        let dphi = 2.0 * PI / m as f64;
        let (mut acc, mut len) = (0.0, 0.0);
        for i in 0..m {
            let b = self.sample_at(i as f64 * dphi, dphi);
            acc += (b.curvature - h0).powi(2) * b.weight;
            len += b.weight;
        }
        (acc / len).sqrt()
    }

    fn dist2(&self, phi: f64, x: Point) -> f64 {
        let p = self.boundary_point(phi);
        (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)
    }

    /// Distance from `x` to the boundary, accurate to about `1e-10`.
    pub fn delta_gamma(&self, x: Point) -> f64 {
        self.refined_extreme(x, false).sqrt()
    }

    /// Squared distance extreme (`max = false` for the minimum).
    fn refined_extreme(&self, x: Point, max: bool) -> f64 {
        let m = self.ring.len();
        let sign = if max { -1.0 } else { 1.0 };
        let d: Vec<f64> = self
            .ring
            .iter()
            .map(|p| sign * ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)))
            .collect();
        let mut cands: Vec<usize> = (0..m)
            .filter(|&j| d[j] <= d[(j + m - 1) % m] && d[j] <= d[(j + 1) % m])
            .collect();
        cands.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
        cands.truncate(8);
        let dphi = 2.0 * PI / m as f64;
        let mut best = f64::INFINITY;
        for j in cands {
            let centre = j as f64 * dphi;
            let v = golden_min(|phi| sign * self.dist2(phi, x), centre - dphi, centre + dphi);
            best = best.min(v.min(d[j]));
        }
        sign * best
    }

    /// `(ρ_i, ρ_e)`: smallest and largest distance from `z` to `Γ`.
    pub fn rho_bounds(&self, z: Point) -> Result<(f64, f64)> {
        if !self.contains(z) {
            return domain_err(format!("point {z:?} is not inside the domain"));
        }
        Ok((self.refined_extreme(z, false).sqrt(), self.refined_extreme(z, true).sqrt()))
    }

    fn compute_diameter(&self) -> f64 {
        let pts = &self.ring;
        let m = pts.len();
        let stride = 2;
        let (mut bi, mut bj, mut best) = (0, 0, 0.0);
        for i in (0..m).step_by(stride) {
            for j in (i + 1..m).step_by(stride) {
                let d = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
                if d > best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        let dphi = 2.0 * PI / m as f64;
        let (mut a, mut b) = (bi as f64 * dphi, bj as f64 * dphi);
        let span = stride as f64 * dphi;
        for _ in 0..6 {
            let pb = self.boundary_point(b);
            a = golden_argmin(|t| -self.dist2(t, pb), a - span, a + span);
            let pa = self.boundary_point(a);
            b = golden_argmin(|t| -self.dist2(t, pa), b - span, b + span);
        }
        self.dist2(a, self.boundary_point(b)).sqrt()
    }

    fn compute_inradius(&self) -> f64 {
        // Coarse search over the polar grid, then a shrinking compass search.
        let mut best = ([0.0, 0.0], self.delta_gamma([0.0, 0.0]));
        let nr = 24;
        let na = 48;
        for i in 1..nr {
            for j in 0..na {
                let phi = 2.0 * PI * j as f64 / na as f64;
                let rho = self.radius_at(phi) * i as f64 / nr as f64;
                let p = [rho * phi.cos(), rho * phi.sin()];
                let d = self.delta_gamma(p);
                if d > best.1 {
                    best = (p, d);
                }
            }
        }
        let mut step = 0.5 * self.radius_at(0.0) / nr as f64;
        while step > 1e-10 {
            let mut moved = false;
            for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.7071, 0.7071], [-0.7071, 0.7071], [0.7071, -0.7071], [-0.7071, -0.7071]] {
                let p = [best.0[0] + step * dir[0], best.0[1] + step * dir[1]];
                if !self.contains(p) {
                    continue;
                }
                let d = self.delta_gamma(p);
                if d > best.1 {
                    best = (p, d);
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best.1
    }

    /// Largest `r` such that each ball of radius `r` tangent from inside at a
    /// boundary sample stays in `Ω`, found by bisection, and never above
    /// `1/κ_max`.
    fn interior_radius(&self, inradius: f64, kappa_max: f64) -> f64 {
        let samples = self.boundary_sample(SEARCH_SAMPLES).expect("enough samples");
        let fits = |r: f64| {
            samples.iter().all(|b| {
                let c = [b.position[0] - r * b.normal[0], b.position[1] - r * b.normal[1]];
                self.contains(c) && self.delta_gamma(c) >= r * (1.0 - 1e-9)
            })
        };
        let hi = inradius.min(1.0 / kappa_max.max(1e-300));
        bisect_largest(fits, hi)
    }

    /// Same for exterior balls, capped at the diameter.
    fn exterior_radius(&self, diameter: f64, kappa_min: f64) -> f64 {
        let samples = self.boundary_sample(SEARCH_SAMPLES).expect("enough samples");
        let fits = |r: f64| {
            samples.iter().all(|b| {
                let c = [b.position[0] + r * b.normal[0], b.position[1] + r * b.normal[1]];
                !self.contains(c) && self.delta_gamma(c) >= r * (1.0 - 1e-9)
            })
        };
        let hi = if kappa_min < 0.0 { diameter.min(-1.0 / kappa_min) } else { diameter };
        bisect_largest(fits, hi)
    }
}

/// Largest `r ∈ (0, hi]` with `fits(r)`, assuming `fits` is monotone.
fn bisect_largest(fits: impl Fn(f64) -> bool, hi: f64) -> f64 {
    if fits(hi) {
        return hi;
    }
    let (mut lo, mut up) = (0.0, hi);
    while up - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + up);
        if fits(mid) {
            lo = mid;
        } else {
            up = mid;
        }
    }
    lo
}

fn golden_argmin(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let t = golden_argmin(&f, a, b);
    f(t)
}

/// Checks a domain against the elementary scalar inequalities.
pub fn check_scalars(domain: &StarDomain2D) -> Result<DomainScalars> {
    let s = domain.scalars();
    s.check_invariants(1e-8)?;
    if s.surface.powi(2) < 4.0 * PI * s.volume * (1.0 - 1e-10) {
        return Err(Error::DegenerateGeometry("isoperimetric inequality fails".into()));
    }
    Ok(s)
}

/// Fixed set of test domains for the domain-level checks.
pub fn domain_catalog() -> Result<Vec<(&'static str, StarDomain2D)>> {
    Ok(vec![
        ("disk", StarDomain2D::disk(1.0)?),
        ("ellipse_eps0.2", StarDomain2D::ellipse(1.2, 1.0 / 1.2)?),
        ("ellipse_2_1", StarDomain2D::ellipse(2.0, 1.0)?),
        ("ellipse_tilted", StarDomain2D::new(RadialFunction::Ellipse { a: 1.4, b: 0.9, angle: 0.5 })?),
        ("cosine_k2_eps0.05", StarDomain2D::cosine(0.05, 2)?),
        ("cosine_k3_eps0.1", StarDomain2D::cosine(0.1, 3)?),
        ("cosine_k5_eps0.03", StarDomain2D::cosine(0.03, 5)?),
        ("fourier_mix", StarDomain2D::fourier(1.0, vec![0.04, 0.06, 0.02], vec![0.0, 0.03, 0.01])?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(StarDomain2D::cosine(1.2, 2).is_err());
        assert!(StarDomain2D::ellipse(0.0, 1.0).is_err());
    }

    #[test]
    fn ellipse_derivatives_match_differences() {
        let r = RadialFunction::Ellipse { a: 2.0, b: 0.7, angle: 0.4 };
        let h = 1e-5;
        for i in 0..50 {
            let phi = 0.13 * i as f64;
            let (_, r1, r2) = r.eval(phi);
            let (rp, r1p, _) = r.eval(phi + h);
            let (rm, r1m, _) = r.eval(phi - h);
            assert!((r1 - (rp - rm) / (2.0 * h)).abs() < 1e-7);
            assert!((r2 - (r1p - r1m) / (2.0 * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn rotation_preserves_shape() {
        let d = StarDomain2D::fourier(1.0, vec![0.1, 0.05], vec![0.0, 0.03]).unwrap();
        let r = d.rotated(0.7).unwrap();
        for i in 0..20 {
            let phi = 0.3 * i as f64;
            assert!((d.radius_at(phi) - r.radius_at(phi + 0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn contains_is_open() {
        let d = StarDomain2D::disk(1.0).unwrap();
        assert!(d.contains([0.5, 0.5]));
        assert!(!d.contains([1.0, 0.0]));
    }
}
