//! Integral identities and inequality chains evaluated on solved torsion
//! data.
//!
//! Identities are compared with unnormalized integrals. Norms use the
//! normalized measures `dx/|Ω|` and `dS/|Γ|`. Inequalities whose constant is
//! explicit are asserted; the others are reported as monitored ratios whose
//! only assertion is boundedness along a family of domains.

use std::fmt;

use crate::constants::{
    oscillation_bound, weighted_poincare_structural_constant, DomainScalars, Exponent,
    ExponentPair, GradientNorms, PoincareExponents, Regime,
};
use crate::domain::{BoundarySample, Point, StarDomain2D};
use crate::error::{domain_err, Error, Result};
use crate::torsion::{
    boundary_lp_norm, gradient, h_field, hessian, locate_min, normal_derivative, solve_torsion,
    BoundaryTrace, DiscreteField, MatrixField, SolveReport, VectorField,
};

/// Floor in the relative comparison of identity sides.
pub const RESIDUAL_FLOOR: f64 = 1e-12;
/// Absolute slack for inequalities with explicit constants.
pub const EXPLICIT_SLACK: f64 = 1e-9;
/// Largest tolerated max/min spread of a monitored ratio along a family.
pub const FAMILY_SPREAD: f64 = 10.0;

/// `C` in the tolerance `C h` of the divergence identity.
pub const DIVERGENCE_TOL_FACTOR: f64 = 1.28;
/// `C` in the tolerance `C h` of the two Hessian identities.
pub const HESSIAN_IDENTITY_TOL_FACTOR: f64 = 2.56;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Monitored,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Monitored => "monitored",
        })
    }
}

/// How `lhs` and `rhs` are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `|lhs - rhs| <= tol max(|lhs|, |rhs|, floor)`.
    Equal,
    /// `lhs <= rhs + tol` with an absolute `tol`.
    AtMost,
    /// Only the ratio `lhs/rhs` is recorded.
    Ratio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, zero when both sides vanish.
    pub ratio: f64,
    /// `(lhs - rhs) / max(|lhs|, |rhs|, floor)`.
    pub residual: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub status: Status,
}

fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

impl IdentityReport {
    fn build(name: &str, lhs: f64, rhs: f64, tolerance: f64, relation: Relation) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR);
        let residual = (lhs - rhs) / scale;
        let finite = lhs.is_finite() && rhs.is_finite();
        let status = match relation {
            Relation::Equal if finite && (lhs - rhs).abs() <= tolerance * scale => Status::Pass,
            Relation::AtMost if finite && lhs <= rhs + tolerance => Status::Pass,
            Relation::Ratio if lhs.is_finite() && rhs.is_finite() => Status::Monitored,
            _ => Status::Fail,
        };
        Self { name: name.to_string(), lhs, rhs, ratio: ratio_of(lhs, rhs), residual, tolerance, relation, status }
    }

    /// Identity check with a relative tolerance.
    pub fn equality(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name, lhs, rhs, tolerance, Relation::Equal)
    }

    /// Inequality `lhs <= rhs` with absolute slack.
    pub fn at_most(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        Self::build(name, lhs, rhs, slack, Relation::AtMost)
    }

    /// A ratio whose constant is not explicit. Both sides below `tol`
    /// count as a pass (the degenerate `0/0` of a ball).
    pub fn monitored(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut r = Self::build(name, lhs, rhs, tol, Relation::Ratio);
        if lhs.abs() < tol && rhs.abs() < tol {
            r.status = Status::Pass;
            r.ratio = 0.0;
        }
        r
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Everything the checks read, computed once per domain and grid.
#[derive(Debug, Clone)]
pub struct PipelineData {
    pub domain: StarDomain2D,
    pub scalars: DomainScalars,
    /// Grid spacing.
    pub spacing: f64,
    pub u: DiscreteField,
    pub solve: SolveReport,
    /// Located minimum point of `u`.
    pub z: Point,
    /// `h = |x - z|²/2 - u`.
    pub h: DiscreteField,
    pub grad_h: VectorField,
    pub hess_h: MatrixField,
    /// `δ_Γ` at the nodes.
    pub delta: Vec<f64>,
    /// `u_ν` on the boundary samples.
    pub u_normal: BoundaryTrace,
    /// `h_ν = (x - z)·ν - u_ν` on the samples.
    pub h_normal: Vec<f64>,
    /// `|∇h| = |(x - z) - u_ν ν|` on the samples.
    pub grad_h_boundary: Vec<f64>,
    pub h0: f64,
    /// `R = N|Ω|/|Γ|`.
    pub radius: f64,
    pub rho_i: f64,
    pub rho_e: f64,
    /// `‖H - H0‖_{2,Γ}`.
    pub curvature_dev: f64,
}

impl PipelineData {
    /// Solves the torsion problem on `domain` with spacing `spacing` and
    /// derives all fields and traces.
    pub fn run(domain: &StarDomain2D, spacing: f64) -> Result<Self> {
        let scalars = domain.scalars();
        let (u, solve) = solve_torsion(domain, spacing)?;
        let z = locate_min(&u)?;
        let h = h_field(&u, z);
        let grad_h = gradient(&h);
        let hess_h = hessian(&h)?;
        let delta = u.grid.boundary_distances(domain);
        let m = ((8.0 * scalars.surface / spacing).ceil() as usize).max(1024);
        let samples = domain.boundary_sample(m)?;
        let u_normal = normal_derivative(&u, &samples);
        if u_normal.excluded_fraction() > 0.01 {
            return Err(Error::GridTooCoarse(format!(
                "normal derivative unavailable on {:.2}% of the boundary",
                100.0 * u_normal.excluded_fraction()
            )));
        }
        let (h_normal, grad_h_boundary) = boundary_gradient(&u_normal, z);
        let (h0, radius) = domain.h0_and_r();
        let (rho_i, rho_e) = domain.rho_bounds(z)?;
        Ok(Self {
            domain: domain.clone(),
            scalars,
            spacing,
            u,
            solve,
            z,
            h,
            grad_h,
            hess_h,
            delta,
            u_normal,
            h_normal,
            grad_h_boundary,
            h0,
            radius,
            rho_i,
            rho_e,
            curvature_dev: domain.curvature_deviation(),
        })
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.u_normal.samples
    }

    fn dim(&self) -> f64 {
        self.scalars.dim as f64
    }

    /// `∫_Ω g dx` over the nodes with a full Hessian stencil, rescaled to
    /// the whole volume.
    fn integrate_hessian_nodes(&self, g: impl Fn(usize) -> f64) -> f64 {
        let grid = &self.u.grid;
        let (mut acc, mut vol) = (0.0, 0.0);
        for i in 0..grid.len() {
            if self.hess_h.mask[i] {
                acc += g(i) * grid.weights[i];
                vol += grid.weights[i];
            }
        }
        acc * grid.volume / vol
    }

    fn hess_sq(&self) -> Vec<f64> {
        self.hess_h.magnitudes().iter().map(|m| m * m).collect()
    }

    /// `‖δ_Γ^α ∇²h‖_{p,Ω}`.
    pub fn weighted_hessian_norm(&self, alpha: f64, p: Exponent) -> f64 {
        let vals: Vec<f64> = self
            .hess_h
            .magnitudes()
            .iter()
            .zip(&self.delta)
            .map(|(m, d)| d.powf(alpha) * m)
            .collect();
        self.u.grid.lp_norm(&vals, p, Some(&self.hess_h.mask))
    }

    /// `‖∇²h‖_{p,Ω}` (Frobenius norm pointwise).
    pub fn hessian_norm(&self, p: Exponent) -> f64 {
        self.weighted_hessian_norm(0.0, p)
    }

    /// `‖∇h‖_{p,Ω}`; for `p = ∞` the boundary values are included.
    pub fn gradient_norm(&self, p: Exponent) -> f64 {
        let interior = self.u.grid.lp_norm(&self.grad_h.magnitudes(), p, None);
        match p {
            Exponent::Infinite => self.grad_h_boundary.iter().copied().fold(interior, f64::max),
            Exponent::Finite(_) => interior,
        }
    }

    /// `‖u_ν - R‖_{2,Γ}`.
    pub fn serrin_deviation(&self) -> f64 {
        let t = &self.u_normal;
        boundary_lp_norm(t, |k| t.values[k] - self.radius, Exponent::Finite(2.0))
    }

    /// `‖g‖_{p,Γ}` of a per-sample quantity.
    pub fn boundary_norm(&self, values: &[f64], p: Exponent) -> f64 {
        boundary_lp_norm(&self.u_normal, |k| values[k], p)
    }

    /// Relative size of the discretization, used for degenerate-ratio tests.
    fn ratio_floor(&self) -> f64 {
        self.spacing * self.spacing
    }
}

fn boundary_gradient(trace: &BoundaryTrace, z: Point) -> (Vec<f64>, Vec<f64>) {
    trace
        .samples
        .iter()
        .zip(&trace.values)
        .map(|(s, &un)| {
            let d = [s.position[0] - z[0], s.position[1] - z[1]];
            let hn = d[0] * s.normal[0] + d[1] * s.normal[1] - un;
            let g = [d[0] - un * s.normal[0], d[1] - un * s.normal[1]];
            (hn, g[0].hypot(g[1]))
        })
        .unzip()
}

/// `N|Ω| = ∫_Γ u_ν dS`.
pub fn check_divergence_identity(data: &PipelineData) -> IdentityReport {
    let lhs = data.dim() * data.scalars.volume;
    let t = &data.u_normal;
    let rhs = t.integrate(|k| t.values[k]);
    IdentityReport::equality("divergence", lhs, rhs, DIVERGENCE_TOL_FACTOR * data.spacing)
}

/// `u_ν >= r_i` on `Γ`, with slack `h`.
pub fn check_hopf_bound(data: &PipelineData) -> IdentityReport {
    let t = &data.u_normal;
    let min = (0..t.values.len())
        .filter(|&k| t.valid[k])
        .map(|k| t.values[k])
        .fold(f64::INFINITY, f64::min);
    IdentityReport::at_most("hopf", data.scalars.r_i, min, data.spacing)
}

/// `δ_Γ <= -2u/r_i` at every node, with slack `h`.
pub fn check_torsion_depth(data: &PipelineData) -> IdentityReport {
    let r_i = data.scalars.r_i;
    let worst = data
        .delta
        .iter()
        .zip(&data.u.values)
        .map(|(d, u)| d + 2.0 * u / r_i)
        .fold(f64::NEG_INFINITY, f64::max);
    IdentityReport::at_most("torsion_depth", worst, 0.0, data.spacing)
}

/// `(1/(N-1)) ∫_Ω |∇²h|² + (1/R) ∫_Γ (u_ν - R)² = ∫_Γ (H0 - H) u_ν²`.
pub fn check_fundamental_identity(data: &PipelineData) -> IdentityReport {
    let sq = data.hess_sq();
    let t = &data.u_normal;
    let r = data.radius;
    let lhs = data.integrate_hessian_nodes(|i| sq[i]) / (data.dim() - 1.0)
        + t.integrate(|k| (t.values[k] - r).powi(2)) / r;
    let rhs = t.integrate(|k| (data.h0 - t.samples[k].curvature) * t.values[k].powi(2));
    IdentityReport::equality("fundamental", lhs, rhs, HESSIAN_IDENTITY_TOL_FACTOR * data.spacing)
}

/// `∫_Ω (-u) |∇²h|² = ½ ∫_Γ (u_ν² - R²) ∂_ν(u - Q)`.
///
/// This identity holds for `u - Q`, the opposite sign of the stored `h`, so
/// the boundary term uses `-h_ν`.
pub fn check_identity_mp(data: &PipelineData) -> IdentityReport {
    let sq = data.hess_sq();
    let t = &data.u_normal;
    let r = data.radius;
    let lhs = data.integrate_hessian_nodes(|i| -data.u.values[i] * sq[i]);
    let rhs = -0.5 * t.integrate(|k| (t.values[k].powi(2) - r * r) * data.h_normal[k]);
    IdentityReport::equality("weighted_hessian", lhs, rhs, HESSIAN_IDENTITY_TOL_FACTOR * data.spacing)
}

/// Ratio `‖∇h‖_r / ‖δ_Γ^α ∇²h‖_p` for admissible `(r, p, α)`.
pub fn check_weighted_poincare(data: &PipelineData, exps: PoincareExponents) -> Result<IdentityReport> {
    // validates the admissible range
    weighted_poincare_structural_constant(exps, &data.scalars, data.domain.mean_convex(), 1.0)?;
    let lhs = data.gradient_norm(Exponent::new(exps.r)?);
    let rhs = data.weighted_hessian_norm(exps.alpha, Exponent::new(exps.p)?);
    let name = format!("weighted_poincare_r{}_p{}_a{}", exps.r, exps.p, exps.alpha);
    Ok(IdentityReport::monitored(&name, lhs, rhs, data.ratio_floor()))
}

/// `‖∇h‖_r` against the structural weighted Poincaré constant scaled by
/// `calibration_k` times `‖δ_Γ^α ∇²h‖_p`. Monitored, since the true
/// dimensional factor is unknown; a ratio above 1 says the calibration is
/// too small for this domain.
pub fn check_calibrated_poincare(
    data: &PipelineData,
    exps: PoincareExponents,
    calibration_k: f64,
) -> Result<IdentityReport> {
    let constant =
        weighted_poincare_structural_constant(exps, &data.scalars, data.domain.mean_convex(), calibration_k)?;
    let lhs = data.gradient_norm(Exponent::new(exps.r)?);
    let rhs = constant * data.weighted_hessian_norm(exps.alpha, Exponent::new(exps.p)?);
    Ok(IdentityReport::monitored("weighted_poincare_calibrated", lhs, rhs, data.ratio_floor()))
}

fn pair_for(p: Exponent, q: Exponent) -> Result<ExponentPair> {
    match ExponentPair::morrey(p, 2) {
        Ok(pair) => Ok(pair),
        Err(_) => ExponentPair::interpolation(p, q, 2),
    }
}

/// `ρ_e - ρ_i <= (2/r_i) · osc bound of h` in the regime of `p`, using
/// `(r_i/2)(ρ_e - ρ_i) <= max_Γ h - min_Γ h` and the cone condition with
/// aperture `π/4` and height `r_i`. The constant is explicit in every regime.
/// Also reports the Hessian chains as monitored ratios.
pub fn check_oscillation_chain(data: &PipelineData, p: Exponent, q: Exponent) -> Result<Vec<IdentityReport>> {
    let pair = pair_for(p, q)?;
    let norms = GradientNorms { p_norm: data.gradient_norm(p), q_norm: data.gradient_norm(q) };
    let (theta, a) = data.domain.cone_params();
    let bound = oscillation_bound(norms, &pair, theta, a, data.scalars.volume)?;
    let lhs = data.rho_e - data.rho_i;
    let tag = match pair.regime()? {
        Regime::Morrey => format!("oscillation_chain_p{p}"),
        _ => format!("oscillation_chain_p{p}_q{q}"),
    };
    let two = Exponent::Finite(2.0);
    Ok(vec![
        IdentityReport::at_most(&tag, lhs, 2.0 / a * bound, EXPLICIT_SLACK),
        IdentityReport::monitored("rho_vs_hessian_l2", lhs, data.hessian_norm(two), data.ratio_floor()),
        IdentityReport::monitored(
            "rho_vs_weighted_hessian_l2",
            lhs,
            data.weighted_hessian_norm(0.5, two),
            data.ratio_floor(),
        ),
    ])
}

/// `‖∇h‖_∞` against the Hessian norms.
///
/// For `p < N` each directional derivative `h_ℓ` vanishes at `z`, so
/// `|h_ℓ(x)|` is bounded by the oscillation bound of `h_ℓ` with the norms of
/// `∇h_ℓ` replaced by those of `∇²h`; this form is asserted. The two forms
/// with the weighted Hessian are reported as normalized ratios (the
/// `E`-th root of lhs/rhs where `E` is the power of `‖∇h‖_∞`).
pub fn check_grad_infty_bound(data: &PipelineData, p: Exponent, q: Exponent) -> Result<Vec<IdentityReport>> {
    let n = data.dim();
    let (pv, qinv) = (p.value(), q.recip());
    if !(q.recip() < 1.0 / n) {
        return domain_err(format!("need q > N, got q = {q}"));
    }
    let grad_inf = data.gradient_norm(Exponent::Infinite);
    let hess_q = data.hessian_norm(q);
    let mut out = Vec::new();
    if pv < n {
        let pair = ExponentPair::interpolation(p, q, 2)?;
        let norms = GradientNorms { p_norm: data.hessian_norm(p), q_norm: hess_q };
        let (theta, a) = data.domain.cone_params();
        let bound = oscillation_bound(norms, &pair, theta, a, data.scalars.volume)?;
        out.push(IdentityReport::at_most(&format!("grad_infty_p{p}_q{q}"), grad_inf, bound, EXPLICIT_SLACK));
    }
    let floor = data.ratio_floor();
    let gain = 1.0 - n * qinv;
    // ‖∇h‖_∞^{N+p(1-N/q)} <= c |Ω| ‖∇h‖_p^{p(1-N/q)} ‖∇²h‖_q^N
    let e1 = n + pv * gain;
    let rhs1 = (data.scalars.volume * data.gradient_norm(p).powf(pv * gain) * hess_q.powf(n)).powf(1.0 / e1);
    out.push(IdentityReport::monitored(&format!("grad_infty_ratio_p{p}_q{q}"), grad_inf, rhs1, floor));
    if pv < 2.0 * n {
        // ‖∇h‖_∞^{2N-p+2p(1-N/q)} <= c ‖∇²h‖_q^{2N-p} ‖δ^{1/2}∇²h‖_p^{2p(1-N/q)}
        let e2 = 2.0 * n - pv + 2.0 * pv * gain;
        let rhs2 = (hess_q.powf(2.0 * n - pv) * data.weighted_hessian_norm(0.5, p).powf(2.0 * pv * gain))
            .powf(1.0 / e2);
        out.push(IdentityReport::monitored(&format!("grad_infty_weighted_p{p}_q{q}"), grad_inf, rhs2, floor));
    }
    Ok(out)
}

/// Links of the soap-bubble chain. The pointwise `|h_ν| <= |∇h|` on `Γ`
/// makes the second link explicit; the others are monitored.
pub fn check_sbt_chain(data: &PipelineData) -> Vec<IdentityReport> {
    let two = Exponent::Finite(2.0);
    let floor = data.ratio_floor();
    let hess = data.hessian_norm(two);
    let h_nu = data.boundary_norm(&data.h_normal, two);
    let grad_gamma = data.boundary_norm(&data.grad_h_boundary, two);
    let serrin = data.serrin_deviation();
    vec![
        IdentityReport::monitored("hessian_vs_curvature", hess, data.curvature_dev, floor),
        IdentityReport::at_most("h_normal_vs_boundary_gradient", h_nu, grad_gamma, EXPLICIT_SLACK),
        IdentityReport::monitored("boundary_gradient_vs_serrin", grad_gamma, serrin, floor),
        IdentityReport::monitored("serrin_vs_curvature", serrin, data.curvature_dev, floor),
    ]
}

/// Exponents used by [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckExponents {
    /// `p > N` of the explicit oscillation chain.
    pub oscillation_p: Exponent,
    /// Upper exponent `q > N` shared by the interpolation-type checks.
    pub q: Exponent,
    /// `p < N` of the first gradient bound.
    pub gradient_p: Exponent,
    pub poincare: PoincareExponents,
    /// Stand-in for the unspecified factor of the weighted Poincaré constant.
    pub calibration_k: f64,
}

impl Default for CheckExponents {
    fn default() -> Self {
        Self {
            oscillation_p: Exponent::Finite(6.0),
            q: Exponent::Infinite,
            gradient_p: Exponent::Finite(1.0),
            poincare: PoincareExponents { r: 4.0, p: 2.0, alpha: 0.5 },
            calibration_k: 1.0,
        }
    }
}

/// Runs every check. The oscillation chain is evaluated in all three
/// regimes: at `oscillation_p`, at `p = N` and at `p = 1`.
pub fn run_all(data: &PipelineData, exps: &CheckExponents) -> Result<Vec<IdentityReport>> {
    let mut out = vec![
        check_divergence_identity(data),
        check_hopf_bound(data),
        check_torsion_depth(data),
        check_fundamental_identity(data),
        check_identity_mp(data),
        check_weighted_poincare(data, exps.poincare)?,
        check_calibrated_poincare(data, exps.poincare, exps.calibration_k)?,
    ];
    out.extend(check_oscillation_chain(data, exps.oscillation_p, exps.q)?);
    for p in [Exponent::Finite(2.0), Exponent::Finite(1.0)] {
        if p == exps.oscillation_p {
            continue;
        }
        out.push(check_oscillation_chain(data, p, exps.q)?.remove(0));
    }
    out.extend(check_grad_infty_bound(data, exps.gradient_p, exps.q)?);
    out.extend(check_sbt_chain(data));
    Ok(out)
}

/// Boundedness of each monitored ratio along a family: one report per
/// check name with `lhs = max ratio`, `rhs = min ratio`, passing iff
/// `max/min <= 10`. Degenerate (passing `0/0`) entries are skipped.
pub fn check_family_boundedness(runs: &[Vec<IdentityReport>]) -> Vec<IdentityReport> {
    let mut names: Vec<&str> = Vec::new();
    for r in runs.iter().flatten() {
        if r.relation == Relation::Ratio && !names.contains(&r.name.as_str()) {
            names.push(&r.name);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let ratios: Vec<f64> = runs
                .iter()
                .flatten()
                .filter(|r| r.name == name && r.status == Status::Monitored)
                .map(|r| r.ratio)
                .collect();
            let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let label = format!("{name}_family_spread");
            if ratios.is_empty() {
                return IdentityReport::monitored(&label, 0.0, 0.0, 1.0);
            }
            let ok = min > 0.0 && max.is_finite() && max <= FAMILY_SPREAD * min;
            let mut r = IdentityReport::build(&label, max, min, FAMILY_SPREAD, Relation::Ratio);
            r.status = if ok { Status::Pass } else { Status::Fail };
            r
        })
        .collect()
}
