//! Closed-form constants, exponents and stability profiles.
//!
//! Everything here is a pure function of its arguments. Constants for the
//! interpolating oscillation estimates are never tabulated: they are produced
//! by replaying the splitting argument (inner ball of radius `σ`, outer shell)
//! and minimizing the resulting two-term expression over `σ`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{domain_err, Error, Result};
use crate::special::{beta, ln_gamma};

/// A Lebesgue exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Exponent::Infinite);
        }
        if !(p >= 1.0) || !p.is_finite() {
            return domain_err(format!("exponent {p} is not in [1, inf]"));
        }
        Ok(Exponent::Finite(p))
    }

    /// `1/p`, zero for `p = ∞`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    /// The value as a float, `f64::INFINITY` for `p = ∞`.
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// Hölder conjugate `p' = p/(p-1)`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinite,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "INF" | "∞" => Ok(Exponent::Infinite),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| Error::Domain(format!("cannot parse exponent '{t}'")))?;
                Exponent::new(p)
            }
        }
    }
}

/// Which of the three estimates a pair of exponents selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `p > N`: Morrey-type bound, `q` unused.
    Morrey,
    /// `1 ≤ p < N < q`: power-type interpolation.
    Interpolation,
    /// `p = N < q`: logarithmic interpolation.
    Logarithmic,
}

/// Exponents `p`, `q` together with the ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    pub p: Exponent,
    pub q: Exponent,
    pub dim: usize,
}

impl ExponentPair {
    /// A pair for the interpolation estimates, `1 ≤ p ≤ N < q ≤ ∞`.
    pub fn interpolation(p: Exponent, q: Exponent, dim: usize) -> Result<Self> {
        let pair = Self { p, q, dim };
        match pair.regime()? {
            Regime::Morrey => domain_err(format!("p = {p} exceeds N = {dim}")),
            _ => Ok(pair),
        }
    }

    /// A pair for the Morrey estimate, `p > N`; `q` is set to `∞`.
    pub fn morrey(p: Exponent, dim: usize) -> Result<Self> {
        let pair = Self { p, q: Exponent::Infinite, dim };
        match pair.regime()? {
            Regime::Morrey => Ok(pair),
            _ => domain_err(format!("Morrey bound needs p > N, got p = {p}, N = {dim}")),
        }
    }

    pub fn regime(&self) -> Result<Regime> {
        let n = self.dim as f64;
        if self.dim < 2 {
            return domain_err("dimension must be at least 2");
        }
        if self.q.value() <= n {
            return domain_err(format!("q = {} must exceed N = {}", self.q, self.dim));
        }
        let p = self.p.value();
        if p > n {
            Ok(Regime::Morrey)
        } else if p == n {
            Ok(Regime::Logarithmic)
        } else {
            Ok(Regime::Interpolation)
        }
    }
}

/// A finite right spherical cone with vertex, unit axis, half-aperture and height.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    pub vertex: Vec<f64>,
    pub axis: Vec<f64>,
    pub theta: f64,
    pub height: f64,
}

impl ConeSpec {
    pub fn new(vertex: Vec<f64>, axis: Vec<f64>, theta: f64, height: f64) -> Result<Self> {
        if vertex.len() != axis.len() || vertex.len() < 2 {
            return domain_err("vertex and axis must share a dimension ≥ 2");
        }
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return domain_err(format!("axis has length {norm}, expected 1"));
        }
        check_theta(theta)?;
        if !(height > 0.0) || !height.is_finite() {
            return domain_err(format!("cone height {height} must be positive"));
        }
        Ok(Self { vertex, axis, theta, height })
    }

    pub fn dim(&self) -> usize {
        self.vertex.len()
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= PI / 2.0 + 1e-15) {
        return domain_err(format!("aperture {theta} not in (0, pi/2]"));
    }
    Ok(())
}

/// Geometric scalars of a domain `Ω ⊂ R^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainScalars {
    pub dim: usize,
    pub volume: f64,
    pub surface: f64,
    pub diameter: f64,
    pub r_i: f64,
    pub r_e: f64,
    pub inradius: f64,
}

impl DomainScalars {
    /// Checks the elementary inequalities tying the scalars together,
    /// with relative slack `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let n = self.dim as f64;
        let ball = unit_ball_volume(self.dim);
        let le = |a: f64, b: f64| a <= b * (1.0 + tol) + tol;
        let checks = [
            (le(ball * self.inradius.powf(n), self.volume), "|B| r^N <= |Omega|"),
            (le(self.volume, ball * self.diameter.powf(n)), "|Omega| <= |B| d^N"),
            (
                le(n * ball * self.inradius.powf(n - 1.0), self.surface),
                "N|B| r^(N-1) <= |Gamma|",
            ),
            (le(self.surface, n * self.volume / self.r_i), "|Gamma| <= N|Omega|/r_i"),
            (le(self.r_i, self.inradius), "r_i <= inradius"),
            (le(self.inradius, self.diameter / 2.0), "inradius <= d/2"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::DegenerateGeometry(format!("scalar invariant fails: {what}")));
            }
        }
        Ok(())
    }
}

/// One named constant with its inputs, for tabulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantReport {
    pub name: String,
    pub value: f64,
    pub inputs: Vec<(String, f64)>,
    pub provenance: String,
}

impl ConstantReport {
    fn new(name: &str, value: f64, inputs: &[(&str, f64)], provenance: &str) -> Self {
        Self {
            name: name.to_string(),
            value,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            provenance: provenance.to_string(),
        }
    }

    /// Inputs rendered as `k=v` pairs separated by `;`.
    pub fn inputs_string(&self) -> String {
        self.inputs
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_float(*v)))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Fixed float formatting shared by every CSV writer.
pub fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.12e}")
    }
}

/// Euler's beta function.
pub fn euler_beta(x: f64, y: f64) -> Result<f64> {
    beta(x, y)
}

/// Volume of the unit ball in `R^N`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    (0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)).exp()
}

/// `∫_0^θ sin^k φ dφ` by the reduction formula.
fn sine_power_integral(k: usize, theta: f64) -> f64 {
    match k {
        0 => theta,
        1 => 1.0 - theta.cos(),
        _ => {
            let kf = k as f64;
            -theta.sin().powi(k as i32 - 1) * theta.cos() / kf
                + (kf - 1.0) / kf * sine_power_integral(k - 2, theta)
        }
    }
}

/// `(N-1)`-measure of the spherical cap `{ω : ⟨ω, e⟩ > cos θ}`.
pub fn cap_measure(theta: f64, dim: usize) -> Result<f64> {
    check_theta(theta)?;
    if dim < 2 {
        return domain_err("dimension must be at least 2");
    }
    // |S^{N-2}| ∫_0^θ sin^{N-2}
    let sphere = if dim == 2 {
        2.0
    } else {
        let k = (dim - 1) as f64;
        2.0 * (0.5 * k * PI.ln() - ln_gamma(0.5 * k)).exp()
    };
    Ok(sphere * sine_power_integral(dim - 2, theta))
}

/// Lebesgue measure of a cone, `|S_θ| a^N / N`.
pub fn cone_measure(spec: &ConeSpec) -> Result<f64> {
    let dim = spec.dim();
    Ok(cap_measure(spec.theta, dim)? * spec.height.powi(dim as i32) / dim as f64)
}

/// The interpolation exponent `p(q-N)/(N(q-p))`, equal to `p/N` for `q = ∞`.
pub fn alpha_pq(pair: &ExponentPair) -> Result<f64> {
    if pair.regime()? == Regime::Morrey {
        return domain_err("alpha needs p <= N");
    }
    let n = pair.dim as f64;
    let p = pair.p.value();
    Ok(match pair.q {
        Exponent::Infinite => p / n,
        Exponent::Finite(q) => p * (q - n) / (n * (q - p)),
    })
}

/// `β(1 - p'/N', p'+1)^{1/p'}` and `p'`, shared by both Morrey constants.
fn morrey_beta_factor(p: Exponent, dim: usize) -> Result<(f64, f64)> {
    let n = dim as f64;
    if dim < 2 {
        return domain_err("dimension must be at least 2");
    }
    if p.value() <= n {
        return domain_err(format!("Morrey constant needs p > N, got p = {p}, N = {dim}"));
    }
    let pc = p.conjugate().value();
    let nc = n / (n - 1.0);
    let b = euler_beta(1.0 - pc / nc, pc + 1.0)?;
    Ok((b.powf(1.0 / pc), pc))
}

/// Cone Morrey constant `(a/N) β(1 - p'/N', p'+1)^{1/p'}`.
pub fn morrey_cone_constant(p: Exponent, dim: usize, height: f64) -> Result<f64> {
    if !(height > 0.0) {
        return domain_err("cone height must be positive");
    }
    let (b, _) = morrey_beta_factor(p, dim)?;
    Ok(height / dim as f64 * b)
}

/// Domain Morrey constant `k(N,p,θ) = β^{1/p'} / (N^{1/p'} |S_θ|^{1/p})`.
pub fn morrey_domain_constant(p: Exponent, dim: usize, theta: f64) -> Result<f64> {
    let (b, pc) = morrey_beta_factor(p, dim)?;
    let cap = cap_measure(theta, dim)?;
    Ok(b / (dim as f64).powf(1.0 / pc) / cap.powf(p.recip()))
}

/// How the two-term objective depends on the splitting radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeMode {
    /// `A (σ/a)^{e_A} + B (σ/a)^{e_B}` on `(0, a]`, with `e_A > 0 > e_B`.
    Power,
    /// `A (σ/a)^{e_A} + B log(a/σ)` on `(0, a/e]`, with `e_A > 0`.
    Log,
}

/// Minimizer and minimum of a two-term objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTermMin {
    pub sigma: f64,
    pub value: f64,
}

/// Evaluates the two-term objective at `σ`.
pub fn two_term_objective(
    coef_a: f64,
    coef_b: f64,
    exp_a: f64,
    exp_b: f64,
    height: f64,
    mode: MinimizeMode,
    sigma: f64,
) -> f64 {
    let t = sigma / height;
    let first = if coef_a == 0.0 { 0.0 } else { coef_a * t.powf(exp_a) };
    let second = match mode {
        MinimizeMode::Power => {
            if coef_b == 0.0 { 0.0 } else { coef_b * t.powf(exp_b) }
        }
        MinimizeMode::Log => {
            if coef_b == 0.0 { 0.0 } else { -coef_b * t.ln() }
        }
    };
    first + second
}

/// Minimizes the two-term objective over the admissible range of `σ`.
///
/// In the variable `s = log(σ/a)` both objectives are convex, so the
/// minimizer is the zero of the derivative clamped to the admissible range.
pub fn two_term_minimize(
    coef_a: f64,
    coef_b: f64,
    exp_a: f64,
    exp_b: f64,
    height: f64,
    mode: MinimizeMode,
) -> Result<TwoTermMin> {
    if !(coef_a >= 0.0 && coef_b >= 0.0) || !coef_a.is_finite() || !coef_b.is_finite() {
        return domain_err(format!("coefficients must be finite and non-negative: {coef_a}, {coef_b}"));
    }
    if !(height > 0.0) {
        return domain_err("range bound must be positive");
    }
    if !(exp_a > 0.0) {
        return domain_err(format!("leading exponent {exp_a} must be positive"));
    }
    if mode == MinimizeMode::Power && !(exp_b < 0.0) {
        return domain_err(format!("trailing exponent {exp_b} must be negative"));
    }
    if coef_a == 0.0 && coef_b == 0.0 {
        return Ok(TwoTermMin { sigma: height, value: 0.0 });
    }
    let s_max = match mode {
        MinimizeMode::Power => 0.0,
        MinimizeMode::Log => -1.0,
    };
    if coef_b == 0.0 {
        // Only the decaying term is left; the infimum sits at σ → 0.
        return Ok(TwoTermMin { sigma: 0.0, value: 0.0 });
    }
    let s_star = if coef_a == 0.0 {
        s_max
    } else {
        let s = match mode {
            // A e_A e^{e_A s} = -B e_B e^{e_B s}
            MinimizeMode::Power => {
                ((-coef_b * exp_b) / (coef_a * exp_a)).ln() / (exp_a - exp_b)
            }
            // A e_A e^{e_A s} = B
            MinimizeMode::Log => (coef_b / (coef_a * exp_a)).ln() / exp_a,
        };
        s.min(s_max)
    };
    let sigma = height * s_star.exp();
    let value = two_term_objective(coef_a, coef_b, exp_a, exp_b, height, mode, sigma);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("two-term minimum is not finite ({value})")));
    }
    Ok(TwoTermMin { sigma, value })
}

/// Hölder factor `[N(q-1)/(q-N)]^{1-1/q}` of the inner ball term (`N` for `q = ∞`).
fn inner_factor(q: Exponent, n: f64) -> f64 {
    match q {
        Exponent::Infinite => n,
        Exponent::Finite(q) => (n * (q - 1.0) / (q - n)).powf(1.0 - 1.0 / q),
    }
}

/// Hölder factor `[N(p-1)/(N-p)]^{1-1/p}` of the outer shell term (`1` for `p = 1`).
fn outer_factor(p: f64, n: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else {
        (n * (p - 1.0) / (n - p)).powf(1.0 - 1.0 / p)
    }
}

/// Normalized gradient norms `‖∇f‖_p` and `‖∇f‖_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientNorms {
    pub p_norm: f64,
    pub q_norm: f64,
}

/// Upper bound for `a^{N-1} ∫_C |∇f(y)| |y-x|^{1-N} dμ_y` on a cone of
/// height `a` from the normalized norms on that cone.
///
/// The cone is split at radius `σ`. Hölder's inequality with exponent `q`
/// on the inner part and `p` on the outer shell gives a two-term expression
/// in `t = σ/a`, which is minimized. For `p = N` the outer term is
/// logarithmic and `t` is restricted to `(0, 1/e]`.
pub fn riesz_interpolation_bound(norms: GradientNorms, pair: &ExponentPair) -> Result<TwoTermMin> {
    check_norms(norms)?;
    let n = pair.dim as f64;
    let gamma = 1.0 - n * pair.q.recip();
    match pair.regime()? {
        Regime::Morrey => domain_err("interpolation bound needs p <= N"),
        Regime::Interpolation => {
            let p = pair.p.value();
            two_term_minimize(
                inner_factor(pair.q, n) * norms.q_norm,
                outer_factor(p, n) * norms.p_norm,
                gamma,
                1.0 - n / p,
                1.0,
                MinimizeMode::Power,
            )
        }
        Regime::Logarithmic => {
            let ratio = match pair.q {
                Exponent::Infinite => 1.0,
                Exponent::Finite(q) => (q - 1.0) / (q - n),
            };
            let m = two_term_minimize(
                ratio * norms.q_norm,
                norms.p_norm,
                gamma,
                0.0,
                1.0,
                MinimizeMode::Log,
            )?;
            Ok(TwoTermMin { sigma: m.sigma, value: n * m.value })
        }
    }
}

/// Closed form of the logarithmic case,
/// `N q/(q-N) ‖∇f‖_N log(e ‖∇f‖_q / (q' ‖∇f‖_N))`, bounding the same
/// quantity as [`riesz_interpolation_bound`] for `p = N`.
pub fn log_interpolation_closed_form(norms: GradientNorms, pair: &ExponentPair) -> Result<f64> {
    check_norms(norms)?;
    if pair.regime()? != Regime::Logarithmic {
        return domain_err("closed logarithmic form needs p = N");
    }
    if norms.p_norm == 0.0 {
        return Ok(0.0);
    }
    let n = pair.dim as f64;
    let (lead, qc) = match pair.q {
        Exponent::Infinite => (1.0, 1.0),
        Exponent::Finite(q) => (q / (q - n), q / (q - 1.0)),
    };
    Ok(n * lead * norms.p_norm * (E * norms.q_norm / (qc * norms.p_norm)).ln())
}

fn check_norms(norms: GradientNorms) -> Result<()> {
    if !(norms.p_norm >= 0.0 && norms.q_norm >= 0.0)
        || !norms.p_norm.is_finite()
        || !norms.q_norm.is_finite()
    {
        return domain_err(format!("norms must be finite and non-negative: {norms:?}"));
    }
    Ok(())
}

/// Bound on `|f(x) - f_Ω|` for every `x` in a domain satisfying the uniform
/// interior cone condition with aperture `θ` and height `a`, from normalized
/// norms over the domain; twice this bounds the oscillation of `f`.
///
/// The returned value is the oscillation bound, i.e. the sum of the bounds
/// at two points.
///
/// * `p > N`: `2 k(N,p,θ) a^{1-N/p} |Ω|^{1/p} ‖∇f‖_p`.
/// * `p < N`: `2 (a/N) min_σ[...]` with the norms on the cone replaced by
///   `(|Ω|/|C|)^{1/r} ‖∇f‖_r`.
/// * `p = N`: the logarithmic analogue.
pub fn oscillation_bound(
    norms: GradientNorms,
    pair: &ExponentPair,
    theta: f64,
    height: f64,
    volume: f64,
) -> Result<f64> {
    check_norms(norms)?;
    if !(height > 0.0 && volume > 0.0) {
        return domain_err("height and volume must be positive");
    }
    let dim = pair.dim;
    let n = dim as f64;
    match pair.regime()? {
        Regime::Morrey => {
            let k = morrey_domain_constant(pair.p, dim, theta)?;
            let pinv = pair.p.recip();
            Ok(2.0 * k * height.powf(1.0 - n * pinv) * volume.powf(pinv) * norms.p_norm)
        }
        Regime::Interpolation | Regime::Logarithmic => {
            let cone = cap_measure(theta, dim)? * height.powi(dim as i32) / n;
            let ratio = volume / cone;
            if ratio < 1.0 - 1e-12 {
                return domain_err("cone larger than the domain");
            }
            let scaled = GradientNorms {
                p_norm: ratio.powf(pair.p.recip()) * norms.p_norm,
                q_norm: ratio.powf(pair.q.recip()) * norms.q_norm,
            };
            let m = riesz_interpolation_bound(scaled, pair)?;
            Ok(2.0 * height / n * m.value)
        }
    }
}

/// Boundary regularity entering the stability profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularity {
    /// `C²` boundary with curvature in `L^q`, finite `q`.
    C2 { q: f64 },
    /// `C^{2,γ}` boundary.
    C2Gamma,
}

/// Stability profile `Ψ(σ)` for the soap-bubble estimate.
pub fn psi_profile(sigma: f64, dim: usize, regularity: Regularity) -> Result<f64> {
    if dim < 2 {
        return domain_err("dimension must be at least 2");
    }
    if !(sigma >= 0.0) {
        return domain_err(format!("deviation {sigma} must be non-negative"));
    }
    Ok(match dim {
        2 | 3 => sigma,
        4 => {
            if sigma == 0.0 {
                0.0
            } else {
                sigma * (1.0 / sigma).ln().max(1.0)
            }
        }
        _ => sigma.powf(psi_exponent(dim, regularity)?),
    })
}

/// Exponent `τ` of `Ψ(σ) = σ^τ` for `N ≥ 5`.
pub fn psi_exponent(dim: usize, regularity: Regularity) -> Result<f64> {
    if dim < 5 {
        return domain_err("power profile only for N >= 5");
    }
    let n = dim as f64;
    match regularity {
        Regularity::C2Gamma => Ok(4.0 / n),
        Regularity::C2 { q } => {
            if !(q > n) {
                return domain_err(format!("q = {q} must exceed N = {dim}"));
            }
            Ok(4.0 / n - 2.0 * (n - 4.0) / (n * (q - 2.0)))
        }
    }
}

/// Exponent `(4 - 2N/q)/(N + 1 - 2N/q)` of the Serrin profile for `N ≥ 4`,
/// with limit `4/(N+1)` for `C^{2,γ}` boundaries.
pub fn serrin_profile_exponent(dim: usize, regularity: Regularity) -> Result<f64> {
    if dim <= 3 {
        return domain_err("Serrin power profile is only used for N >= 4");
    }
    let n = dim as f64;
    let w = match regularity {
        Regularity::C2Gamma => 0.0,
        Regularity::C2 { q } => {
            if !(q > n) {
                return domain_err(format!("q = {q} must exceed N = {dim}"));
            }
            2.0 * n / q
        }
    };
    Ok((4.0 - w) / (n + 1.0 - w))
}

/// Gradient bound `M = (N+1) d (d + r_e) / (2 r_e)` for the torsion function.
pub fn gradient_bound_m(dim: usize, diameter: f64, r_e: f64) -> Result<f64> {
    if !(diameter > 0.0 && r_e > 0.0) {
        return domain_err("diameter and exterior radius must be positive");
    }
    let n = dim as f64;
    if r_e.is_infinite() {
        return Ok((n + 1.0) * diameter / 2.0);
    }
    Ok((n + 1.0) * diameter * (diameter + r_e) / (2.0 * r_e))
}

/// Lower bound on the distance to the boundary of the minimum point of the
/// torsion function.
pub fn min_depth_bound(
    dim: usize,
    inradius: f64,
    diameter: f64,
    r_e: f64,
    mean_convex: bool,
) -> Result<f64> {
    if !(inradius > 0.0 && diameter > 0.0 && r_e > 0.0) {
        return domain_err("inputs must be positive");
    }
    let n = dim as f64;
    let base = inradius / n.sqrt();
    if mean_convex {
        return Ok(base);
    }
    let ratio = diameter / r_e;
    let bracket = 1.0 + (n * n - 1.0) / (2.0 * n) * ratio * (1.0 + ratio);
    Ok(base / bracket.sqrt())
}

/// Exponents `(r, p, α)` of a weighted Poincaré inequality with weight `δ_Γ^{α p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareExponents {
    pub r: f64,
    pub p: f64,
    pub alpha: f64,
}

/// Structural part of the weighted Poincaré constant; `calibration` stands
/// for the unspecified dimensional factor and defaults to 1 in callers.
pub fn weighted_poincare_structural_constant(
    exps: PoincareExponents,
    scalars: &DomainScalars,
    mean_convex: bool,
    calibration: f64,
) -> Result<f64> {
    let PoincareExponents { r, p, alpha } = exps;
    let n = scalars.dim as f64;
    if !(0.0..=1.0).contains(&alpha) {
        return domain_err(format!("alpha = {alpha} not in [0, 1]"));
    }
    if !(p * (1.0 - alpha) < n) {
        return domain_err("need p(1 - alpha) < N");
    }
    let r_max = n * p / (n - p * (1.0 - alpha));
    if !(1.0 <= p && p <= r && r <= r_max * (1.0 + 1e-14)) {
        return domain_err(format!("need 1 <= p <= r <= {r_max}, got p = {p}, r = {r}"));
    }
    let d = scalars.diameter;
    let mut value =
        calibration * scalars.volume.powf((1.0 - alpha) / n) * (d / scalars.r_i).powf(n);
    if !mean_convex {
        let bracket = n + (n * n - 1.0) * (d / (2.0 * scalars.r_e)) * (1.0 + d / scalars.r_e);
        value *= bracket.powf(n / 2.0);
    }
    Ok(value)
}

/// A table of the closed-form constants for dimension `N`.
pub fn constant_table(dim: usize) -> Result<Vec<ConstantReport>> {
    if dim < 2 {
        return domain_err("dimension must be at least 2");
    }
    let n = dim as f64;
    let mut rows = Vec::new();
    let quarter = PI / 4.0;
    let half = PI / 2.0;
    rows.push(ConstantReport::new("beta", euler_beta(0.5, 0.5)?, &[("x", 0.5), ("y", 0.5)], "Euler beta function"));
    rows.push(ConstantReport::new("unit_ball_volume", unit_ball_volume(dim), &[("N", n)], "|B|"));
    for theta in [PI / 8.0, quarter, half] {
        rows.push(ConstantReport::new(
            "cap_measure",
            cap_measure(theta, dim)?,
            &[("theta", theta), ("N", n)],
            "spherical cap S_theta",
        ));
    }
    for p in [Exponent::Finite(n + 1.0), Exponent::Finite(2.0 * n), Exponent::Infinite] {
        rows.push(ConstantReport::new(
            "morrey_cone",
            morrey_cone_constant(p, dim, 1.0)?,
            &[("p", p.value()), ("N", n), ("a", 1.0)],
            "Morrey-Sobolev bound on a cone",
        ));
        rows.push(ConstantReport::new(
            "morrey_domain",
            morrey_domain_constant(p, dim, quarter)?,
            &[("p", p.value()), ("N", n), ("theta", quarter)],
            "Morrey bound under the interior cone condition",
        ));
    }
    for (p, q) in [(1.0, f64::INFINITY), (n / 2.0, 2.0 * n), (n, f64::INFINITY)] {
        let pair = ExponentPair::interpolation(Exponent::new(p)?, Exponent::new(q)?, dim)?;
        rows.push(ConstantReport::new(
            "alpha_pq",
            alpha_pq(&pair)?,
            &[("p", p), ("q", q), ("N", n)],
            "interpolation exponent",
        ));
    }
    rows.push(ConstantReport::new(
        "gradient_bound_M",
        gradient_bound_m(dim, 2.0, 1.0)?,
        &[("N", n), ("d", 2.0), ("r_e", 1.0)],
        "torsion gradient bound",
    ));
    rows.push(ConstantReport::new(
        "min_depth_mean_convex",
        min_depth_bound(dim, 1.0, 2.0, 1.0, true)?,
        &[("N", n), ("r_Omega", 1.0)],
        "depth of the torsion minimum, mean convex",
    ));
    rows.push(ConstantReport::new(
        "min_depth_general",
        min_depth_bound(dim, 1.0, 2.0, 1.0, false)?,
        &[("N", n), ("r_Omega", 1.0), ("d", 2.0), ("r_e", 1.0)],
        "depth of the torsion minimum, general",
    ));
    let sigma = 0.1;
    rows.push(ConstantReport::new(
        "psi_profile",
        psi_profile(sigma, dim, Regularity::C2Gamma)?,
        &[("sigma", sigma), ("N", n)],
        "soap-bubble stability profile",
    ));
    if dim >= 4 {
        rows.push(ConstantReport::new(
            "serrin_exponent",
            serrin_profile_exponent(dim, Regularity::C2Gamma)?,
            &[("N", n)],
            "Serrin stability exponent, smooth limit",
        ));
    }
    Ok(rows)
}
