//! Integrals over truncated cones and the cone-level inequality checks.
//!
//! All integrals use vertex-polar coordinates `y = x + sω`. The Jacobian
//! `s^{N-1}` cancels the kernel `|y-x|^{1-N}` exactly, so every integrand
//! is bounded and a product Gauss rule converges spectrally for smooth data.

use rayon::prelude::*;

use crate::constants::{
    cap_measure, cone_measure, log_interpolation_closed_form, morrey_cone_constant,
    riesz_interpolation_bound, ConeSpec, Exponent, ExponentPair, GradientNorms, Regime,
};
use crate::error::{domain_err, Error, Result};
use crate::field::AnalyticField;
use crate::quadrature::{halton, GaussRule};

/// Allowed slack on every verified inequality.
pub const MARGIN_SLACK: f64 = 1e-9;
/// Relative change tolerated between two successive quadrature levels.
pub const REFINE_TOL: f64 = 1e-8;
const START_NODES: usize = 32;
const MAX_NODES: usize = 512;
const SUP_SAMPLES: usize = 10_000;

/// Product quadrature on a cone: Gauss in `s ∈ (0, a)` times a rule on the cap.
#[derive(Debug, Clone)]
pub struct ConeQuadrature {
    pub radial: GaussRule,
    /// Unit directions in the cap and their weights (summing to `|S_θ|`).
    pub directions: Vec<(Vec<f64>, f64)>,
}

impl ConeQuadrature {
    /// `n` radial nodes and `n` nodes per angular variable.
    pub fn new(cone: &ConeSpec, n: usize) -> Result<Self> {
        let radial = GaussRule::on(n, 0.0, cone.height);
        let e = &cone.axis;
        let directions = match cone.dim() {
            2 => GaussRule::on(n, -cone.theta, cone.theta)
                .nodes
                .iter()
                .zip(GaussRule::on(n, -cone.theta, cone.theta).weights)
                .map(|(psi, w)| {
                    let (s, c) = psi.sin_cos();
                    (vec![e[0] * c - e[1] * s, e[0] * s + e[1] * c], w)
                })
                .collect(),
            3 => {
                let (u, v) = orthonormal_complement(e);
                let polar = GaussRule::on(n, 0.0, cone.theta);
                let azim = GaussRule::on(n, 0.0, 2.0 * std::f64::consts::PI);
                let mut dirs = Vec::with_capacity(n * n);
                for (phi, wp) in polar.nodes.iter().zip(&polar.weights) {
                    let (sp, cp) = phi.sin_cos();
                    for (psi, wa) in azim.nodes.iter().zip(&azim.weights) {
                        let (ss, cs) = psi.sin_cos();
                        let d: Vec<f64> =
                            (0..3).map(|k| cp * e[k] + sp * (cs * u[k] + ss * v[k])).collect();
                        dirs.push((d, wp * wa * sp));
                    }
                }
                dirs
            }
            d => return domain_err(format!("cone quadrature supports N = 2, 3, not {d}")),
        };
        Ok(Self { radial, directions })
    }

    pub fn point_count(&self) -> usize {
        self.radial.len() * self.directions.len()
    }
}

fn orthonormal_complement(e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pick = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot: f64 = pick.iter().zip(e).map(|(a, b)| a * b).sum();
    let mut u: Vec<f64> = pick.iter().zip(e).map(|(a, b)| a - dot * b).collect();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= nu);
    let v = vec![
        e[1] * u[2] - e[2] * u[1],
        e[2] * u[0] - e[0] * u[2],
        e[0] * u[1] - e[1] * u[0],
    ];
    (u, v)
}

/// Weight applied to `|∇f| |y-x|^{1-N}` in a Riesz-type integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszWeight {
    /// `(a^N - |y-x|^N)/N`.
    Weighted,
    /// No weight.
    Plain,
}

/// Every cone integral needed by the checks, from one converged pass.
#[derive(Debug, Clone)]
pub struct ConeIntegrals {
    pub value_at_vertex: f64,
    pub average: f64,
    pub riesz_plain: f64,
    pub riesz_weighted: f64,
    /// `(p, ‖∇f‖_p)` for each requested exponent, normalized measure.
    pub norms: Vec<(Exponent, f64)>,
    pub nodes_used: usize,
}

impl ConeIntegrals {
    pub fn norm(&self, p: Exponent) -> Result<f64> {
        self.norms
            .iter()
            .find(|(e, _)| *e == p)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Domain(format!("norm for p = {p} was not computed")))
    }

    /// Integrates the field over the cone, doubling node counts from 32
    /// until every integral changes by at most `1e-8` relative.
    pub fn compute(cone: &ConeSpec, field: &AnalyticField, exponents: &[Exponent]) -> Result<Self> {
        if field.dim() != cone.dim() {
            return domain_err("field and cone dimensions differ");
        }
        let measure = cone_measure(cone)?;
        let mut n = START_NODES;
        let mut prev = raw_sums(cone, field, exponents, n, measure)?;
        loop {
            let next_n = 2 * n;
            if next_n > MAX_NODES {
                return Err(Error::Numerical(format!(
                    "cone quadrature for {} did not settle within {MAX_NODES} nodes",
                    field.label
                )));
            }
            let cur = raw_sums(cone, field, exponents, next_n, measure)?;
            if prev.close_to(&cur) {
                return Ok(cur.finish(cone, field, exponents, next_n));
            }
            prev = cur;
            n = next_n;
        }
    }
}

struct RawSums {
    average: f64,
    abs_average: f64,
    plain: f64,
    weighted: f64,
    powers: Vec<f64>,
    node_sup: f64,
}

impl RawSums {
    fn close_to(&self, other: &RawSums) -> bool {
        let ok = |a: f64, b: f64, scale: f64| (a - b).abs() <= REFINE_TOL * scale.max(b.abs()) + 1e-300;
        ok(self.average, other.average, other.abs_average)
            && ok(self.plain, other.plain, 0.0)
            && ok(self.weighted, other.weighted, 0.0)
            && self.powers.iter().zip(&other.powers).all(|(a, b)| ok(*a, *b, 0.0))
    }

    fn finish(self, cone: &ConeSpec, field: &AnalyticField, exps: &[Exponent], n: usize) -> ConeIntegrals {
        let mut powers = self.powers.into_iter();
        let sup = self.node_sup.max(dense_sup(cone, field));
        let norms = exps
            .iter()
            .map(|&p| match p {
                Exponent::Infinite => (p, sup),
                Exponent::Finite(pv) => (p, powers.next().unwrap_or(0.0).powf(1.0 / pv)),
            })
            .collect();
        ConeIntegrals {
            value_at_vertex: field.value(&cone.vertex),
            average: self.average,
            riesz_plain: self.plain,
            riesz_weighted: self.weighted,
            norms,
            nodes_used: n,
        }
    }
}

fn raw_sums(
    cone: &ConeSpec,
    field: &AnalyticField,
    exps: &[Exponent],
    n: usize,
    measure: f64,
) -> Result<RawSums> {
    let quad = ConeQuadrature::new(cone, n)?;
    let dim = cone.dim();
    let nf = dim as f64;
    let an = cone.height.powi(dim as i32);
    let finite: Vec<f64> = exps
        .iter()
        .filter_map(|p| match p {
            Exponent::Finite(v) => Some(*v),
            Exponent::Infinite => None,
        })
        .collect();
    let mut sums = RawSums {
        average: 0.0,
        abs_average: 0.0,
        plain: 0.0,
        weighted: 0.0,
        powers: vec![0.0; finite.len()],
        node_sup: 0.0,
    };
    let mut mass = 0.0;
    let mut y = vec![0.0; dim];
    for (s, ws) in quad.radial.nodes.iter().zip(&quad.radial.weights) {
        let jac = s.powi(dim as i32 - 1);
        let radial_weight = (an - s.powi(dim as i32)) / nf;
        for (omega, wo) in &quad.directions {
            for k in 0..dim {
                y[k] = cone.vertex[k] + s * omega[k];
            }
            let w = ws * wo;
            let f = field.value(&y);
            let g = field.gradient_norm(&y);
            mass += w * jac;
            sums.average += f * w * jac;
            sums.abs_average += f.abs() * w * jac;
            sums.plain += g * w;
            sums.weighted += g * radial_weight * w;
            for (acc, p) in sums.powers.iter_mut().zip(&finite) {
                *acc += g.powf(*p) * w * jac;
            }
            sums.node_sup = sums.node_sup.max(g);
        }
    }
    // The discrete mass equals |C| up to rounding; dividing by it keeps
    // constants exact.
    sums.average /= mass;
    sums.abs_average /= mass;
    sums.plain /= measure;
    sums.weighted /= measure;
    sums.powers.iter_mut().for_each(|v| *v /= measure);
    Ok(sums)
}

/// Maximum of `|∇f|` over quasi-random interior points and a grid on the
/// cone's boundary (vertex, rim and lateral surface).
fn dense_sup(cone: &ConeSpec, field: &AnalyticField) -> f64 {
    let dim = cone.dim();
    let a = cone.height;
    let mut best = field.gradient_norm(&cone.vertex);
    let mut y = vec![0.0; dim];
    let mut visit = |s: f64, omega: &[f64], best: &mut f64| {
        for k in 0..dim {
            y[k] = cone.vertex[k] + s * omega[k];
        }
        *best = best.max(field.gradient_norm(&y));
    };
    let samples = halton(SUP_SAMPLES, dim);
    for u in &samples {
        let s = a * u[0].powf(1.0 / dim as f64);
        let omega = cap_direction(cone, &u[1..]);
        visit(s, &omega, &mut best);
    }
    let m = 256;
    for i in 0..=m {
        let t = i as f64 / m as f64;
        for j in 0..=m {
            let v = j as f64 / m as f64;
            let omega = match dim {
                2 => cap_direction(cone, &[v]),
                _ => cap_direction(cone, &[v, t]),
            };
            visit(a, &omega, &mut best);
            if dim == 2 {
                continue;
            }
            let rim = cap_direction(cone, &[1.0, v]);
            visit(a * t, &rim, &mut best);
        }
        if dim == 2 {
            for edge in [0.0, 1.0] {
                let omega = cap_direction(cone, &[edge]);
                visit(a * t, &omega, &mut best);
            }
        }
    }
    best
}

/// Direction in the cap from unit-cube coordinates (uniform in area for N = 3).
fn cap_direction(cone: &ConeSpec, u: &[f64]) -> Vec<f64> {
    let e = &cone.axis;
    if cone.dim() == 2 {
        let psi = cone.theta * (2.0 * u[0] - 1.0);
        let (s, c) = psi.sin_cos();
        vec![e[0] * c - e[1] * s, e[0] * s + e[1] * c]
    } else {
        let (a, b) = orthonormal_complement(e);
        let cphi = 1.0 - u[0] * (1.0 - cone.theta.cos());
        let sphi = (1.0 - cphi * cphi).max(0.0).sqrt();
        let psi = 2.0 * std::f64::consts::PI * u.get(1).copied().unwrap_or(0.0);
        let (ss, cs) = psi.sin_cos();
        (0..3).map(|k| cphi * e[k] + sphi * (cs * a[k] + ss * b[k])).collect()
    }
}

/// `∫_C |∇f(y)| |y-x|^{1-N} w(y) dμ_y`, `x` the vertex.
///
/// `Plain` returns the unweighted integral; the pointwise bound then reads
/// `|f(x) - f_C| ≤ (a^N/N)` times it.
pub fn riesz_potential(cone: &ConeSpec, field: &AnalyticField, weight: RieszWeight) -> Result<f64> {
    let ints = ConeIntegrals::compute(cone, field, &[])?;
    Ok(match weight {
        RieszWeight::Weighted => ints.riesz_weighted,
        RieszWeight::Plain => ints.riesz_plain,
    })
}

/// Mean of the field over the cone.
pub fn cone_average(cone: &ConeSpec, field: &AnalyticField) -> Result<f64> {
    Ok(ConeIntegrals::compute(cone, field, &[])?.average)
}

/// Normalized `L^p` norm of the gradient magnitude of `field` over the cone.
pub fn lp_norm_cone(cone: &ConeSpec, field: &AnalyticField, p: Exponent) -> Result<f64> {
    ConeIntegrals::compute(cone, field, &[p])?.norm(p)
}

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub check: String,
    pub p: Option<Exponent>,
    pub q: Option<Exponent>,
    pub lhs: f64,
    pub rhs: f64,
}

impl MarginReport {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -MARGIN_SLACK
    }
}

/// `|f(x) - f_C|` against the weighted and plain Riesz bounds.
pub fn pointwise_reports(cone: &ConeSpec, ints: &ConeIntegrals) -> Vec<MarginReport> {
    let lhs = (ints.value_at_vertex - ints.average).abs();
    let an = cone.height.powi(cone.dim() as i32) / cone.dim() as f64;
    vec![
        MarginReport { check: "pointwise_weighted".into(), p: None, q: None, lhs, rhs: ints.riesz_weighted },
        MarginReport { check: "pointwise_plain".into(), p: None, q: None, lhs, rhs: an * ints.riesz_plain },
        MarginReport {
            check: "weighted_below_plain".into(),
            p: None,
            q: None,
            lhs: ints.riesz_weighted,
            rhs: an * ints.riesz_plain,
        },
    ]
}

/// `|f(x) - f_C| ≤ (a/N) β(1-p'/N', p'+1)^{1/p'} ‖∇f‖_p` for `p > N`.
pub fn morrey_report(cone: &ConeSpec, ints: &ConeIntegrals, p: Exponent) -> Result<MarginReport> {
    let c = morrey_cone_constant(p, cone.dim(), cone.height)?;
    Ok(MarginReport {
        check: "morrey".into(),
        p: Some(p),
        q: None,
        lhs: (ints.value_at_vertex - ints.average).abs(),
        rhs: c * ints.norm(p)?,
    })
}

/// `a^{N-1} ∫_C |∇f| |y-x|^{1-N} dμ` against the interpolation bounds.
///
/// For `p < N` the bound is the minimized two-term splitting estimate. For
/// `p = N` both the minimized estimate and its closed logarithmic form are
/// reported.
pub fn interpolation_reports(
    cone: &ConeSpec,
    ints: &ConeIntegrals,
    pair: &ExponentPair,
) -> Result<Vec<MarginReport>> {
    let norms = GradientNorms { p_norm: ints.norm(pair.p)?, q_norm: ints.norm(pair.q)? };
    let lhs = cone.height.powi(cone.dim() as i32 - 1) * ints.riesz_plain;
    let replay = riesz_interpolation_bound(norms, pair)?.value;
    let mut out = Vec::new();
    match pair.regime()? {
        Regime::Interpolation => out.push(MarginReport {
            check: "interpolation_power".into(),
            p: Some(pair.p),
            q: Some(pair.q),
            lhs,
            rhs: replay,
        }),
        Regime::Logarithmic => {
            out.push(MarginReport {
                check: "interpolation_log".into(),
                p: Some(pair.p),
                q: Some(pair.q),
                lhs,
                rhs: log_interpolation_closed_form(norms, pair)?,
            });
            out.push(MarginReport {
                check: "interpolation_log_split".into(),
                p: Some(pair.p),
                q: Some(pair.q),
                lhs,
                rhs: replay,
            });
        }
        Regime::Morrey => return domain_err("interpolation needs p <= N"),
    }
    Ok(out)
}

pub fn verify_pointwise_cone(cone: &ConeSpec, field: &AnalyticField) -> Result<Vec<MarginReport>> {
    let ints = ConeIntegrals::compute(cone, field, &[])?;
    Ok(pointwise_reports(cone, &ints))
}

pub fn verify_morrey_cone(cone: &ConeSpec, field: &AnalyticField, p: Exponent) -> Result<MarginReport> {
    let ints = ConeIntegrals::compute(cone, field, &[p])?;
    morrey_report(cone, &ints, p)
}

pub fn verify_interpolation_cone(
    cone: &ConeSpec,
    field: &AnalyticField,
    pair: &ExponentPair,
) -> Result<Vec<MarginReport>> {
    let ints = ConeIntegrals::compute(cone, field, &[pair.p, pair.q])?;
    interpolation_reports(cone, &ints, pair)
}

/// Exponents swept for dimension `N`.
#[derive(Debug, Clone)]
pub struct SweepExponents {
    pub morrey: Vec<Exponent>,
    pub pairs: Vec<ExponentPair>,
}

impl SweepExponents {
    /// Default grid: `p > N` in `{N+1, 2N, 4N, ∞}` for Morrey; `p` in
    /// `{1, (1+N)/2, N}` and `q` in `{N+1, 2N, 4N, ∞}` for interpolation.
    pub fn standard(dim: usize) -> Result<Self> {
        let n = dim as f64;
        let big = [n + 1.0, 2.0 * n, 4.0 * n, f64::INFINITY];
        let morrey = big.iter().map(|&p| Exponent::new(p)).collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::new();
        for p in [1.0, 0.5 * (1.0 + n), n] {
            for q in big {
                pairs.push(ExponentPair::interpolation(Exponent::new(p)?, Exponent::new(q)?, dim)?);
            }
        }
        Ok(Self { morrey, pairs })
    }

    fn all_exponents(&self) -> Vec<Exponent> {
        let mut out: Vec<Exponent> = Vec::new();
        let cands = self
            .morrey
            .iter()
            .copied()
            .chain(self.pairs.iter().flat_map(|pr| [pr.p, pr.q]));
        for e in cands {
            if !out.contains(&e) {
                out.push(e);
            }
        }
        out
    }
}

/// One line of a cone sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub field: String,
    pub theta: f64,
    pub height: f64,
    pub report: MarginReport,
}

/// The nine sweep cones: vertex at the origin, a fixed generic axis,
/// `θ ∈ {π/8, π/4, π/2}` and `a ∈ {0.5, 1, 2}`.
pub fn standard_cones() -> Vec<ConeSpec> {
    let axis = vec![0.3f64.cos(), 0.3f64.sin()];
    let mut out = Vec::new();
    for theta in [std::f64::consts::PI / 8.0, std::f64::consts::PI / 4.0, std::f64::consts::PI / 2.0] {
        for a in [0.5, 1.0, 2.0] {
            out.push(ConeSpec::new(vec![0.0, 0.0], axis.clone(), theta, a).expect("valid cone"));
        }
    }
    out
}

/// Runs every check for every (field, cone) combination, in parallel, with
/// the output ordered by field, then cone, then check.
pub fn sweep(
    fields: &[AnalyticField],
    cones: &[ConeSpec],
    exps: &SweepExponents,
) -> Result<Vec<SweepRow>> {
    let all = exps.all_exponents();
    let jobs: Vec<(&AnalyticField, &ConeSpec)> =
        fields.iter().flat_map(|f| cones.iter().map(move |c| (f, c))).collect();
    let chunks: Vec<Result<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|(field, cone)| {
            let ints = ConeIntegrals::compute(cone, field, &all)?;
            let mut reports = pointwise_reports(cone, &ints);
            for &p in &exps.morrey {
                reports.push(morrey_report(cone, &ints, p)?);
            }
            for pair in &exps.pairs {
                reports.extend(interpolation_reports(cone, &ints, pair)?);
            }
            Ok(reports
                .into_iter()
                .map(|report| SweepRow {
                    field: field.label.clone(),
                    theta: cone.theta,
                    height: cone.height,
                    report,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for c in chunks {
        rows.extend(c?);
    }
    Ok(rows)
}

/// `|S_θ|` re-exported for callers that only need the cap.
pub fn cap(cone: &ConeSpec) -> Result<f64> {
    cap_measure(cone.theta, cone.dim())
}
