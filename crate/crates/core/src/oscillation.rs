//! Oscillation bounds on whole star domains under the uniform interior cone
//! condition, checked for analytic fields.
//!
//! Volume integrals use polar coordinates about the origin: the periodic
//! trapezoid rule in `φ` and Gauss-Legendre in `ρ ∈ (0, r(φ))`, doubled
//! until every integral settles.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cone::{MarginReport, SweepExponents, REFINE_TOL};
use crate::constants::{oscillation_bound, Exponent, ExponentPair, GradientNorms, Regime};
use crate::domain::{Point, StarDomain2D};
use crate::error::{Error, Result};
use crate::field::AnalyticField;
use crate::quadrature::GaussRule;

const START_ANGLES: usize = 64;
const START_RADIAL: usize = 8;
const MAX_LEVEL: usize = 5;
/// Rays and radial steps of the lattice used for maxima and minima.
const SUP_RAYS: usize = 2048;
const SUP_STEPS: usize = 256;

/// Polar product rule on a star domain.
#[derive(Debug, Clone)]
pub struct PolarQuadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl PolarQuadrature {
    pub fn new(domain: &StarDomain2D, angles: usize, radial: usize) -> Result<Self> {
        let rule = GaussRule::legendre(radial);
        let dphi = 2.0 * PI / angles as f64;
        let mut points = Vec::with_capacity(angles * radial);
        let mut weights = Vec::with_capacity(angles * radial);
        for j in 0..angles {
            let phi = j as f64 * dphi;
            let r = domain.radius_at(phi);
            let (s, c) = phi.sin_cos();
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let rho = 0.5 * r * (1.0 + x);
                points.push([rho * c, rho * s]);
                weights.push(0.5 * r * w * rho * dphi);
            }
        }
        Ok(Self { points, weights })
    }

    pub fn integrate(&self, g: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| g(*p) * w).sum()
    }
}

/// Normalized gradient norms of a field on a domain, with its oscillation.
#[derive(Debug, Clone)]
pub struct DomainIntegrals {
    pub oscillation: f64,
    pub norms: Vec<(Exponent, f64)>,
    pub volume: f64,
}

impl DomainIntegrals {
    pub fn norm(&self, p: Exponent) -> Result<f64> {
        self.norms
            .iter()
            .find(|(e, _)| *e == p)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Domain(format!("norm for p = {p} was not computed")))
    }

    pub fn compute(domain: &StarDomain2D, field: &AnalyticField, exponents: &[Exponent]) -> Result<Self> {
        let finite: Vec<f64> = exponents
            .iter()
            .filter_map(|e| match e {
                Exponent::Finite(p) => Some(*p),
                Exponent::Infinite => None,
            })
            .collect();
        let level = |k: usize| -> Result<(f64, Vec<f64>)> {
            let q = PolarQuadrature::new(domain, START_ANGLES << k, START_RADIAL << k)?;
            let mut vol = 0.0;
            let mut acc = vec![0.0; finite.len()];
            for (p, w) in q.points.iter().zip(&q.weights) {
                let g = field.gradient_norm(p);
                vol += w;
                for (a, e) in acc.iter_mut().zip(&finite) {
                    *a += g.powf(*e) * w;
                }
            }
            Ok((vol, acc))
        };
        let (mut vol, mut acc) = level(0)?;
        let mut settled = false;
        for k in 1..=MAX_LEVEL {
            let (v2, a2) = level(k)?;
            let close = |x: f64, y: f64| (x - y).abs() <= REFINE_TOL * x.abs().max(y.abs()).max(1e-300);
            settled = close(vol, v2) && acc.iter().zip(&a2).all(|(x, y)| close(*x, *y));
            vol = v2;
            acc = a2;
            if settled {
                break;
            }
        }
        if !settled {
            return Err(Error::Numerical(format!(
                "polar quadrature of {} did not settle on the domain",
                field.label
            )));
        }
        let (lo, hi, sup) = extremes(domain, field);
        let mut norms = Vec::with_capacity(exponents.len());
        let mut it = acc.iter();
        for &e in exponents {
            let v = match e {
                Exponent::Finite(p) => (it.next().copied().unwrap_or(0.0) / vol).powf(1.0 / p),
                Exponent::Infinite => sup,
            };
            norms.push((e, v));
        }
        Ok(Self { oscillation: hi - lo, norms, volume: vol })
    }
}

/// `(min f, max f, max |∇f|)` over a polar lattice of the closed domain.
fn extremes(domain: &StarDomain2D, field: &AnalyticField) -> (f64, f64, f64) {
    let (mut lo, mut hi, mut sup) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for j in 0..SUP_RAYS {
        let phi = 2.0 * PI * j as f64 / SUP_RAYS as f64;
        let r = domain.radius_at(phi);
        let (s, c) = phi.sin_cos();
        for k in 0..=SUP_STEPS {
            let rho = r * k as f64 / SUP_STEPS as f64;
            let x = [rho * c, rho * s];
            let v = field.value(&x);
            lo = lo.min(v);
            hi = hi.max(v);
            sup = sup.max(field.gradient_norm(&x));
        }
    }
    (lo, hi, sup)
}

/// `max f - min f` against [`oscillation_bound`] with the domain's cone
/// parameters.
pub fn oscillation_report(
    domain: &StarDomain2D,
    ints: &DomainIntegrals,
    pair: &ExponentPair,
) -> Result<MarginReport> {
    let (theta, a) = domain.cone_params();
    let norms = GradientNorms { p_norm: ints.norm(pair.p)?, q_norm: ints.norm(pair.q)? };
    let (check, q) = match pair.regime()? {
        Regime::Morrey => ("domain_morrey", None),
        Regime::Interpolation => ("domain_interpolation", Some(pair.q)),
        Regime::Logarithmic => ("domain_log", Some(pair.q)),
    };
    Ok(MarginReport {
        check: check.into(),
        p: Some(pair.p),
        q,
        lhs: ints.oscillation,
        rhs: oscillation_bound(norms, pair, theta, a, ints.volume)?,
    })
}

pub fn verify_domain_oscillation(
    domain: &StarDomain2D,
    field: &AnalyticField,
    pair: &ExponentPair,
) -> Result<MarginReport> {
    let ints = DomainIntegrals::compute(domain, field, &[pair.p, pair.q])?;
    oscillation_report(domain, &ints, pair)
}

#[derive(Debug, Clone)]
pub struct DomainRow {
    pub domain: String,
    pub field: String,
    pub report: MarginReport,
}

/// Every (domain, field) combination against the Morrey exponents and the
/// interpolation pairs of `exps`, ordered by domain, field, check.
pub fn domain_sweep(
    domains: &[(&str, StarDomain2D)],
    fields: &[AnalyticField],
    exps: &SweepExponents,
) -> Result<Vec<DomainRow>> {
    let mut pairs: Vec<ExponentPair> =
        exps.morrey.iter().map(|&p| ExponentPair::morrey(p, 2)).collect::<Result<_>>()?;
    pairs.extend(exps.pairs.iter().cloned());
    let mut all: Vec<Exponent> = Vec::new();
    for e in pairs.iter().flat_map(|p| [p.p, p.q]) {
        if !all.contains(&e) {
            all.push(e);
        }
    }
    let jobs: Vec<(&str, &StarDomain2D, &AnalyticField)> = domains
        .iter()
        .flat_map(|(name, d)| fields.iter().map(move |f| (*name, d, f)))
        .collect();
    let chunks: Vec<Result<Vec<DomainRow>>> = jobs
        .par_iter()
        .map(|(name, d, f)| {
            let ints = DomainIntegrals::compute(d, f, &all)?;
            pairs
                .iter()
                .map(|pair| {
                    Ok(DomainRow {
                        domain: name.to_string(),
                        field: f.label.clone(),
                        report: oscillation_report(d, &ints, pair)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for c in chunks {
        rows.extend(c?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_rule_area() {
        let d = StarDomain2D::cosine(0.1, 3).unwrap();
        let q = PolarQuadrature::new(&d, 64, 4).unwrap();
        assert!((q.integrate(|_| 1.0) - d.area()).abs() < 1e-12);
    }

    #[test]
    fn polar_rule_second_moment_of_disk() {
        let d = StarDomain2D::disk(1.0).unwrap();
        let q = PolarQuadrature::new(&d, 32, 8).unwrap();
        let m = q.integrate(|p| p[0] * p[0] + p[1] * p[1]);
        assert!((m - PI / 2.0).abs() < 1e-13);
    }
}
