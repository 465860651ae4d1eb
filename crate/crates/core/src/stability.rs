//! Perturbation families run through the torsion pipeline, and log-log fits
//! of the resulting deviations.

use std::fmt;

use rayon::prelude::*;

use crate::constants::fmt_float;
use crate::domain::StarDomain2D;
use crate::error::{domain_err, Error, Result};
use crate::identities::{run_all, CheckExponents, IdentityReport, PipelineData, Status};
use crate::torsion::gauss_map_deviation;

/// Default ε grid.
pub const DEFAULT_EPS: [f64; 6] = [0.02, 0.04, 0.07, 0.1, 0.14, 0.2];
/// Smallest number of points for a fit.
pub const MIN_FIT_POINTS: usize = 4;
/// Lower bound on fitted slopes for a linear-or-better profile.
pub const PROFILE_MIN_SLOPE: f64 = 0.9;
/// Decrease tolerated as discretization noise in the monotonicity check.
pub const MONOTONE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `a = 1 + ε`, `b = 1/(1 + ε)`.
    Ellipse,
    /// `r(φ) = 1 + ε cos(kφ)`.
    Cosine { k: usize },
    /// `r(φ) = 1 + ε Σ_j (cos_j cos(jφ) + sin_j sin(jφ))`, `j ≥ 1`.
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
}

impl FamilyKind {
    pub fn label(&self) -> &'static str {
        match self {
            FamilyKind::Ellipse => "ellipse",
            FamilyKind::Cosine { .. } => "cosine",
            FamilyKind::Fourier { .. } => "fourier",
        }
    }

    pub fn mode(&self) -> usize {
        match self {
            FamilyKind::Ellipse | FamilyKind::Fourier { .. } => 0,
            FamilyKind::Cosine { k } => *k,
        }
    }

    /// `(1/π) ∫ g²` of the perturbation profile `g`, so that the member at
    /// `ε` has area `π (1 + ε² energy / 2)`.
    fn energy(&self) -> f64 {
        match self {
            FamilyKind::Ellipse => 0.0,
            FamilyKind::Cosine { .. } => 1.0,
            FamilyKind::Fourier { cos, sin } => cos.iter().chain(sin).map(|c| c * c).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub eps: Vec<f64>,
    /// Rescale each domain to area `π`.
    pub area_normalize: bool,
    /// Finest grid spacing.
    pub grid_h: f64,
    /// Number of coarser levels `2h, 4h, ...` solved to estimate the
    /// discretization error.
    pub refinements: usize,
    /// Exponents of the identity checks run on each member.
    pub checks: CheckExponents,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, eps: Vec<f64>, area_normalize: bool, grid_h: f64, refinements: usize) -> Result<Self> {
        let spec = Self { kind, eps, area_normalize, grid_h, refinements, checks: CheckExponents::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ellipse_default() -> Self {
        Self {
            kind: FamilyKind::Ellipse,
            eps: DEFAULT_EPS.to_vec(),
            area_normalize: true,
            grid_h: 1.0 / 128.0,
            refinements: 1,
            checks: CheckExponents::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return domain_err("empty eps list");
        }
        if self.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return domain_err("eps values must be positive");
        }
        if self.eps.windows(2).any(|w| w[0] >= w[1]) {
            return domain_err("eps values must be strictly increasing");
        }
        if !(self.grid_h > 0.0 && self.grid_h.is_finite()) {
            return domain_err("grid spacing must be positive");
        }
        let eps_max = *self.eps.last().unwrap();
        match &self.kind {
            FamilyKind::Ellipse => {}
            FamilyKind::Cosine { k } => {
                if *k == 0 {
                    return domain_err("mode number must be at least 1");
                }
                if eps_max >= 1.0 {
                    return domain_err("eps must stay below 1 to keep r(φ) > 0");
                }
            }
            FamilyKind::Fourier { cos, sin } => {
                if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return domain_err("Fourier coefficients must be finite");
                }
                let bound: f64 = cos.iter().chain(sin).map(|c| c.abs()).sum();
                if bound == 0.0 {
                    return domain_err("Fourier perturbation is identically zero");
                }
                if eps_max * bound >= 1.0 {
                    return domain_err("eps times the coefficient sum must stay below 1 to keep r(φ) > 0");
                }
            }
        }
        Ok(())
    }

    /// The member of the family at `eps`.
    pub fn domain(&self, eps: f64) -> Result<StarDomain2D> {
        let d = match &self.kind {
            // area is already π
            FamilyKind::Ellipse => return StarDomain2D::ellipse(1.0 + eps, 1.0 / (1.0 + eps)),
            FamilyKind::Cosine { k } => StarDomain2D::cosine(eps, *k)?,
            FamilyKind::Fourier { cos, sin } => StarDomain2D::fourier(
                1.0,
                cos.iter().map(|c| eps * c).collect(),
                sin.iter().map(|c| eps * c).collect(),
            )?,
        };
        if self.area_normalize {
            d.scaled(1.0 / (1.0 + 0.5 * eps * eps * self.kind.energy()).sqrt())
        } else {
            Ok(d)
        }
    }
}

/// Per-ε outcome of the pipeline.
#[derive(Debug, Clone)]
pub struct StabilityRecord {
    pub family: &'static str,
    pub k: usize,
    pub eps: f64,
    pub grid_h: f64,
    /// `‖H - H0‖_{2,Γ}`.
    pub curvature_dev: f64,
    /// `ρ_e - ρ_i`.
    pub rho_diff: f64,
    /// `R ‖ν - (x - z)/R‖_{2,Γ}`.
    pub gauss_map_dev: f64,
    /// `‖u_ν - R‖_{2,Γ}`.
    pub serrin_dev: f64,
    /// `‖∇²h‖_{2,Ω}`.
    pub hessian_l2: f64,
    /// `‖δ_Γ^{1/2} ∇²h‖_{2,Ω}`.
    pub weighted_hessian_l2: f64,
    pub divergence_residual: f64,
    pub fundamental_residual: f64,
    pub weighted_identity_residual: f64,
    /// Change of `ρ_e - ρ_i` between the two finest levels.
    pub discretization_estimate: f64,
    pub reports: Vec<IdentityReport>,
    /// `None` when every asserted check passed.
    pub failure: Option<Failure>,
}

/// Why a record is not clean.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Asserted checks that failed, by name.
    Checks(Vec<String>),
    /// The pipeline could not produce the record.
    Pipeline(Error),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Checks(names) => write!(f, "failed checks: {}", names.join(" ")),
            Failure::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

/// Column of a record used in fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    CurvatureDev,
    RhoDiff,
    GaussMapDev,
    SerrinDev,
    HessianL2,
    WeightedHessianL2,
}

impl Column {
    pub const DEVIATIONS: [Column; 6] = [
        Column::CurvatureDev,
        Column::RhoDiff,
        Column::GaussMapDev,
        Column::SerrinDev,
        Column::HessianL2,
        Column::WeightedHessianL2,
    ];

    pub fn get(&self, r: &StabilityRecord) -> f64 {
        match self {
            Column::CurvatureDev => r.curvature_dev,
            Column::RhoDiff => r.rho_diff,
            Column::GaussMapDev => r.gauss_map_dev,
            Column::SerrinDev => r.serrin_dev,
            Column::HessianL2 => r.hessian_l2,
            Column::WeightedHessianL2 => r.weighted_hessian_l2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Column::CurvatureDev => "curvature_dev",
            Column::RhoDiff => "rho_diff",
            Column::GaussMapDev => "gauss_map_dev",
            Column::SerrinDev => "serrin_dev",
            Column::HessianL2 => "hessian_l2",
            Column::WeightedHessianL2 => "weighted_hessian_l2",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn residual_of(reports: &[IdentityReport], name: &str) -> f64 {
    reports.iter().find(|r| r.name == name).map_or(f64::NAN, |r| r.residual.abs())
}

/// Runs the full pipeline for one member of the family.
pub fn run_member(spec: &FamilySpec, eps: f64) -> Result<StabilityRecord> {
    let domain = spec.domain(eps)?;
    let data = PipelineData::run(&domain, spec.grid_h)?;
    let reports = run_all(&data, &spec.checks)?;
    let mut discretization_estimate = 0.0;
    if spec.refinements > 0 {
        let mut prev = data.rho_e - data.rho_i;
        let mut coarse_h = spec.grid_h;
        for _ in 0..spec.refinements {
            coarse_h *= 2.0;
            let coarse = PipelineData::run(&domain, coarse_h)?;
            let rho = coarse.rho_e - coarse.rho_i;
            if discretization_estimate == 0.0 {
                discretization_estimate = (rho - prev).abs();
            }
            prev = rho;
        }
    }
    let failed: Vec<String> = reports.iter().filter(|r| r.status == Status::Fail).map(|r| r.name.clone()).collect();
    let two = crate::constants::Exponent::Finite(2.0);
    Ok(StabilityRecord {
        family: spec.kind.label(),
        k: spec.kind.mode(),
        eps,
        grid_h: spec.grid_h,
        curvature_dev: data.curvature_dev,
        rho_diff: data.rho_e - data.rho_i,
        gauss_map_dev: gauss_map_deviation(data.samples(), data.z, data.radius),
        serrin_dev: data.serrin_deviation(),
        hessian_l2: data.hessian_norm(two),
        weighted_hessian_l2: data.weighted_hessian_norm(0.5, two),
        divergence_residual: residual_of(&reports, "divergence"),
        fundamental_residual: residual_of(&reports, "fundamental"),
        weighted_identity_residual: residual_of(&reports, "weighted_hessian"),
        discretization_estimate,
        failure: if failed.is_empty() { None } else { Some(Failure::Checks(failed)) },
        reports,
    })
}

fn failure_record(spec: &FamilySpec, eps: f64, err: &Error) -> StabilityRecord {
    StabilityRecord {
        family: spec.kind.label(),
        k: spec.kind.mode(),
        eps,
        grid_h: spec.grid_h,
        curvature_dev: f64::NAN,
        rho_diff: f64::NAN,
        gauss_map_dev: f64::NAN,
        serrin_dev: f64::NAN,
        hessian_l2: f64::NAN,
        weighted_hessian_l2: f64::NAN,
        divergence_residual: f64::NAN,
        fundamental_residual: f64::NAN,
        weighted_identity_residual: f64::NAN,
        discretization_estimate: f64::NAN,
        reports: Vec::new(),
        failure: Some(Failure::Pipeline(err.clone())),
    }
}

/// One record per ε, sorted by ε. A pipeline error on one member gives a
/// failure row instead of aborting the family.
pub fn run_family(spec: &FamilySpec) -> Result<Vec<StabilityRecord>> {
    spec.validate()?;
    Ok(spec
        .eps
        .par_iter()
        .map(|&eps| run_member(spec, eps).unwrap_or_else(|e| failure_record(spec, eps, &e)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
    /// Points used.
    pub n: usize,
    /// Points dropped for non-positive or non-finite values.
    pub excluded: usize,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let excluded = xs.len().min(ys.len()) - pts.len();
    let n = pts.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::Fit(format!("{n} usable points, need {MIN_FIT_POINTS}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(FitResult { slope, intercept, r2, n, excluded })
}

/// Slope of `log y` against `log x` over the records.
pub fn fit_exponent(records: &[StabilityRecord], x: Column, y: Column) -> Result<FitResult> {
    let xs: Vec<f64> = records.iter().map(|r| x.get(r)).collect();
    let ys: Vec<f64> = records.iter().map(|r| y.get(r)).collect();
    fit_log_log(&xs, &ys)
}

/// One fitted relation of a profile check.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFit {
    pub x: Column,
    pub y: Column,
    pub fit: FitResult,
    /// `max y/x`.
    pub empirical_constant: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileVerdict {
    pub name: &'static str,
    pub fits: Vec<ProfileFit>,
    pub pass: bool,
}

fn profile(name: &'static str, records: &[StabilityRecord], x: Column, ys: [Column; 2]) -> Result<ProfileVerdict> {
    let mut fits = Vec::new();
    for y in ys {
        let fit = fit_exponent(records, x, y)?;
        let empirical_constant = records
            .iter()
            .map(|r| y.get(r) / x.get(r))
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        fits.push(ProfileFit { x, y, fit, empirical_constant, pass: fit.slope >= PROFILE_MIN_SLOPE });
    }
    let pass = fits.iter().all(|f| f.pass);
    Ok(ProfileVerdict { name, fits, pass })
}

/// Linear-or-better decay of `ρ_e - ρ_i` and of the Gauss-map deviation in
/// `‖H - H0‖_{2,Γ}`.
pub fn check_sbt_profile(records: &[StabilityRecord]) -> Result<ProfileVerdict> {
    profile("sbt", records, Column::CurvatureDev, [Column::RhoDiff, Column::GaussMapDev])
}

/// Linear-or-better decay of `ρ_e - ρ_i` and of the Gauss-map deviation in
/// `‖u_ν - R‖_{2,Γ}`.
pub fn check_serrin_profile(records: &[StabilityRecord]) -> Result<ProfileVerdict> {
    profile("serrin", records, Column::SerrinDev, [Column::RhoDiff, Column::GaussMapDev])
}

/// Columns that fail to increase with ε beyond [`MONOTONE_FLOOR`].
pub fn non_monotone_columns(records: &[StabilityRecord]) -> Vec<Column> {
    Column::DEVIATIONS
        .into_iter()
        .filter(|c| records.windows(2).any(|w| c.get(&w[1]) <= c.get(&w[0]) - MONOTONE_FLOOR || c.get(&w[1]).is_nan()))
        .collect()
}

pub const CSV_HEADER: &str = "family,k,eps,grid_h,curvature_dev,rho_diff,gauss_map_dev,serrin_dev,hessian_l2,weighted_hessian_l2,divergence_residual,fundamental_residual,weighted_identity_residual,discretization_estimate,status";

impl StabilityRecord {
    pub fn csv_row(&self) -> String {
        let nums = [
            self.eps,
            self.grid_h,
            self.curvature_dev,
            self.rho_diff,
            self.gauss_map_dev,
            self.serrin_dev,
            self.hessian_l2,
            self.weighted_hessian_l2,
            self.divergence_residual,
            self.fundamental_residual,
            self.weighted_identity_residual,
            self.discretization_estimate,
        ];
        let status = match &self.failure {
            None => "ok".to_string(),
            Some(failure) => format!("\"{}\"", failure.to_string().replace('"', "'")),
        };
        let mut row = format!("{},{}", self.family, self.k);
        for v in nums {
            row.push(',');
            row.push_str(&fmt_float(v));
        }
        row.push(',');
        row.push_str(&status);
        row
    }
}

/// Header plus one line per record.
pub fn records_csv(records: &[StabilityRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}
