//! `key=value` run configuration.

use std::path::PathBuf;

use quantsym_core::constants::{weighted_poincare_structural_constant, Exponent, PoincareExponents};
use quantsym_core::domain::StarDomain2D;
use quantsym_core::identities::CheckExponents;
use quantsym_core::stability::{FamilyKind, FamilySpec, DEFAULT_EPS};

use crate::error::CliError;

/// Every accepted key with its meaning, shown by `--help`.
pub const KEY_HELP: &str = "\
CONFIG KEYS (file lines or trailing key=value arguments; '#' starts a comment):
  family            ellipse | cosine | fourier                  [ellipse]
  k                 mode number of the cosine family            [3]
  cos, sin          Fourier coefficients of modes 1, 2, ... for the fourier family,
                    comma separated; r(phi) = 1 + eps * sum(...)   [empty]
  eps               strictly increasing comma-separated list    [0.02,0.04,0.07,0.1,0.14,0.2]
  area_normalize    rescale each member to area pi (true/false)    [true]
  grid.h            finest grid spacing                         [0.0078125]
  grid.refinements  coarser levels used for the discretization estimate [1]
  p                 exponent of the explicit oscillation chain (1..inf) [6]
  q                 upper exponent of interpolation checks, > N [inf]
  r                 integrability exponent of the weighted Poincare check [4]
  alpha             weight exponent of the weighted Poincare check [0.5]
  calibration_k     factor of the weighted Poincare constant, > 0 [1]
  N                 dimension for `constants`; other commands need N = 2 [2]
  out               output directory                            [out]
  dump_fields       write u and h as x,y,value CSV (true/false) [false]
  jobs              worker threads, >= 1                        [available parallelism]

EXIT CODES: 0 all asserted checks pass, 1 an asserted check failed,
  2 configuration error, 3 infrastructure error (e.g. grid too coarse).";

/// Integrability exponent of the Hessian side of the weighted Poincaré check.
pub const POINCARE_HESSIAN_P: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: FamilyKind,
    pub eps: Vec<f64>,
    pub area_normalize: bool,
    pub grid_h: f64,
    pub refinements: usize,
    pub p: Exponent,
    pub q: Exponent,
    pub r: f64,
    pub alpha: f64,
    pub calibration_k: f64,
    pub dim: usize,
    pub out: PathBuf,
    pub dump_fields: bool,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = FamilySpec::ellipse_default();
        let checks = CheckExponents::default();
        Self {
            family: spec.kind,
            eps: DEFAULT_EPS.to_vec(),
            area_normalize: spec.area_normalize,
            grid_h: spec.grid_h,
            refinements: spec.refinements,
            p: checks.oscillation_p,
            q: checks.q,
            r: checks.poincare.r,
            alpha: checks.poincare.alpha,
            calibration_k: checks.calibration_k,
            dim: 2,
            out: PathBuf::from("out"),
            dump_fields: false,
            jobs: None,
        }
    }
}

/// Raw settings collected before the family is assembled, so that `k`,
/// `cos` and `sin` may appear in any order relative to `family`.
#[derive(Debug, Default)]
struct FamilyKeys {
    name: Option<String>,
    k: Option<usize>,
    cos: Option<Vec<f64>>,
    sin: Option<Vec<f64>>,
}

/// Applies `key=value` pairs in order on top of the defaults, then validates.
#[derive(Debug, Default)]
pub struct ConfigBuilder {
    config: RunConfig,
    family: FamilyKeys,
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key}: cannot parse '{value}' as {what}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value.parse::<f64>().map_err(|_| bad(key, value, "a number"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value.parse::<usize>().map_err(|_| bad(key, value, "a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "a boolean")),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|t| parse_f64(key, t.trim())).collect()
}

fn parse_exponent(key: &str, value: &str) -> Result<Exponent, CliError> {
    value.parse::<Exponent>().map_err(|_| bad(key, value, "an exponent in [1, inf]"))
}

/// Splits config text into `(key, value)` pairs, dropping comments and blank
/// lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(split_pair(line).map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

/// `key=value` with surrounding spaces trimmed.
pub fn split_pair(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key=value, got '{s}'")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(CliError::Config(format!("empty key in '{s}'")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self, CliError> {
        let c = &mut self.config;
        match key {
            "family" => self.family.name = Some(value.to_string()),
            "k" => self.family.k = Some(parse_usize(key, value)?),
            "cos" => self.family.cos = Some(parse_list(key, value)?),
            "sin" => self.family.sin = Some(parse_list(key, value)?),
            "eps" => c.eps = parse_list(key, value)?,
            "area_normalize" => c.area_normalize = parse_bool(key, value)?,
            "grid.h" => c.grid_h = parse_f64(key, value)?,
            "grid.refinements" => c.refinements = parse_usize(key, value)?,
            "p" => c.p = parse_exponent(key, value)?,
            "q" => c.q = parse_exponent(key, value)?,
            "r" => c.r = parse_f64(key, value)?,
            "alpha" => c.alpha = parse_f64(key, value)?,
            "calibration_k" => c.calibration_k = parse_f64(key, value)?,
            "N" => c.dim = parse_usize(key, value)?,
            "out" => c.out = PathBuf::from(value),
            "dump_fields" => c.dump_fields = parse_bool(key, value)?,
            "jobs" => c.jobs = Some(parse_usize(key, value)?),
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(self)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<&mut Self, CliError> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, &v)?;
        }
        Ok(self)
    }

    fn family_kind(&self) -> Result<FamilyKind, CliError> {
        let f = &self.family;
        let name = f.name.as_deref().unwrap_or("ellipse");
        let stray = |keys: &[(&str, bool)]| -> Result<(), CliError> {
            match keys.iter().find(|(_, set)| *set) {
                Some((k, _)) => Err(CliError::Config(format!("key '{k}' does not apply to family={name}"))),
                None => Ok(()),
            }
        };
        match name {
            "ellipse" => {
                stray(&[("k", f.k.is_some()), ("cos", f.cos.is_some()), ("sin", f.sin.is_some())])?;
                Ok(FamilyKind::Ellipse)
            }
            "cosine" => {
                stray(&[("cos", f.cos.is_some()), ("sin", f.sin.is_some())])?;
                Ok(FamilyKind::Cosine { k: f.k.unwrap_or(3) })
            }
            "fourier" => {
                stray(&[("k", f.k.is_some())])?;
                Ok(FamilyKind::Fourier {
                    cos: f.cos.clone().unwrap_or_default(),
                    sin: f.sin.clone().unwrap_or_default(),
                })
            }
            other => Err(CliError::Config(format!("family: unknown family '{other}'"))),
        }
    }

    pub fn build(&self) -> Result<RunConfig, CliError> {
        let mut c = self.config.clone();
        c.family = self.family_kind()?;
        c.validate()?;
        Ok(c)
    }
}

impl RunConfig {
    /// Checks every key before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |msg: String| Err(CliError::Config(msg));
        if self.dim < 2 {
            return invalid(format!("N = {} must be at least 2", self.dim));
        }
        if self.jobs == Some(0) {
            return invalid("jobs must be at least 1".into());
        }
        if !(self.calibration_k.is_finite() && self.calibration_k > 0.0) {
            return invalid(format!("calibration_k = {} must be positive", self.calibration_k));
        }
        if !(self.q.is_infinite() || self.q.value() > 2.0) {
            return invalid(format!("q = {} must exceed N = 2", self.q));
        }
        let poincare = self.poincare();
        let disk = StarDomain2D::disk(1.0).map_err(CliError::Infrastructure)?;
        weighted_poincare_structural_constant(poincare, &disk.scalars(), true, 1.0)
            .map_err(|e| CliError::Config(format!("weighted Poincare exponents: {e}")))?;
        self.family_spec()?;
        Ok(())
    }

    fn poincare(&self) -> PoincareExponents {
        PoincareExponents { r: self.r, p: POINCARE_HESSIAN_P, alpha: self.alpha }
    }

    pub fn checks(&self) -> CheckExponents {
        CheckExponents {
            oscillation_p: self.p,
            q: self.q,
            poincare: self.poincare(),
            calibration_k: self.calibration_k,
            ..CheckExponents::default()
        }
    }

    pub fn family_spec(&self) -> Result<FamilySpec, CliError> {
        let mut spec =
            FamilySpec::new(self.family.clone(), self.eps.clone(), self.area_normalize, self.grid_h, self.refinements)
                .map_err(|e| CliError::Config(e.to_string()))?;
        spec.checks = self.checks();
        Ok(spec)
    }

    /// `ellipse`, `cosine_k3` or `fourier`.
    pub fn family_label(&self) -> String {
        match &self.family {
            FamilyKind::Cosine { k } => format!("cosine_k{k}"),
            other => other.label().to_string(),
        }
    }

    /// The PDE-based commands only exist in the plane.
    pub fn require_planar(&self, command: &str) -> Result<(), CliError> {
        if self.dim != 2 {
            return Err(CliError::Config(format!("{command} needs N = 2, got N = {}", self.dim)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<RunConfig, CliError> {
        ConfigBuilder::new().apply_text(text)?.build()
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(build("").unwrap(), RunConfig::default());
        assert_eq!(build("# only a comment\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn single_eps_run() {
        let c = build("family=ellipse\neps=0.1").unwrap();
        assert_eq!(c.eps, vec![0.1]);
        assert_eq!(c.family, FamilyKind::Ellipse);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "eps=0.1,abc",
            "eps=0.2,0.1",
            "eps=",
            "colour=red",
            "grid.h=-1",
            "family=square",
            "family=ellipse\nk=2",
            "family=cosine\nk=0",
            "q=2",
            "p=0.5",
            "alpha=2",
            "r=100",
            "jobs=0",
            "area_normalize=maybe",
            "noequals",
        ] {
            let err = build(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn comments_and_spacing() {
        let c = build("family = cosine  # trailing\n k=2\n grid.h = 0.01\n").unwrap();
        assert_eq!(c.family, FamilyKind::Cosine { k: 2 });
        assert_eq!(c.grid_h, 0.01);
    }

    #[test]
    fn fourier_coefficients() {
        let c = build("family=fourier\ncos=0,0.5\nsin=0.1\neps=0.1,0.2").unwrap();
        assert_eq!(c.family, FamilyKind::Fourier { cos: vec![0.0, 0.5], sin: vec![0.1] });
        assert!(build("family=fourier\ncos=0\neps=0.1").is_err());
    }

    #[test]
    fn later_pairs_override() {
        let c = build("p=4\np=inf").unwrap();
        assert_eq!(c.p, Exponent::Infinite);
    }
}
