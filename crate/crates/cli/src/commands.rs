//! The six subcommands. Each writes its CSV files under the output
//! directory, prints a short summary and reports whether every asserted
//! check passed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use quantsym_core::cone::{standard_cones, sweep, MarginReport, SweepExponents};
use quantsym_core::constants::{
    constant_table, fmt_float, gradient_bound_m, min_depth_bound, morrey_domain_constant,
    weighted_poincare_structural_constant, ConstantReport, Exponent,
};
use quantsym_core::domain::domain_catalog;
use quantsym_core::field::catalog_2d;
use quantsym_core::identities::{check_family_boundedness, run_all, IdentityReport, PipelineData, Status};
use quantsym_core::oscillation::domain_sweep;
use quantsym_core::stability::{
    check_sbt_profile, check_serrin_profile, fit_log_log, non_monotone_columns, records_csv, run_family, Failure,
    ProfileVerdict, StabilityRecord, PROFILE_MIN_SLOPE,
};

use crate::config::RunConfig;
use crate::error::CliError;

pub const CONSTANTS_CSV: &str = "constants.csv";
pub const CONE_CSV: &str = "cone_verify.csv";
pub const DOMAIN_OSC_CSV: &str = "domain_oscillation.csv";
pub const DOMAIN_VERIFY_CSV: &str = "domain_verify.csv";
pub const REPORT_CSV: &str = "report.csv";

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn write(out: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), body)?;
    Ok(())
}

fn exponent_cell(e: Option<Exponent>) -> String {
    e.map_or(String::new(), |e| e.to_string())
}

/// Constant table for `N`, plus the domain-dependent constants of each
/// family member when `N = 2`.
pub fn constants(cfg: &RunConfig) -> Result<bool, CliError> {
    let mut rows = constant_table(cfg.dim)?;
    if cfg.dim == 2 {
        let spec = cfg.family_spec()?;
        for &eps in &spec.eps {
            let d = spec.domain(eps)?;
            let s = d.scalars();
            let (theta, _) = d.cone_params();
            let mc = d.mean_convex();
            let inputs = |extra: &[(&str, f64)]| -> Vec<(String, f64)> {
                [("eps", eps)].iter().chain(extra).map(|(k, v)| (k.to_string(), *v)).collect()
            };
            let row = |name: &str, value: f64, inputs: Vec<(String, f64)>, provenance: &str| ConstantReport {
                name: format!("{}_{name}", cfg.family_label()),
                value,
                inputs,
                provenance: provenance.to_string(),
            };
            rows.push(row(
                "gradient_bound_m",
                gradient_bound_m(2, s.diameter, s.r_e)?,
                inputs(&[("d", s.diameter), ("r_e", s.r_e)]),
                "bound on |grad u| of the torsion function",
            ));
            rows.push(row(
                "min_depth_bound",
                min_depth_bound(2, s.inradius, s.diameter, s.r_e, mc)?,
                inputs(&[("r", s.inradius), ("d", s.diameter), ("r_e", s.r_e)]),
                "lower bound on the distance of the minimum point to the boundary",
            ));
            let k = morrey_domain_constant(cfg.p, 2, theta)?;
            rows.push(row(
                "morrey_domain",
                k,
                inputs(&[("p", cfg.p.value()), ("theta", theta)]),
                "Morrey bound under the interior cone condition",
            ));
            let pc = cfg.checks().poincare;
            rows.push(row(
                "weighted_poincare",
                weighted_poincare_structural_constant(pc, &s, mc, cfg.calibration_k)?,
                inputs(&[("r", pc.r), ("p", pc.p), ("alpha", pc.alpha), ("calibration_k", cfg.calibration_k)]),
                "structural weighted Poincare constant times calibration_k",
            ));
        }
    }
    let mut body = String::from("name,value,inputs,provenance\n");
    for r in &rows {
        body.push_str(&format!("{},{},{},{}\n", r.name, fmt_float(r.value), r.inputs_string(), r.provenance));
    }
    write(&cfg.out, CONSTANTS_CSV, &body)?;
    print!("{body}");
    Ok(true)
}

fn margin_line(prefix: &str, r: &MarginReport) -> String {
    format!(
        "{prefix},{},{},{},{},{},{},{}\n",
        exponent_cell(r.p),
        exponent_cell(r.q),
        r.check,
        fmt_float(r.lhs),
        fmt_float(r.rhs),
        fmt_float(r.margin()),
        pass_fail(r.holds()),
    )
}

/// Tallies `(rows, failures)` per check name.
fn tally<'a>(reports: impl Iterator<Item = &'a MarginReport>) -> BTreeMap<String, (usize, usize)> {
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in reports {
        let e = out.entry(format!("{}_p{}", r.check, exponent_cell(r.p))).or_default();
        e.0 += 1;
        if !r.holds() {
            e.1 += 1;
        }
    }
    out
}

/// Pointwise, Morrey and interpolation bounds on the standard cones, then the
/// oscillation bounds on the domain catalog.
pub fn cone_verify(cfg: &RunConfig) -> Result<bool, CliError> {
    cfg.require_planar("cone-verify")?;
    let fields = catalog_2d();
    let exps = SweepExponents::standard(2)?;
    let cone_rows = sweep(&fields, &standard_cones(), &exps)?;
    let mut body = String::from("field,theta,a,p,q,check,lhs,rhs,margin,status\n");
    for row in &cone_rows {
        body.push_str(&margin_line(
            &format!("{},{},{}", row.field, fmt_float(row.theta), fmt_float(row.height)),
            &row.report,
        ));
    }
    write(&cfg.out, CONE_CSV, &body)?;

    let domains = domain_catalog()?;
    let domain_rows = domain_sweep(&domains, &fields, &exps)?;
    let mut body = String::from("domain,field,p,q,check,lhs,rhs,margin,status\n");
    for row in &domain_rows {
        body.push_str(&margin_line(&format!("{},{}", row.domain, row.field), &row.report));
    }
    write(&cfg.out, DOMAIN_OSC_CSV, &body)?;

    let mut ok = true;
    for (label, rows) in [
        ("cone", tally(cone_rows.iter().map(|r| &r.report))),
        ("domain", tally(domain_rows.iter().map(|r| &r.report))),
    ] {
        for (check, (n, failed)) in rows {
            ok &= failed == 0;
            println!("{label} {check}: {failed} of {n} rows violated");
        }
    }
    Ok(ok)
}

fn identity_line(domain: &str, eps: &str, r: &IdentityReport) -> String {
    format!(
        "{domain},{eps},{},{},{},{},{},{}\n",
        r.name,
        fmt_float(r.lhs),
        fmt_float(r.rhs),
        fmt_float(r.ratio),
        fmt_float(r.residual),
        r.status,
    )
}

fn dump_fields(cfg: &RunConfig, eps: f64, data: &PipelineData) -> Result<(), CliError> {
    let dir = cfg.out.join("fields");
    let tag = format!("{}_eps{eps}", cfg.family_label());
    write(&dir, &format!("u_{tag}.csv"), &data.u.to_csv())?;
    write(&dir, &format!("h_{tag}.csv"), &data.h.to_csv())?;
    Ok(())
}

/// The identity suite on every member of the configured family.
pub fn domain_verify(cfg: &RunConfig) -> Result<bool, CliError> {
    cfg.require_planar("domain-verify")?;
    let spec = cfg.family_spec()?;
    let checks = cfg.checks();
    let runs: Vec<(f64, PipelineData, Vec<IdentityReport>)> = spec
        .eps
        .par_iter()
        .map(|&eps| -> Result<_, CliError> {
            let data = PipelineData::run(&spec.domain(eps)?, spec.grid_h)?;
            let reports = run_all(&data, &checks)?;
            Ok((eps, data, reports))
        })
        .collect::<Result<_, _>>()?;
    let label = cfg.family_label();
    let mut body = String::from("domain,eps,check,lhs,rhs,ratio,residual,status\n");
    let mut failed: Vec<String> = Vec::new();
    for (eps, data, reports) in &runs {
        if cfg.dump_fields {
            dump_fields(cfg, *eps, data)?;
        }
        for r in reports {
            body.push_str(&identity_line(&label, &eps.to_string(), r));
            if r.status == Status::Fail {
                failed.push(format!("{} at eps={eps}", r.name));
            }
        }
    }
    if runs.len() > 1 {
        let all: Vec<Vec<IdentityReport>> = runs.into_iter().map(|(_, _, r)| r).collect();
        for r in check_family_boundedness(&all) {
            body.push_str(&identity_line(&label, "all", &r));
            if r.status == Status::Fail {
                failed.push(r.name.clone());
            }
        }
    }
    write(&cfg.out, DOMAIN_VERIFY_CSV, &body)?;
    for f in &failed {
        println!("failed: {f}");
    }
    println!("domain-verify {label}: {} failed checks", failed.len());
    Ok(failed.is_empty())
}

/// Which profile a stability run checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Sbt,
    Serrin,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Sbt => "sbt",
            Profile::Serrin => "serrin",
        }
    }

    pub fn records_file(self) -> String {
        format!("{}_records.csv", self.name())
    }

    pub fn fits_file(self) -> String {
        format!("{}_fits.csv", self.name())
    }

    fn verdict(self, records: &[StabilityRecord]) -> quantsym_core::Result<ProfileVerdict> {
        match self {
            Profile::Sbt => check_sbt_profile(records),
            Profile::Serrin => check_serrin_profile(records),
        }
    }
}

pub const FITS_HEADER: &str = "profile,family,x,y,slope,intercept,r2,n,excluded,empirical_constant,status";

/// Runs the family, fits the profile and checks monotonicity and the
/// boundedness of the monitored ratios.
pub fn stability(cfg: &RunConfig, profile: Profile) -> Result<bool, CliError> {
    cfg.require_planar(profile.name())?;
    let spec = cfg.family_spec()?;
    let records = run_family(&spec)?;
    write(&cfg.out, &profile.records_file(), &records_csv(&records))?;
    if cfg.dump_fields {
        for &eps in &spec.eps {
            let data = PipelineData::run(&spec.domain(eps)?, spec.grid_h)?;
            dump_fields(cfg, eps, &data)?;
        }
    }
    let mut ok = true;
    for r in &records {
        match &r.failure {
            Some(Failure::Pipeline(e)) => return Err(CliError::Infrastructure(e.clone())),
            Some(f) => {
                ok = false;
                println!("eps={}: {f}", r.eps);
            }
            None => {}
        }
    }
    let verdict = profile.verdict(&records)?;
    let label = cfg.family_label();
    let mut body = format!("{FITS_HEADER}\n");
    for f in &verdict.fits {
        body.push_str(&format!(
            "{},{label},{},{},{},{},{},{},{},{},{}\n",
            profile.name(),
            f.x,
            f.y,
            fmt_float(f.fit.slope),
            fmt_float(f.fit.intercept),
            fmt_float(f.fit.r2),
            f.fit.n,
            f.fit.excluded,
            fmt_float(f.empirical_constant),
            pass_fail(f.pass),
        ));
        println!("{} {} vs {}: slope {:.4} (r2 {:.6}), c_emp {:.4}", profile.name(), f.y, f.x, f.fit.slope, f.fit.r2, f.empirical_constant);
    }
    write(&cfg.out, &profile.fits_file(), &body)?;
    ok &= verdict.pass;
    let non_monotone = non_monotone_columns(&records);
    for c in &non_monotone {
        println!("column {c} is not increasing in eps");
    }
    ok &= non_monotone.is_empty();
    let runs: Vec<Vec<IdentityReport>> = records.iter().map(|r| r.reports.clone()).collect();
    for r in check_family_boundedness(&runs) {
        if r.status == Status::Fail {
            ok = false;
            println!("{}: max/min = {:.3}", r.name, r.ratio);
        }
    }
    println!("{} {label}: {}", profile.name(), pass_fail(ok));
    Ok(ok)
}

type Table = (Vec<String>, Vec<Vec<String>>);

fn read_table(path: &Path) -> Result<Option<Table>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Io(e.into()))?;
    let header = reader.headers().map_err(|e| CliError::Io(e.into()))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec.map_err(|e| CliError::Io(e.into()))?.iter().map(String::from).collect());
    }
    Ok(Some((header, rows)))
}

fn column(table: &Table, name: &str, path: &Path) -> Result<usize, CliError> {
    table.0.iter().position(|h| h == name).ok_or_else(|| {
        CliError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{}: missing column '{name}'", path.display()),
        ))
    })
}

/// Summary lines `source,item,value,status`.
#[derive(Debug, Default)]
struct Summary {
    lines: Vec<(String, String, String, &'static str)>,
}

impl Summary {
    fn push(&mut self, source: &str, item: &str, value: String, ok: bool) {
        self.lines.push((source.into(), item.into(), value.replace(',', ";"), pass_fail(ok)));
    }

    fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.3 == "pass")
    }
}

/// Counts failing rows per value of `group`.
fn summarize_status(summary: &mut Summary, source: &str, table: &Table, path: &Path, group: &[&str]) -> Result<(), CliError> {
    let status = column(table, "status", path)?;
    let keys = group.iter().map(|g| column(table, g, path)).collect::<Result<Vec<_>, _>>()?;
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for row in &table.1 {
        let key = keys.iter().map(|&k| row[k].as_str()).filter(|v| !v.is_empty()).collect::<Vec<_>>().join("_");
        let e = counts.entry(key).or_default();
        e.0 += 1;
        if row[status] == "fail" {
            e.1 += 1;
        }
    }
    for (key, (n, failed)) in counts {
        summary.push(source, &key, format!("{failed}/{n} failed"), failed == 0);
    }
    Ok(())
}

fn summarize_records(summary: &mut Summary, profile: Profile, table: &Table, path: &Path) -> Result<(), CliError> {
    let x_name = match profile {
        Profile::Sbt => "curvature_dev",
        Profile::Serrin => "serrin_dev",
    };
    let parse = |name: &str| -> Result<Vec<f64>, CliError> {
        let c = column(table, name, path)?;
        Ok(table.1.iter().map(|row| row[c].parse::<f64>().unwrap_or(f64::NAN)).collect())
    };
    let xs = parse(x_name)?;
    for y in ["rho_diff", "gauss_map_dev"] {
        let item = format!("slope_{y}_vs_{x_name}");
        match fit_log_log(&xs, &parse(y)?) {
            Ok(fit) => summary.push(profile.name(), &item, fmt_float(fit.slope), fit.slope >= PROFILE_MIN_SLOPE),
            Err(e) => summary.push(profile.name(), &item, e.to_string(), false),
        }
    }
    let status = column(table, "status", path)?;
    let bad = table.1.iter().filter(|row| row[status] != "ok").count();
    summary.push(profile.name(), "failed_records", format!("{bad}/{}", table.1.len()), bad == 0);
    Ok(())
}

/// Aggregates every CSV found in the output directory.
pub fn report(cfg: &RunConfig) -> Result<bool, CliError> {
    let mut summary = Summary::default();
    let mut found = 0;
    for (file, group) in [
        (CONE_CSV, &["check", "p"][..]),
        (DOMAIN_OSC_CSV, &["check", "p"][..]),
        (DOMAIN_VERIFY_CSV, &["domain", "check"][..]),
    ] {
        let path = cfg.out.join(file);
        if let Some(table) = read_table(&path)? {
            found += 1;
            summarize_status(&mut summary, file.trim_end_matches(".csv"), &table, &path, group)?;
        }
    }
    for profile in [Profile::Sbt, Profile::Serrin] {
        let path = cfg.out.join(profile.records_file());
        if let Some(table) = read_table(&path)? {
            found += 1;
            summarize_records(&mut summary, profile, &table, &path)?;
        }
    }
    if found == 0 {
        return Err(CliError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no result CSVs in {}", cfg.out.display()),
        )));
    }
    let mut body = String::from("source,item,value,status\n");
    for (source, item, value, status) in &summary.lines {
        body.push_str(&format!("{source},{item},{value},{status}\n"));
    }
    write(&cfg.out, REPORT_CSV, &body)?;
    print!("{body}");
    Ok(summary.all_pass())
}
