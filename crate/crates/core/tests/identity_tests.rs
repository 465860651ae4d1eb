use std::f64::consts::PI;

use quantsym_core::domain::{domain_catalog, StarDomain2D};
use quantsym_core::identities::*;

fn find<'a>(reports: &'a [IdentityReport], name: &str) -> &'a IdentityReport {
    reports.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("no report {name}"))
}

fn eps_ellipse(eps: f64) -> StarDomain2D {
    StarDomain2D::ellipse(1.0 + eps, 1.0 / (1.0 + eps)).unwrap()
}

/// Both sides of the fundamental identity for the ellipse `(a cos t, b sin t)`,
/// where `∇²h` is constant and `u_ν = |∇u|` is known in closed form.
fn ellipse_fundamental_sides(a: f64, b: f64) -> (f64, f64) {
    let s = a * a + b * b;
    let hess_sq = 2.0 * ((a * a - b * b) / s).powi(2);
    let m = 1 << 14;
    let dt = 2.0 * PI / m as f64;
    let mut len = 0.0;
    let mut pts = Vec::with_capacity(m);
    for j in 0..m {
        let t = j as f64 * dt;
        let speed = (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let (x, y) = (a * t.cos(), b * t.sin());
        let un = 2.0 * a * a * b * b / s * (x * x / a.powi(4) + y * y / b.powi(4)).sqrt();
        let kappa = a * b / speed.powi(3);
        pts.push((un, kappa, speed * dt));
        len += speed * dt;
    }
    let area = PI * a * b;
    let r = 2.0 * area / len;
    let lhs = hess_sq * area + pts.iter().map(|(un, _, w)| (un - r).powi(2) * w).sum::<f64>() / r;
    let rhs = pts.iter().map(|(un, k, w)| (1.0 / r - k) * un * un * w).sum::<f64>();
    (lhs, rhs)
}

#[test]
fn disk_passes_everything() {
    let d = StarDomain2D::disk(1.0).unwrap();
    let data = PipelineData::run(&d, 0.05).unwrap();
    let reports = run_all(&data, &CheckExponents::default()).unwrap();
    for r in &reports {
        assert!(r.passed(), "{r:?}");
    }
    assert!(find(&reports, "fundamental").lhs.abs() < 1e-6);
    assert!(find(&reports, "weighted_hessian").lhs.abs() < 1e-6);
    let depth = find(&reports, "torsion_depth");
    assert!(depth.lhs.abs() < 1e-3, "{depth:?}");
}

#[test]
fn fundamental_oracle_is_an_identity() {
    for (a, b) in [(1.1, 1.0 / 1.1), (2.0, 1.0), (1.2, 1.0 / 1.2)] {
        let (lhs, rhs) = ellipse_fundamental_sides(a, b);
        assert!((lhs - rhs).abs() <= 1e-9 * lhs, "{a} {b}: {lhs} {rhs}");
    }
}

#[test]
fn ellipse_residuals_at_fine_grid() {
    let eps = 0.2;
    let (a, b) = (1.0 + eps, 1.0 / (1.0 + eps));
    let data = PipelineData::run(&eps_ellipse(eps), 1.0 / 128.0).unwrap();
    let div = check_divergence_identity(&data);
    let fun = check_fundamental_identity(&data);
    let mp = check_identity_mp(&data);
    assert!(div.residual.abs() <= 0.01, "{div:?}");
    assert!(fun.residual.abs() <= 0.02, "{fun:?}");
    assert!(mp.residual.abs() <= 0.02, "{mp:?}");

    let (lhs, rhs) = ellipse_fundamental_sides(a, b);
    assert!((fun.lhs - lhs).abs() <= 0.02 * lhs, "{} vs {lhs}", fun.lhs);
    assert!((fun.rhs - rhs).abs() <= 0.02 * rhs, "{} vs {rhs}", fun.rhs);

    // ∫(-u)|∇²h|² with ∫(-u) = π a³ b³ / (2(a² + b²))
    let s = a * a + b * b;
    let want = 2.0 * ((a * a - b * b) / s).powi(2) * PI * (a * b).powi(3) / (2.0 * s);
    assert!((mp.lhs - want).abs() <= 0.02 * want, "{} vs {want}", mp.lhs);
}

#[test]
fn weighted_hessian_lhs_on_two_to_one_ellipse() {
    // |∇²h|² = 18/25, ∫(-u) = 8π/10
    let data = PipelineData::run(&StarDomain2D::ellipse(2.0, 1.0).unwrap(), 1.0 / 64.0).unwrap();
    let mp = check_identity_mp(&data);
    let want = 18.0 / 25.0 * 8.0 * PI / 10.0;
    assert!((mp.lhs - want).abs() <= 0.01 * want, "{} vs {want}", mp.lhs);
    let hopf = check_hopf_bound(&data);
    assert!(hopf.passed());
    assert!((hopf.rhs - 0.8).abs() < 5e-3, "{hopf:?}");
}

#[test]
fn residuals_decay_under_refinement() {
    let d = eps_ellipse(0.2);
    let runs: Vec<_> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&h| {
            let data = PipelineData::run(&d, h).unwrap();
            [
                check_divergence_identity(&data).residual.abs(),
                check_fundamental_identity(&data).residual.abs(),
                check_identity_mp(&data).residual.abs(),
            ]
        })
        .collect();
    for k in 0..3 {
        if runs.iter().all(|r| r[k] < 1e-10) {
            // exact up to roundoff: the trace of the quadratic ellipse solution is exact
            continue;
        }
        // average order over two halvings
        let order = (runs[0][k] / runs[2][k]).log2() / 2.0;
        assert!(order >= 1.0, "check {k}: {:?}", runs.iter().map(|r| r[k]).collect::<Vec<_>>());
    }
}

#[test]
fn residuals_are_scale_covariant() {
    let d = StarDomain2D::cosine(0.05, 3).unwrap();
    let base = PipelineData::run(&d, 0.04).unwrap();
    let big = PipelineData::run(&d.scaled(2.0).unwrap(), 0.08).unwrap();
    for f in [check_divergence_identity, check_fundamental_identity, check_identity_mp] {
        let (x, y) = (f(&base), f(&big));
        assert!((x.residual - y.residual).abs() < 1e-6, "{x:?} {y:?}");
    }
    assert!((check_hopf_bound(&big).rhs - 2.0 * check_hopf_bound(&base).rhs).abs() < 1e-6);
}

#[test]
fn residuals_are_rotation_invariant() {
    let d = eps_ellipse(0.1);
    let turned = d.rotated(PI / 2.0).unwrap();
    let a = run_all(&PipelineData::run(&d, 0.04).unwrap(), &CheckExponents::default()).unwrap();
    let b = run_all(&PipelineData::run(&turned, 0.04).unwrap(), &CheckExponents::default()).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.name, y.name);
        // boundary samples sit at different points of Γ after rotation
        let scale = x.lhs.abs().max(1e-6);
        assert!((x.lhs - y.lhs).abs() <= 1e-5 * scale, "{x:?} {y:?}");
    }
}

#[test]
fn catalog_checks_pass() {
    for (name, d) in domain_catalog().unwrap() {
        let data = PipelineData::run(&d, 0.04).unwrap();
        for r in run_all(&data, &CheckExponents::default()).unwrap() {
            assert!(r.passed(), "{name}: {r:?}");
        }
    }
}

#[test]
fn ellipse_family_ratios_stay_bounded() {
    let runs: Vec<_> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&eps| run_all(&PipelineData::run(&eps_ellipse(eps), 1.0 / 32.0).unwrap(), &CheckExponents::default()).unwrap())
        .collect();
    let spreads = check_family_boundedness(&runs);
    assert!(!spreads.is_empty());
    for r in &spreads {
        assert!(r.passed(), "{r:?}");
    }
}
