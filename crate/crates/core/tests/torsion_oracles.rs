use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use quantsym_core::constants::Exponent;
use quantsym_core::domain::StarDomain2D;
use quantsym_core::torsion::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Manufactured solution `e^x cos y + x² y`, with `Δ = 2y`.
fn manufactured(p: [f64; 2]) -> f64 {
    p[0].exp() * p[1].cos() + p[0] * p[0] * p[1]
}

#[test]
fn disk_and_ellipse_are_reproduced() {
    for (a, b) in [(1.0, 1.0), (2.0, 1.0), (1.2, 1.0 / 1.2)] {
        let d = StarDomain2D::ellipse(a, b).unwrap();
        let exact = exact_ellipse_torsion(a, b).unwrap();
        for h in [0.1, 0.05, 0.025] {
            let (u, report) = solve_torsion(&d, h).unwrap();
            assert!(report.residual <= 1e-10);
            // five-point stencils are exact on quadratics, so only solver error is left
            assert!(max_nodal_error(&u, &exact) < 1e-9, "{a} {b} {h}");
            assert!(u.values.iter().all(|&v| v < 0.0));
        }
    }
}

#[test]
fn exact_ellipse_formulas() {
    let hess = ellipse_torsion_hessian(2.0, 1.0);
    assert!((hess[0][0] - 0.4).abs() < 1e-15 && (hess[1][1] - 1.6).abs() < 1e-15);
    assert_eq!(hess[0][1], 0.0);
    let u = exact_ellipse_torsion(2.0, 1.0).unwrap();
    let p = [0.7, -0.3];
    assert!((u.value(&p) - 0.8 * (p[0] * p[0] / 4.0 + p[1] * p[1] - 1.0)).abs() < 1e-15);
    let disk = exact_ellipse_torsion(1.5, 1.5).unwrap();
    assert!((disk.value(&p) - 0.5 * (p[0] * p[0] + p[1] * p[1] - 2.25)).abs() < 1e-15);
    assert!(exact_ellipse_torsion(0.0, 1.0).is_err());
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let d = StarDomain2D::cosine(0.1, 3).unwrap();
    let mut errors = Vec::new();
    for h in [0.04, 0.02, 0.01] {
        let grid = Arc::new(Grid::new(&d, h).unwrap());
        let (u, _) = solve_poisson(grid.clone(), |p| 2.0 * p[1], BoundaryData::Function(Arc::new(manufactured))).unwrap();
        let err = (0..grid.len()).map(|i| (u.values[i] - manufactured(grid.point(i))).abs()).fold(0.0, f64::max);
        errors.push(err);
    }
    for order in observed_orders(&errors) {
        assert!(order >= 1.8, "errors {errors:?}");
    }
}

#[test]
fn richardson_order_on_perturbed_disk() {
    // shared lattice nodes: index (ix, iy) at spacing h is (2ix, 2iy) at h/2
    let d = StarDomain2D::cosine(0.1, 3).unwrap();
    let levels: Vec<_> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let (u, _) = solve_torsion(&d, h).unwrap();
            let map: HashMap<[i64; 2], f64> = u.grid.coords.iter().copied().zip(u.values.iter().copied()).collect();
            (u, map)
        })
        .collect();
    let coarse = &levels[0].0;
    let diff = |fine: &HashMap<[i64; 2], f64>, scale: i64, base: &HashMap<[i64; 2], f64>, bscale: i64| {
        coarse
            .grid
            .coords
            .iter()
            .map(|c| {
                let f = fine[&[c[0] * scale, c[1] * scale]];
                let g = base[&[c[0] * bscale, c[1] * bscale]];
                (f - g).abs()
            })
            .fold(0.0, f64::max)
    };
    let d1 = diff(&levels[1].1, 2, &levels[0].1, 1);
    let d2 = diff(&levels[2].1, 4, &levels[1].1, 2);
    assert!((d1 / d2).log2() >= 1.8, "{d1} {d2}");
}

#[test]
fn normal_derivative_on_ellipse() {
    let (a, b) = (2.0, 1.0);
    let d = StarDomain2D::ellipse(a, b).unwrap();
    let (u, _) = solve_torsion(&d, 1.0 / 128.0).unwrap();
    let samples = d.boundary_sample(1024).unwrap();
    let trace = normal_derivative(&u, &samples);
    assert!(trace.excluded_fraction() == 0.0);
    let mut worst: f64 = 0.0;
    for (k, s) in samples.iter().enumerate() {
        let [x, y] = s.position;
        let want = 0.8 * (x * x / 4.0 + 4.0 * y * y).sqrt();
        worst = worst.max((trace.values[k] - want).abs());
    }
    assert!(worst <= 5e-3, "trace error {worst}");
    let (ri, _) = d.ball_radii();
    let min = trace.values.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min >= ri - 5e-3);
}

#[test]
fn disk_normal_derivative_is_radius() {
    let d = StarDomain2D::disk(1.3).unwrap();
    let (u, _) = solve_torsion(&d, 0.02).unwrap();
    let samples = d.boundary_sample(256).unwrap();
    let trace = normal_derivative(&u, &samples);
    let dev = boundary_lp_norm(&trace, |k| trace.values[k] - 1.3, Exponent::Finite(2.0));
    assert!(dev < 1e-9, "{dev}");
    assert!(rel(boundary_lp_norm(&trace, |_| 0.7, Exponent::Finite(3.0)), 0.7) < 1e-12);
}

#[test]
fn minimum_and_harmonic_part() {
    let (a, b) = (2.0, 1.0);
    let d = StarDomain2D::ellipse(a, b).unwrap();
    let h = 0.03;
    let (u, _) = solve_torsion(&d, h).unwrap();
    let z = locate_min(&u).unwrap();
    assert!(z[0].hypot(z[1]) <= h * h, "{z:?}");

    let hf = h_field(&u, z);
    let lap = discrete_laplacian(&hf);
    assert!(lap.iter().flatten().all(|v| v.abs() < 1e-7));
    let hess = hessian(&hf).unwrap();
    assert!(hess.excluded_fraction <= 0.01);
    for (m, &keep) in hess.values.iter().zip(&hess.mask) {
        if keep {
            assert!((m[0][0] - 0.6).abs() < 1e-6 && (m[1][1] + 0.6).abs() < 1e-6 && m[0][1].abs() < 1e-6);
        }
    }
    let norm = u.grid.lp_norm(&hess.magnitudes(), Exponent::Finite(2.0), Some(&hess.mask));
    assert!(rel(norm, 3.0 * 2f64.sqrt() / 5.0) < 1e-6);

    // trace of ∇²u is N
    let hu = hessian(&u).unwrap();
    for (m, &keep) in hu.values.iter().zip(&hu.mask) {
        if keep {
            assert!((m[0][0] + m[1][1] - 2.0).abs() < 1e-6);
        }
    }

    // oscillation of h on Γ is (ρ_e² - ρ_i²)/2
    let (rho_i, rho_e) = d.rho_bounds(z).unwrap();
    let vals: Vec<f64> = d.boundary_sample(4096).unwrap().iter().map(|s| hf.boundary.value(s.position)).collect();
    let osc = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((osc - 0.5 * (rho_e * rho_e - rho_i * rho_i)).abs() < 1e-6);
}

#[test]
fn disk_harmonic_part_is_constant() {
    let d = StarDomain2D::disk(1.0).unwrap();
    let (u, _) = solve_torsion(&d, 0.05).unwrap();
    let z = locate_min(&u).unwrap();
    assert!(z[0].hypot(z[1]) < 0.0025);
    let hf = h_field(&u, z);
    for v in &hf.values {
        assert!((v - 0.5).abs() < 1e-5);
    }
    for g in gradient(&hf).values {
        assert!(g[0].hypot(g[1]) < 1e-4);
    }
}

#[test]
fn weighted_norm_matches_polar_quadrature() {
    // ‖δ^{1/2} ∇²h‖_2 = |∇²h| (⨍ δ)^{1/2} on the ellipse, whose ∇²h is constant
    let (a, b) = (2.0, 1.0);
    let d = StarDomain2D::ellipse(a, b).unwrap();
    let (u, _) = solve_torsion(&d, 0.02).unwrap();
    let hf = h_field(&u, [0.0, 0.0]);
    let hess = hessian(&hf).unwrap();
    let delta = u.grid.boundary_distances(&d);
    let weighted: Vec<f64> = hess.magnitudes().iter().zip(&delta).map(|(m, dl)| m * dl.sqrt()).collect();
    let got = u.grid.lp_norm(&weighted, Exponent::Finite(2.0), Some(&hess.mask));

    // midpoint rule in elliptic coordinates (a s cos t, b s sin t)
    let (ns, nt) = (400, 400);
    let mut acc = 0.0;
    for i in 0..ns {
        let s = (i as f64 + 0.5) / ns as f64;
        for j in 0..nt {
            let t = 2.0 * PI * j as f64 / nt as f64;
            acc += d.delta_gamma([a * s * t.cos(), b * s * t.sin()]) * a * b * s;
        }
    }
    let mean_delta = acc / (ns * nt) as f64 * 2.0 * PI / (PI * a * b);
    let want = 3.0 * 2f64.sqrt() / 5.0 * mean_delta.sqrt();
    assert!(rel(got, want) < 5e-3, "{got} vs {want}");
}

#[test]
fn cut_cell_volume_matches_area() {
    for d in [StarDomain2D::ellipse(2.0, 1.0).unwrap(), StarDomain2D::cosine(0.1, 5).unwrap()] {
        let g = Grid::new(&d, 0.02).unwrap();
        assert!(rel(g.volume, d.area()) < 1e-6, "{} vs {}", g.volume, d.area());
        assert!(rel(g.lp_norm(&vec![2.5; g.len()], Exponent::Finite(3.0), None), 2.5) < 1e-12);
    }
}

#[test]
fn gauss_map_deviation_properties() {
    let disk = StarDomain2D::disk(1.0).unwrap();
    assert!(gauss_map_deviation(&disk.boundary_sample(512).unwrap(), [0.0, 0.0], 1.0) < 1e-14);
    let d = StarDomain2D::ellipse(1.1, 1.0 / 1.1).unwrap();
    let (_, r) = d.h0_and_r();
    let base = gauss_map_deviation(&d.boundary_sample(4096).unwrap(), [0.0, 0.0], r);
    assert!(base > 0.0);
    // oracle on the parametric angle: ν = (b cos t, a sin t)/speed
    let (a, b) = (1.1, 1.0 / 1.1);
    let m = 8192;
    let (mut acc, mut len) = (0.0, 0.0);
    for j in 0..m {
        let t = 2.0 * PI * j as f64 / m as f64;
        let speed = (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let nu = [b * t.cos() / speed, a * t.sin() / speed];
        let x = [a * t.cos(), b * t.sin()];
        acc += ((nu[0] - x[0] / r).powi(2) + (nu[1] - x[1] / r).powi(2)) * speed;
        len += speed;
    }
    assert!(rel(base, r * (acc / len).sqrt()) < 1e-8);
    let rot = d.rotated(0.9).unwrap();
    let turned = gauss_map_deviation(&rot.boundary_sample(4096).unwrap(), [0.0, 0.0], r);
    assert!(rel(turned, base) < 1e-8);
}

#[test]
fn coarse_grid_is_rejected() {
    let d = StarDomain2D::disk(1.0).unwrap();
    assert!(Grid::new(&d, 0.9).is_err());
}

#[test]
fn node_tangent_to_the_boundary_is_masked() {
    // at h = 1/48 the lattice node (0, 40h) is the tip of the minor axis of
    // the ellipse a = 1.2, b = 1/1.2: both horizontal arms are ~1e-8 long
    let (a, b) = (1.2, 1.0 / 1.2);
    let d = StarDomain2D::ellipse(a, b).unwrap();
    let (u, _) = solve_torsion(&d, 1.0 / 48.0).unwrap();
    let hess = hessian(&h_field(&u, [0.0, 0.0])).unwrap();
    let s = a * a + b * b;
    let tip = u.grid.node_at(0, 40).unwrap();
    assert!(!hess.mask[tip]);
    assert!(hess.excluded_fraction < 1e-3);
    for (m, &keep) in hess.values.iter().zip(&hess.mask) {
        if keep {
            assert!((m[0][0] - (1.0 - 2.0 * b * b / s)).abs() < 1e-6 && (m[1][1] - (1.0 - 2.0 * a * a / s)).abs() < 1e-6);
        }
    }
    let g = gradient(&u).values[tip];
    assert!(g[0].abs() < 1e-6 && (g[1] - 2.0 * a * a / s * b).abs() < 1e-6, "{g:?}");
}

#[test]
fn node_on_the_boundary_keeps_derivatives_exact() {
    // (1.2, -0.8) is a lattice node at h = 0.02 lying on x²/4 + y² = 1
    let d = StarDomain2D::ellipse(2.0, 1.0).unwrap();
    let (u, _) = solve_torsion(&d, 0.02).unwrap();
    let hf = h_field(&u, [0.0, 0.0]);
    let hess = hessian(&hf).unwrap();
    for m in &hess.values {
        assert!((m[0][0] - 0.6).abs() < 1e-6 && (m[1][1] + 0.6).abs() < 1e-6 && m[0][1].abs() < 1e-6, "{m:?}");
    }
    for g in gradient(&u).values.iter().zip(&u.grid.coords) {
        let p = [g.1[0] as f64 * 0.02, g.1[1] as f64 * 0.02];
        assert!((g.0[0] - 0.4 * p[0]).abs() < 1e-6 && (g.0[1] - 1.6 * p[1]).abs() < 1e-6);
    }
}
