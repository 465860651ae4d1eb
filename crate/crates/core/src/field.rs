//! Closed-form test fields with exact gradients.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::halton;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Version tag of the built-in catalog; bump whenever a field changes.
pub const CATALOG_VERSION: u32 = 1;

/// A scalar function on `R^N` with its exact gradient.
#[derive(Clone)]
pub struct AnalyticField {
    pub label: String,
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl AnalyticField {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), dim, value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        g
    }

    /// Euclidean length of the gradient.
    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        let mut g = [0.0; 8];
        let g = &mut g[..self.dim];
        self.gradient_into(x, g);
        g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `λ f`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let v = self.value.clone();
        let g = self.gradient.clone();
        Self::new(
            format!("{}*{lambda}", self.label),
            self.dim,
            move |x| lambda * v(x),
            move |x, out| {
                g(x, out);
                out.iter_mut().for_each(|c| *c *= lambda);
            },
        )
    }

    /// Compares the gradient with central differences at 100 quasi-random
    /// points of the box `[-half_width, half_width]^N`.
    pub fn self_test(&self, half_width: f64) -> Result<()> {
        let step = 1e-5;
        let mut x = vec![0.0; self.dim];
        for pt in halton(100, self.dim) {
            for (xi, u) in x.iter_mut().zip(&pt) {
                *xi = half_width * (2.0 * u - 1.0);
            }
            let g = self.gradient(&x);
            let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for k in 0..self.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += step;
                xm[k] -= step;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * step);
                if (fd - g[k]).abs() > 1e-6 * scale {
                    return Err(Error::Numerical(format!(
                        "field {}: gradient component {k} is {} but differences give {fd} at {x:?}",
                        self.label, g[k]
                    )));
                }
            }
        }
        Ok(())
    }
}

macro_rules! field2 {
    ($label:expr, |$x:ident, $y:ident| $v:expr, [$gx:expr, $gy:expr]) => {
        AnalyticField::new(
            $label,
            2,
            |p: &[f64]| {
                #[allow(unused_variables)]
                let ($x, $y) = (p[0], p[1]);
                $v
            },
            |p: &[f64], g: &mut [f64]| {
                #[allow(unused_variables)]
                let ($x, $y) = (p[0], p[1]);
                g[0] = $gx;
                g[1] = $gy;
            },
        )
    };
}

/// The fixed planar catalog used by the inequality sweeps.
///
/// Every field is smooth, and wherever the gradient vanishes inside the
/// disk of radius 2 around the origin it does so at the origin itself, where
/// the vertex-polar integrands stay smooth. This keeps the product Gauss
/// rules spectrally accurate on every cone with vertex at the origin and
/// height at most 2.
pub fn catalog_2d() -> Vec<AnalyticField> {
    vec![
        field2!("zero", |_x, _y| 0.0, [0.0, 0.0]),
        field2!("const3", |_x, _y| 3.0, [0.0, 0.0]),
        field2!("lin_x", |x, _y| x, [1.0, 0.0]),
        field2!("lin_y", |_x, y| y, [0.0, 1.0]),
        field2!("lin_diag", |x, y| 0.6 * x - 0.8 * y, [0.6, -0.8]),
        field2!("lin_steep", |x, y| 2.5 * x + 1.5 * y + 0.7, [2.5, 1.5]),
        field2!("radial_sq", |x, y| x * x + y * y, [2.0 * x, 2.0 * y]),
        field2!("saddle", |x, y| x * x - y * y, [2.0 * x, -2.0 * y]),
        field2!("product", |x, y| x * y, [y, x]),
        field2!("aniso_sq", |x, y| x * x + 3.0 * y * y, [2.0 * x, 6.0 * y]),
        field2!("shifted_sq", |x, y| (x - 3.0).powi(2) + y * y, [2.0 * (x - 3.0), 2.0 * y]),
        field2!("exp_x", |x, _y| x.exp(), [x.exp(), 0.0]),
        field2!(
            "exp_mix",
            |x, y| (0.5 * x - 0.3 * y).exp(),
            [0.5 * (0.5 * x - 0.3 * y).exp(), -0.3 * (0.5 * x - 0.3 * y).exp()]
        ),
        field2!("exp_neg", |x, _y| (-x).exp(), [-(-x).exp(), 0.0]),
        field2!(
            "sin_cos_shift",
            |x, y| (0.5 * x + 0.2).sin() * (0.5 * y + 0.1).cos(),
            [
                0.5 * (0.5 * x + 0.2).cos() * (0.5 * y + 0.1).cos(),
                -0.5 * (0.5 * x + 0.2).sin() * (0.5 * y + 0.1).sin()
            ]
        ),
        field2!(
            "cos_cos",
            |x, y| x.cos() * y.cos(),
            [-x.sin() * y.cos(), -x.cos() * y.sin()]
        ),
        field2!(
            "sin_plus_cos",
            |x, y| (0.6 * x).sin() + 0.5 * (0.7 * y).cos(),
            [0.6 * (0.6 * x).cos(), -0.35 * (0.7 * y).sin()]
        ),
        field2!(
            "harmonic_cubic",
            |x, y| x * x * x - 3.0 * x * y * y,
            [3.0 * (x * x - y * y), -6.0 * x * y]
        ),
        field2!("x_exp_y", |x, y| x * y.exp(), [y.exp(), x * y.exp()]),
        field2!(
            "log_affine",
            |x, y| (4.0 + x + y).ln(),
            [1.0 / (4.0 + x + y), 1.0 / (4.0 + x + y)]
        ),
        field2!(
            "rational_bump",
            |x, y| 1.0 / (3.0 + x * x + y * y),
            [
                -2.0 * x / (3.0 + x * x + y * y).powi(2),
                -2.0 * y / (3.0 + x * x + y * y).powi(2)
            ]
        ),
        field2!(
            "tanh_ridge",
            |x, y| (x - 0.5 * y).tanh(),
            [
                1.0 / (x - 0.5 * y).cosh().powi(2),
                -0.5 / (x - 0.5 * y).cosh().powi(2)
            ]
        ),
        field2!(
            "cubic_mix",
            |x, y| x * x * y + y * y * y / 3.0 + x,
            [2.0 * x * y + 1.0, x * x + y * y]
        ),
    ]
}

/// Linear field `⟨v, y - x0⟩` in any dimension.
pub fn linear(label: &str, v: Vec<f64>, x0: Vec<f64>) -> AnalyticField {
    let dim = v.len();
    let vg = v.clone();
    AnalyticField::new(
        label,
        dim,
        move |y| v.iter().zip(y).zip(&x0).map(|((vi, yi), xi)| vi * (yi - xi)).sum(),
        move |_y, out| out.copy_from_slice(&vg),
    )
}

/// `|y - x0|²` in any dimension.
pub fn squared_distance(label: &str, x0: Vec<f64>) -> AnalyticField {
    let dim = x0.len();
    let xg = x0.clone();
    AnalyticField::new(
        label,
        dim,
        move |y| y.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum(),
        move |y, out| {
            for ((o, a), b) in out.iter_mut().zip(y).zip(&xg) {
                *o = 2.0 * (a - b);
            }
        },
    )
}

/// Constant field.
pub fn constant(label: &str, dim: usize, c: f64) -> AnalyticField {
    AnalyticField::new(label, dim, move |_| c, |_, out| out.iter_mut().for_each(|o| *o = 0.0))
}
