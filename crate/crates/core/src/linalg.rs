//! Sparse linear systems from the finite-difference discretization.
//!
//! The Shortley-Weller operator is not symmetric at irregular nodes, so the
//! direct path is a sparse LU factorization and the iterative path is
//! BiCGStab with Jacobi preconditioning.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Above this many unknowns the iterative solver is used.
pub const DIRECT_LIMIT: usize = 1_000_000;
/// Target relative residual of the iterative path.
pub const ITERATIVE_TOL: f64 = 1e-12;

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_start: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row entry lists; duplicate columns are summed by the caller.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_start.push(cols.len());
        }
        Self { n, row_start, cols, vals }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_start[i]..self.row_start[i + 1])
                    .filter(|&k| self.cols[k] == i)
                    .map(|k| self.vals[k])
                    .sum()
            })
            .collect()
    }

    /// `‖b - Ax‖ / ‖b‖`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.matvec(x, &mut ax);
        let r: f64 = ax.iter().zip(b).map(|(a, bi)| (bi - a).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nb == 0.0 { r } else { r / nb }
    }
}

/// Solution of a linear system and its relative residual.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub direct: bool,
}

/// Solves `Ax = b`, directly for moderate sizes and iteratively beyond.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<LinearSolution> {
    if a.n <= DIRECT_LIMIT {
        solve_direct(a, b)
    } else {
        let (x, residual) = bicgstab(a, b, ITERATIVE_TOL, 20 * a.n.max(100))?;
        Ok(LinearSolution { x, residual, direct: false })
    }
}

/// Sparse LU solve with one step of iterative refinement.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<LinearSolution> {
    let n = a.n;
    let mut triplets = Vec::with_capacity(a.vals.len());
    for i in 0..n {
        for k in a.row_start[i]..a.row_start[i + 1] {
            triplets.push(Triplet::new(i, a.cols[k], a.vals[k]));
        }
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Numerical(format!("sparse LU failed: {e:?}")))?;
    let rhs = faer::col::Col::<f64>::from_fn(n, |i| b[i]);
    let sol = lu.solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| sol[i]).collect();
    // one refinement step
    let mut ax = vec![0.0; n];
    a.matvec(&x, &mut ax);
    let r = faer::col::Col::<f64>::from_fn(n, |i| b[i] - ax[i]);
    let dx = lu.solve(&r);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += dx[i];
    }
    let residual = a.relative_residual(&x, b);
    if !residual.is_finite() {
        return Err(Error::Numerical("direct solve produced non-finite values".into()));
    }
    Ok(LinearSolution { x, residual, direct: true })
}

/// Jacobi-preconditioned BiCGStab. Returns the solution and relative residual.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let n = a.n;
    let diag = a.diagonal();
    if diag.iter().any(|d| *d == 0.0) {
        return Err(Error::Numerical("zero diagonal entry, Jacobi preconditioner undefined".into()));
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let nb = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] / diag[i];
        }
        a.matvec(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() <= tol * nb {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            let res = a.relative_residual(&x, b);
            return Ok((x, res));
        }
        for i in 0..n {
            zs[i] = s[i] / diag[i];
        }
        a.matvec(&zs, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        if dot(&r, &r).sqrt() <= tol * nb {
            let res = a.relative_residual(&x, b);
            return Ok((x, res));
        }
        if omega == 0.0 || !omega.is_finite() {
            break;
        }
    }
    let res = a.relative_residual(&x, b);
    if res <= tol {
        Ok((x, res))
    } else {
        Err(Error::Numerical(format!("BiCGStab stalled at relative residual {res:.3e}")))
    }
}
