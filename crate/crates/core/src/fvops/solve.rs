//! Krylov solvers on [`LduMatrix`] and a dense direct fallback.
//!
//! Convergence is declared on the true residual, `‖b - Ax‖₂ ≤ rtol ‖b‖₂`;
//! the recursively updated residual is only used to decide when to check.

use nalgebra::{DMatrix, DVector};

use super::cholesky::ProfileCholesky;
use super::ldu::LduMatrix;
use crate::error::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Conjugate gradients; symmetric positive (semi-)definite systems.
    Cg,
    /// Stabilised bi-conjugate gradients; general systems.
    BiCgStab,
    /// Dense LU; at most [`DENSE_LIMIT`] unknowns.
    Dense,
}

pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub method: Method,
    pub rtol: f64,
    pub max_iter: usize,
}

impl SolverSettings {
    pub fn cg(rtol: f64) -> Self {
        SolverSettings { method: Method::Cg, rtol, max_iter: 5000 }
    }
    pub fn bicgstab(rtol: f64) -> Self {
        SolverSettings { method: Method::BiCgStab, rtol, max_iter: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: &'static str,
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub target: f64,
}

/// Square system `A x = b` with its solver settings.
///
/// When `A` annihilates constants (pure Neumann), the right-hand side is
/// projected onto the range and the solution is shifted to zero mean under
/// `mean_weights` (unit weights when absent).
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: LduMatrix,
    pub rhs: Vec<f64>,
    pub settings: SolverSettings,
    pub mean_weights: Option<Vec<f64>>,
}

pub enum Preconditioner<'a> {
    Jacobi,
    /// Exact Cholesky factor of a nearby (possibly identical) matrix.
    Cholesky(&'a ProfileCholesky),
}

impl Preconditioner<'_> {
    fn apply(&self, a: &LduMatrix, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi => {
                for ((zi, ri), d) in z.iter_mut().zip(r).zip(&a.diag) {
                    *zi = ri / d;
                }
            }
            Preconditioner::Cholesky(l) => {
                z.copy_from_slice(r);
                l.solve_in_place(z);
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve_sparse(sys: &SparseSystem, x: &mut [f64]) -> Result<SolveReport, SolverError> {
    let a = &sys.matrix;
    let singular = a.has_constant_nullspace();
    let mut rhs = sys.rhs.clone();
    if singular {
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        rhs.iter_mut().for_each(|v| *v -= mean);
    }
    let report = match sys.settings.method {
        Method::Cg => pcg(a, &rhs, x, &sys.settings, &Preconditioner::Jacobi)?,
        Method::BiCgStab => bicgstab(a, &rhs, x, &sys.settings)?,
        Method::Dense => {
            let sol = if singular {
                dense_solve_singular(a, &rhs)?
            } else {
                dense_solve(a, &rhs)?
            };
            x.copy_from_slice(&sol);
            let mut r = vec![0.0; x.len()];
            a.residual(x, &rhs, &mut r);
            SolveReport {
                method: "dense-lu",
                iterations: 1,
                initial_residual: norm(&rhs),
                final_residual: norm(&r),
                target: sys.settings.rtol * norm(&rhs),
            }
        }
    };
    if singular {
        remove_weighted_mean(x, sys.mean_weights.as_deref());
    }
    Ok(report)
}

/// Shifts `x` so that its (weighted) mean is zero.
pub fn remove_weighted_mean(x: &mut [f64], weights: Option<&[f64]>) {
    let (s, w) = match weights {
        Some(w) => (
            x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>(),
            w.iter().sum::<f64>(),
        ),
        None => (x.iter().sum::<f64>(), x.len() as f64),
    };
    let mean = s / w;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Preconditioned conjugate gradients, starting from the initial guess in `x`.
pub fn pcg(
    a: &LduMatrix,
    b: &[f64],
    x: &mut [f64],
    settings: &SolverSettings,
    precond: &Preconditioner,
) -> Result<SolveReport, SolverError> {
    let n = b.len();
    let bnorm = norm(b);
    let target = settings.rtol * bnorm;
    let mut r = vec![0.0; n];
    a.residual(x, b, &mut r);
    let r0 = norm(&r);
    let mut history = vec![r0];
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveReport { method: "pcg", iterations: 0, initial_residual: 0.0, final_residual: 0.0, target });
    }
    if r0 <= target {
        return Ok(SolveReport { method: "pcg", iterations: 0, initial_residual: r0, final_residual: r0, target });
    }
    let mut z = vec![0.0; n];
    precond.apply(a, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=settings.max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolverError::Breakdown {
                method: "pcg",
                iterations: it,
                reason: format!("non-positive curvature p·Ap = {pap:e}"),
                residual_history: history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm(&r);
        history.push(rn);
        if rn <= target {
            // Confirm against the true residual before returning.
            a.residual(x, b, &mut r);
            let true_r = norm(&r);
            if true_r <= target {
                return Ok(SolveReport { method: "pcg", iterations: it, initial_residual: r0, final_residual: true_r, target });
            }
        }
        precond.apply(a, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NotConverged {
        method: "pcg",
        iterations: settings.max_iter,
        final_residual: *history.last().unwrap(),
        target,
        residual_history: history,
    })
}

/// Jacobi-preconditioned BiCGStab, starting from the initial guess in `x`.
pub fn bicgstab(
    a: &LduMatrix,
    b: &[f64],
    x: &mut [f64],
    settings: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    let n = b.len();
    let bnorm = norm(b);
    let target = settings.rtol * bnorm;
    let mut r = vec![0.0; n];
    a.residual(x, b, &mut r);
    let r0n = norm(&r);
    let mut history = vec![r0n];
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveReport { method: "bicgstab", iterations: 0, initial_residual: 0.0, final_residual: 0.0, target });
    }
    if r0n <= target {
        return Ok(SolveReport { method: "bicgstab", iterations: 0, initial_residual: r0n, final_residual: r0n, target });
    }
    let inv_d: Vec<f64> = a.diag.iter().map(|d| 1.0 / d).collect();
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let breakdown = |it: usize, reason: &str, history: Vec<f64>| SolverError::Breakdown {
        method: "bicgstab",
        iterations: it,
        reason: reason.to_string(),
        residual_history: history,
    };
    for it in 1..=settings.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            // Restart with the current residual as shadow vector.
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            if dot(&r, &r) == 0.0 {
                return Err(breakdown(it, "zero residual inner product", history));
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * inv_d[i];
        }
        a.mul(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(breakdown(it, "r̂·v = 0", history));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            a.residual(x, b, &mut r);
            let true_r = norm(&r);
            history.push(true_r);
            if true_r <= target {
                return Ok(SolveReport { method: "bicgstab", iterations: it, initial_residual: r0n, final_residual: true_r, target });
            }
            continue;
        }
        for i in 0..n {
            zs[i] = s[i] * inv_d[i];
        }
        a.mul(&zs, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(breakdown(it, "t = 0", history));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = norm(&r);
        history.push(rn);
        if rn <= target {
            a.residual(x, b, &mut r);
            let true_r = norm(&r);
            if true_r <= target {
                return Ok(SolveReport { method: "bicgstab", iterations: it, initial_residual: r0n, final_residual: true_r, target });
            }
        }
        if omega == 0.0 {
            return Err(breakdown(it, "ω = 0", history));
        }
    }
    Err(SolverError::NotConverged {
        method: "bicgstab",
        iterations: settings.max_iter,
        final_residual: *history.last().unwrap(),
        target,
        residual_history: history,
    })
}

/// Dense LU solve with partial pivoting.
pub fn dense_solve(a: &LduMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    if a.n() > DENSE_LIMIT {
        return Err(SolverError::TooLargeForDense(a.n()));
    }
    dense_lu(a.to_dense(), b)
}

pub fn dense_lu(m: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let lu = m.clone().lu();
    let cond = condition_estimate(&m);
    match lu.solve(&DVector::from_column_slice(b)) {
        Some(x) if x.iter().all(|v| v.is_finite()) && cond < 1e15 => Ok(x.as_slice().to_vec()),
        _ => Err(SolverError::Singular { condition_estimate: cond }),
    }
}

/// Dense solve of a singular system whose nullspace is the constants: one
/// row is replaced by the zero-sum constraint.
fn dense_solve_singular(a: &LduMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    if a.n() > DENSE_LIMIT {
        return Err(SolverError::TooLargeForDense(a.n()));
    }
    let mut m = a.to_dense();
    let mut rhs = b.to_vec();
    let last = a.n() - 1;
    for j in 0..a.n() {
        m[(last, j)] = 1.0;
    }
    rhs[last] = 0.0;
    dense_lu(m, &rhs)
}

/// Ratio of extreme singular values (2-norm condition number).
pub fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
