use std::io::Write;

use crate::assembly::SparseSymMatrix;
use crate::error::{Error, Result};

/// Default relative residual tolerance of linear solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `S u = B` restricted to `{u : mᵀu = 0}`, where the kernel of `S` is the
/// constant vector and `m = M 1` integrates basis functions.
#[derive(Clone, Copy)]
pub struct ConstrainedSystem<'a> {
    pub s: &'a SparseSymMatrix,
    pub b: &'a [f64],
    pub m: &'a [f64],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial one.
    pub residuals: Vec<f64>,
}

impl SolveOutcome {
    /// Solver telemetry as CSV.
    pub fn write_telemetry<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,relative_residual")?;
        for (k, r) in self.residuals.iter().enumerate() {
            writeln!(out, "{k},{r:e}")?;
        }
        Ok(())
    }
}

/// Removes the constant-function component of a load: `b - m (1ᵀb) / (1ᵀm)`.
/// Afterwards `1ᵀb = 0`, i.e. the data is compatible with the kernel of `S`.
pub fn project_load(b: &mut [f64], m: &[f64]) {
    let sb: f64 = b.iter().sum();
    let sm: f64 = m.iter().sum();
    for (bi, mi) in b.iter_mut().zip(m) {
        *bi -= mi * sb / sm;
    }
}

/// Shifts coefficients by a constant so that `mᵀu = 0` (zero mean).
pub fn project_zero_mean(u: &mut [f64], m: &[f64]) {
    let mu: f64 = m.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
    let sm: f64 = m.iter().sum();
    let c = mu / sm;
    for ui in u.iter_mut() {
        *ui -= c;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients on the zero-mean subspace.
pub fn solve_zero_mean(sys: ConstrainedSystem<'_>, tol: f64, max_iter: usize) -> Result<SolveOutcome> {
    let n = sys.s.dim();
    if sys.b.len() != n || sys.m.len() != n {
        return Err(Error::MeshMismatch(format!(
            "system of size {n} with load of size {} and mean vector of size {}",
            sys.b.len(),
            sys.m.len()
        )));
    }
    let sm: f64 = sys.m.iter().sum();
    if !(sm.abs() > 0.0) {
        return Err(Error::SingularSystem("mean vector integrates to zero".into()));
    }
    let mut r = sys.b.to_vec();
    project_load(&mut r, sys.m);
    let norm_b = dot(&r, &r).sqrt();
    let mut u = vec![0.0; n];
    if norm_b == 0.0 {
        return Ok(SolveOutcome { u, iterations: 0, residuals: vec![0.0] });
    }
    let inv_diag: Vec<f64> = sys
        .s
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precondition = |r: &[f64], z: &mut [f64]| {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&inv_diag) {
            *zi = ri * di;
        }
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut sp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut residuals = vec![1.0];
    for it in 1..=max_iter {
        sys.s.mul_vec_into(&p, &mut sp);
        let psp = dot(&p, &sp);
        if !(psp > 0.0) {
            if rz == 0.0 {
                // Residual underflowed before reaching an unattainable tolerance.
                break;
            }
            return Err(Error::SingularSystem(format!("non-positive curvature pᵀSp = {psp:e}")));
        }
        let alpha = rz / psp;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * sp[i];
        }
        // Keep r orthogonal to the kernel; shifting u by a constant leaves S u alone.
        project_load(&mut r, sys.m);
        project_zero_mean(&mut u, sys.m);
        let rel = dot(&r, &r).sqrt() / norm_b;
        residuals.push(rel);
        if rel <= tol {
            return Ok(SolveOutcome { u, iterations: it, residuals });
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: residuals.len() - 1, residual: *residuals.last().unwrap() })
}
