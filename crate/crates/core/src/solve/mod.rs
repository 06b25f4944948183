//! Zero-mean linear solves, the generalized eigenproblem and the quadrature
//! consistency error.

mod cg;
mod eigen;

pub use cg::{project_load, project_zero_mean, solve_zero_mean, ConstrainedSystem, SolveOutcome, DEFAULT_TOL};
pub use eigen::{
    clusters, dense_generalized_eigenvalues, eigen_solve, eigen_solve_with, EigenOptions, EigenResult,
    DEFAULT_EIGEN_TOL,
};

use crate::assembly::SparseSymMatrix;
use crate::error::Result;

/// Default iteration cap of a solve on `n` unknowns.
pub fn default_max_iter(n: usize) -> usize {
    10 * n.max(100)
}

/// Consistency of the approximate form `ã` at `u`: the `a`-norm of the Riesz
/// representer `z` of `a(u, ·) − ã(u, ·)`, i.e.
/// `sup_w (a(u, w) − ã(u, w)) / ‖w‖_a` over zero-mean `w`.
pub fn consistency_error(
    exact: &SparseSymMatrix,
    approx: &SparseSymMatrix,
    u: &[f64],
    mean: &[f64],
    tol: f64,
) -> Result<f64> {
    let su = exact.mul_vec(u);
    let tu = approx.mul_vec(u);
    let d: Vec<f64> = su.iter().zip(&tu).map(|(a, b)| a - b).collect();
    let z = solve_zero_mean(ConstrainedSystem { s: exact, b: &d, m: mean }, tol, default_max_iter(u.len()))?.u;
    Ok(exact.bilinear(&z, &z).max(0.0).sqrt())
}
