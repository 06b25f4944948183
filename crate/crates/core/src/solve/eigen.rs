use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cg::{project_zero_mean, solve_zero_mean, ConstrainedSystem};
use crate::assembly::SparseSymMatrix;
use crate::error::{Error, Result};

/// Default relative residual tolerance of eigenpairs.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Extra block vectors beyond the requested count; they speed up
    /// convergence when the wanted eigenvalues sit in a cluster.
    pub guard: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_EIGEN_TOL, max_iterations: 500, guard: 6, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Ascending, positive.
    pub values: Vec<f64>,
    /// M-orthonormal, zero mean.
    pub vectors: Vec<Vec<f64>>,
    /// `‖S u − λ M u‖ / ‖S u‖` per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Index ranges of eigenvalues closer than the tolerance allows to separate.
    pub clusters: Vec<Range<usize>>,
}

/// The `k` smallest non-zero eigenpairs of `S u = λ M u`.
pub fn eigen_solve(s: &SparseSymMatrix, m: &SparseSymMatrix, k: usize, tol: f64) -> Result<EigenResult> {
    eigen_solve_with(s, m, k, &EigenOptions { tol, ..Default::default() })
}

/// Block inverse iteration on the zero-mean subspace with Rayleigh-Ritz
/// extraction; every inner solve is a projected CG at `tol / 100`.
pub fn eigen_solve_with(s: &SparseSymMatrix, m: &SparseSymMatrix, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    let n = s.dim();
    if k == 0 || m.dim() != n {
        return Err(Error::Config(format!("cannot compute {k} eigenpairs of a {n}-dimensional problem")));
    }
    let mean = m.mul_vec(&vec![1.0; n]);
    // The constant vector is excluded, leaving n - 1 eigenpairs.
    let block = (k + opts.guard).min(n - 1);
    if k > block {
        return Err(Error::Config(format!("requested {k} eigenpairs of a {n}-dimensional problem")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    for col in x.iter_mut() {
        project_zero_mean(col, &mean);
    }
    let inner_tol = opts.tol * 1e-2;
    let mut values = vec![0.0; block];
    let mut residuals = vec![f64::INFINITY; k];
    for it in 1..=opts.max_iterations {
        let mut y = x
            .par_iter()
            .map(|col| {
                let b = m.mul_vec(col);
                solve_zero_mean(ConstrainedSystem { s, b: &b, m: &mean }, inner_tol, 10 * n.max(100)).map(|o| o.u)
            })
            .collect::<Result<Vec<_>>>()?;
        m_orthonormalize(&mut y, m, &mean, &mut rng);
        let sy: Vec<Vec<f64>> = y.par_iter().map(|c| s.mul_vec(c)).collect();
        let a = DMatrix::from_fn(block, block, |i, j| dot(&y[i], &sy[j]));
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        x = order
            .iter()
            .map(|&c| combine(&y, eig.eigenvectors.column(c).as_slice()))
            .collect();
        values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        for j in 0..k {
            let sx = s.mul_vec(&x[j]);
            let mx = m.mul_vec(&x[j]);
            let r: f64 = sx.iter().zip(&mx).map(|(a, b)| (a - values[j] * b).powi(2)).sum();
            residuals[j] = r.sqrt() / dot(&sx, &sx).sqrt();
        }
        if residuals.iter().all(|&r| r <= opts.tol) {
            x.truncate(k);
            values.truncate(k);
            let clusters = clusters(&values, opts.tol.sqrt());
            return Ok(EigenResult { values, vectors: x, residuals, iterations: it, clusters });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: residuals.iter().cloned().fold(0.0, f64::max),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (col, &c) in basis.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += c * v;
        }
    }
    out
}

/// Twice-iterated Gram-Schmidt in the M inner product; columns that collapse
/// are replaced by fresh random zero-mean vectors.
fn m_orthonormalize(cols: &mut [Vec<f64>], m: &SparseSymMatrix, mean: &[f64], rng: &mut ChaCha8Rng) {
    for j in 0..cols.len() {
        for attempt in 0..3 {
            let original = dot(&cols[j], &m.mul_vec(&cols[j])).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let mc = m.mul_vec(&cols[i]);
                    let c = dot(&cols[j], &mc);
                    let (head, tail) = cols.split_at_mut(j);
                    for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                        *t -= c * h;
                    }
                }
            }
            let norm = dot(&cols[j], &m.mul_vec(&cols[j])).sqrt();
            if norm > 1e-10 * original && norm > 0.0 {
                for v in cols[j].iter_mut() {
                    *v /= norm;
                }
                break;
            }
            assert!(attempt < 2, "could not extend the eigen block");
            for v in cols[j].iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            project_zero_mean(&mut cols[j], mean);
        }
    }
}

/// Groups neighbouring eigenvalues whose relative gap is below `rel_gap`.
pub fn clusters(values: &[f64], rel_gap: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for j in 1..=values.len() {
        let split = j == values.len() || (values[j] - values[j - 1]) > rel_gap * values[j].abs();
        if split {
            if j - start > 1 {
                out.push(start..j);
            }
            start = j;
        }
    }
    out
}

/// All eigenvalues of the dense pencil `(S, M)`, ascending; a verification oracle.
pub fn dense_generalized_eigenvalues(s: &SparseSymMatrix, m: &SparseSymMatrix) -> Result<Vec<f64>> {
    let chol = m
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("mass matrix is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("singular Cholesky factor".into()))?;
    let c = &l_inv * s.to_dense() * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}
