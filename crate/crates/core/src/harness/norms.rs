use crate::assembly::{Assembler, Operator, SparseSymMatrix};
use crate::error::{Error, Result};
use crate::quadrature::{CellRules, RuleSpec};
use crate::topology::ControlMesh;

/// Rules used for error integration: GA(6) on regular cells, AG(6,3) on cells
/// with an extraordinary corner.
pub fn error_rules() -> CellRules {
    RuleSpec::Adaptive(3).cell_rules(6).expect("built-in rule")
}

/// Maps coefficients on `chain[from]` to `chain[to]` by Loop refinement, which
/// represents the same limit function (nested spaces).
pub fn prolong(coeffs: &[f64], chain: &[ControlMesh], from: usize, to: usize) -> Result<Vec<f64>> {
    if from > to || to >= chain.len() {
        return Err(Error::LevelMismatch(format!(
            "cannot prolong from level {from} to level {to} in a chain of {} meshes",
            chain.len()
        )));
    }
    if coeffs.len() != chain[from].num_vertices() {
        return Err(Error::LevelMismatch(format!(
            "{} coefficients for a mesh with {} vertices",
            coeffs.len(),
            chain[from].num_vertices()
        )));
    }
    let mut u = coeffs.to_vec();
    for mesh in &chain[from..to] {
        u = mesh.subdivide_values(&u);
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    /// `‖Δ_M e‖_{L²}`.
    pub h2_semi: f64,
}

/// Mass, Laplace and bi-Laplace matrices of the reference mesh; the error
/// norms are the corresponding quadratic forms.
pub struct NormMatrices {
    mass: SparseSymMatrix,
    laplace: SparseSymMatrix,
    bilaplace: SparseSymMatrix,
}

impl NormMatrices {
    pub fn new(reference: &ControlMesh) -> Result<Self> {
        let asm = Assembler::new(reference)?;
        let rules = error_rules();
        Ok(Self {
            mass: asm.matrix(Operator::Mass, &rules)?,
            laplace: asm.matrix(Operator::Laplace, &rules)?,
            bilaplace: asm.matrix(Operator::BiLaplace, &rules)?,
        })
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    /// Norms of `u - reference`, both given on the reference mesh.
    pub fn error_norms(&self, u: &[f64], reference: &[f64]) -> Result<ErrorNorms> {
        if u.len() != self.mass.dim() || reference.len() != self.mass.dim() {
            return Err(Error::MeshMismatch(format!(
                "vectors of length {} and {} on a reference mesh with {} vertices",
                u.len(),
                reference.len(),
                self.mass.dim()
            )));
        }
        let e: Vec<f64> = u.iter().zip(reference).map(|(a, b)| a - b).collect();
        let norm = |a: &SparseSymMatrix| a.bilinear(&e, &e).max(0.0).sqrt();
        Ok(ErrorNorms { l2: norm(&self.mass), h1_semi: norm(&self.laplace), h2_semi: norm(&self.bilaplace) })
    }
}

/// One-shot [`NormMatrices::error_norms`].
pub fn error_norms(u: &[f64], reference: &[f64], reference_mesh: &ControlMesh) -> Result<ErrorNorms> {
    NormMatrices::new(reference_mesh)?.error_norms(u, reference)
}

/// Experimental orders `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
pub fn eoc(errors: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != h.len() || errors.len() < 2 {
        return Err(Error::DegenerateErrors(format!(
            "{} errors for {} mesh sizes, need at least two of each",
            errors.len(),
            h.len()
        )));
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::DegenerateErrors("errors must be positive".into()));
    }
    if h.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::DegenerateErrors("mesh sizes must be positive and strictly decreasing".into()));
    }
    Ok(errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}
