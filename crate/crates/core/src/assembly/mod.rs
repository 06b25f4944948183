//! Quadrature-based assembly of mass, stiffness and load data.
//!
//! The generic path loops over cells, evaluates the basis at the rule's
//! points in the cell's patch chart and scatters dense local blocks. The
//! mid-edge path loops over edges instead and reads basis data from the
//! closed-form mid-edge tables.

mod geometry;
mod midedge;
mod sparse;

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::basis::{collect_patch, Jet, PatchStencil};
use crate::error::{Error, Result};
use crate::quadrature::CellRules;
use crate::topology::{ControlMesh, Point3};

pub use geometry::GeometrySample;
pub use sparse::{Pattern, SparseSymMatrix};

/// Bilinear forms available for assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operator {
    /// `∫ φ_i φ_j da`
    Mass,
    /// `∫ ∇_M φ_i · ∇_M φ_j da`
    Laplace,
    /// `∫ Δ_M φ_i Δ_M φ_j da`
    BiLaplace,
}

/// Cells handed to the worker pool at once; results are scattered in order.
const CHUNK: usize = 2048;

/// Patches, sparsity and scaling data shared by all assemblies on one mesh.
pub struct Assembler<'a> {
    mesh: &'a ControlMesh,
    patches: Vec<PatchStencil>,
    pattern: Arc<Pattern>,
    metric_floor: f64,
    parallel: bool,
    edges: OnceLock<Arc<Vec<midedge::EdgeStencil>>>,
}

impl<'a> Assembler<'a> {
    /// Collects all cell patches. Fails if a cell has two extraordinary corners.
    pub fn new(mesh: &'a ControlMesh) -> Result<Self> {
        let patches = (0..mesh.num_cells())
            .map(|c| collect_patch(mesh, c))
            .collect::<Result<Vec<_>>>()?;
        let pattern = Arc::new(Pattern::from_blocks(
            mesh.num_vertices(),
            patches.iter().map(|p| p.control_ids.as_slice()),
        ));
        let mean_area = (0..mesh.num_cells()).map(|c| mesh.cell_area(c)).sum::<f64>() / mesh.num_cells() as f64;
        // det G scales like (2 · cell area)² in the unit-triangle chart.
        let metric_floor = 1e-14 * (2.0 * mean_area).powi(2);
        Ok(Self { mesh, patches, pattern, metric_floor, parallel: true, edges: OnceLock::new() })
    }

    /// Sequential mode computes and scatters cell by cell on one thread.
    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn mesh(&self) -> &ControlMesh {
        self.mesh
    }

    pub fn patches(&self) -> &[PatchStencil] {
        &self.patches
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    /// Quadrature-modified matrix of `op`.
    pub fn matrix(&self, op: Operator, rules: &CellRules) -> Result<SparseSymMatrix> {
        let mut out = SparseSymMatrix::zeros(self.pattern.clone());
        self.for_each_cell(
            |patch| {
                let rule = rules.for_cell(!patch.is_regular());
                let mut local = vec![0.0; patch.len() * patch.len()];
                for (xi, &w) in rule.points().iter().zip(rule.weights()) {
                    let jets = patch.eval(xi[0], xi[1])?;
                    let g = self.sample(patch.cell, &patch.control_ids, &jets)?;
                    g.accumulate(op, &jets, w, &mut local);
                }
                mirror_upper(&mut local, patch.len());
                Ok(local)
            },
            |patch, local| out.add_block(&patch.control_ids, &local),
        )?;
        Ok(out)
    }

    /// Load vector `∫ f φ_j da`.
    pub fn rhs(&self, rules: &CellRules, f: &(dyn Fn(&Point3) -> f64 + Sync)) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.mesh.num_vertices()];
        self.for_each_cell(
            |patch| {
                let rule = rules.for_cell(!patch.is_regular());
                let mut local = vec![0.0; patch.len()];
                for (xi, &w) in rule.points().iter().zip(rule.weights()) {
                    let jets = patch.eval(xi[0], xi[1])?;
                    let g = self.sample(patch.cell, &patch.control_ids, &jets)?;
                    g.accumulate_load(f, &jets, w, &mut local);
                }
                Ok(local)
            },
            |patch, local| {
                for (&i, v) in patch.control_ids.iter().zip(local) {
                    out[i] += v;
                }
            },
        )?;
        Ok(out)
    }

    /// `Σ_k Σ_q w_q √det G`: the surface area seen by the rules.
    pub fn area(&self, rules: &CellRules) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_cell(
            |patch| {
                let rule = rules.for_cell(!patch.is_regular());
                let mut a = 0.0;
                for (xi, &w) in rule.points().iter().zip(rule.weights()) {
                    let jets = patch.eval(xi[0], xi[1])?;
                    a += w * self.sample(patch.cell, &patch.control_ids, &jets)?.sqrt_det_g;
                }
                Ok(a)
            },
            |_, a| total += a,
        )?;
        Ok(total)
    }

    fn sample(&self, cell: usize, ids: &[usize], jets: &[Jet]) -> Result<GeometrySample> {
        let g = GeometrySample::new(self.mesh.positions(), ids, jets);
        if g.det_g <= self.metric_floor || !g.det_g.is_finite() {
            return Err(Error::DegenerateMetric { cell, det: g.det_g });
        }
        Ok(g)
    }

    fn for_each_cell<T: Send>(
        &self,
        compute: impl Fn(&PatchStencil) -> Result<T> + Sync,
        consume: impl FnMut(&PatchStencil, T),
    ) -> Result<()> {
        chunked(&self.patches, self.parallel, compute, consume)
    }
}

/// Computes per-item results (in parallel when enabled) and consumes them in
/// item order, so the reduction is deterministic.
fn chunked<I: Sync, T: Send>(
    items: &[I],
    parallel: bool,
    compute: impl Fn(&I) -> Result<T> + Sync,
    mut consume: impl FnMut(&I, T),
) -> Result<()> {
    for chunk in items.chunks(CHUNK) {
        let results: Vec<T> = if parallel {
            chunk.par_iter().map(&compute).collect::<Result<_>>()?
        } else {
            chunk.iter().map(&compute).collect::<Result<_>>()?
        };
        for (item, r) in chunk.iter().zip(results) {
            consume(item, r);
        }
    }
    Ok(())
}

/// Copies the upper triangle of a row-major `k × k` block into the lower one.
fn mirror_upper(local: &mut [f64], k: usize) {
    for a in 0..k {
        for b in 0..a {
            local[a * k + b] = local[b * k + a];
        }
    }
}

pub fn assemble_mass(mesh: &ControlMesh, rules: &CellRules) -> Result<SparseSymMatrix> {
    Assembler::new(mesh)?.matrix(Operator::Mass, rules)
}

pub fn assemble_stiffness_laplace(mesh: &ControlMesh, rules: &CellRules) -> Result<SparseSymMatrix> {
    Assembler::new(mesh)?.matrix(Operator::Laplace, rules)
}

pub fn assemble_stiffness_bilaplace(mesh: &ControlMesh, rules: &CellRules) -> Result<SparseSymMatrix> {
    Assembler::new(mesh)?.matrix(Operator::BiLaplace, rules)
}

pub fn assemble_rhs(
    mesh: &ControlMesh,
    rules: &CellRules,
    f: &(dyn Fn(&Point3) -> f64 + Sync),
) -> Result<Vec<f64>> {
    Assembler::new(mesh)?.rhs(rules, f)
}

/// Edge-iterator mid-edge assembly of a matrix.
pub fn assemble_midedge(mesh: &ControlMesh, op: Operator) -> Result<SparseSymMatrix> {
    Assembler::new(mesh)?.midedge_matrix(op)
}

/// Edge-iterator mid-edge assembly of a load vector.
pub fn assemble_midedge_rhs(mesh: &ControlMesh, f: &(dyn Fn(&Point3) -> f64 + Sync)) -> Result<Vec<f64>> {
    Assembler::new(mesh)?.midedge_rhs(f)
}
