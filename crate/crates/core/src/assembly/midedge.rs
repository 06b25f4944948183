//! Mid-edge assembly by iterating over edges.
//!
//! Every edge midpoint is shared by the two incident cells and the mid-edge
//! rule gives it weight 1/6 in each. All integrands are invariant under the
//! affine reparametrizations that permute a cell's corners, so the point is
//! evaluated once, in the chart whose origin is the edge's extraordinary
//! endpoint (or any endpoint of a regular edge), and weighted by 1/3. In that
//! chart the midpoint is `ξ = (1/2, 0)` and the basis data comes straight from
//! the mid-edge table.

use std::collections::HashMap;
use std::sync::Arc;

use super::{chunked, mirror_upper, Assembler, Operator, SparseSymMatrix};
use crate::basis::{collect_patch_rotated, midedge_table, Jet, PatchStencil};
use crate::error::{Error, Result};
use crate::topology::Point3;

/// Both incident cells contribute weight 1/6 at the shared midpoint.
const EDGE_WEIGHT: f64 = 1.0 / 3.0;

#[derive(Clone, Debug)]
pub(super) struct EdgeStencil {
    cell: usize,
    ids: Vec<usize>,
    source: EdgeSource,
}

#[derive(Clone, Debug)]
enum EdgeSource {
    /// Mid-edge table of this valence; `ids` holds the `N + 4` points that do
    /// not vanish at the midpoint.
    Table(usize),
    /// A regular edge whose two opposite corners are both extraordinary: no
    /// chart puts a regular or extraordinary endpoint at the origin, so the
    /// basis is evaluated at the midpoint in the patch chart of the cell.
    Evaluate { valence: usize, xi: [f64; 2] },
}

impl<'a> Assembler<'a> {
    pub(super) fn edge_stencils(&self) -> Result<Arc<Vec<EdgeStencil>>> {
        if let Some(e) = self.edges.get() {
            return Ok(e.clone());
        }
        let mesh = self.mesh;
        let mut out = Vec::with_capacity(mesh.num_edges());
        for e in 0..mesh.num_edges() {
            let (h, t) = mesh.edge_half_edges(e);
            let (a, b) = mesh.half_edge_vertices(h);
            let ev = |v: usize| mesh.is_extraordinary(v);
            if ev(a) && ev(b) {
                return Err(Error::TwoEVsOnEdge { a, b });
            }
            let chosen = if ev(a) || (!ev(b) && !ev(mesh.opposite_vertex(h))) {
                Some(h)
            } else if ev(b) || !ev(mesh.opposite_vertex(t)) {
                Some(t)
            } else {
                None
            };
            out.push(match chosen {
                Some(s) => {
                    let patch = collect_patch_rotated(mesh, s / 3, s % 3)?;
                    let n = patch.valence;
                    let mut ids = patch.control_ids;
                    ids.truncate(n + 4);
                    EdgeStencil { cell: s / 3, ids, source: EdgeSource::Table(n) }
                }
                None => {
                    let patch = &self.patches[h / 3];
                    let mut bary = [0.0; 3];
                    bary[h % 3] = 0.5;
                    bary[(h % 3 + 1) % 3] = 0.5;
                    let (x1, x2) = patch.to_patch_chart(bary[1], bary[2]);
                    EdgeStencil {
                        cell: h / 3,
                        ids: patch.control_ids.clone(),
                        source: EdgeSource::Evaluate { valence: patch.valence, xi: [x1, x2] },
                    }
                }
            });
        }
        let out = Arc::new(out);
        let _ = self.edges.set(out.clone());
        Ok(out)
    }

    /// Matrix of `op` under the mid-edge rule, assembled edge by edge.
    pub fn midedge_matrix(&self, op: Operator) -> Result<SparseSymMatrix> {
        let edges = self.edge_stencils()?;
        let tables = tables_for(&edges)?;
        let mut out = SparseSymMatrix::zeros(self.pattern.clone());
        chunked(
            &edges,
            self.parallel,
            |edge| {
                let jets = edge_jets(edge, &tables)?;
                let k = edge.ids.len();
                let g = self.sample(edge.cell, &edge.ids, &jets)?;
                let mut local = vec![0.0; k * k];
                g.accumulate(op, &jets, EDGE_WEIGHT, &mut local);
                mirror_upper(&mut local, k);
                Ok(local)
            },
            |edge, local| out.add_block(&edge.ids, &local),
        )?;
        Ok(out)
    }

    /// Load vector under the mid-edge rule, assembled edge by edge.
    pub fn midedge_rhs(&self, f: &(dyn Fn(&Point3) -> f64 + Sync)) -> Result<Vec<f64>> {
        let edges = self.edge_stencils()?;
        let tables = tables_for(&edges)?;
        let mut out = vec![0.0; self.mesh.num_vertices()];
        chunked(
            &edges,
            self.parallel,
            |edge| {
                let jets = edge_jets(edge, &tables)?;
                let g = self.sample(edge.cell, &edge.ids, &jets)?;
                let mut local = vec![0.0; edge.ids.len()];
                g.accumulate_load(f, &jets, EDGE_WEIGHT, &mut local);
                Ok(local)
            },
            |edge, local| {
                for (&i, v) in edge.ids.iter().zip(local) {
                    out[i] += v;
                }
            },
        )?;
        Ok(out)
    }
}

fn tables_for(edges: &[EdgeStencil]) -> Result<HashMap<usize, Vec<Jet>>> {
    let mut tables = HashMap::new();
    for e in edges {
        if let EdgeSource::Table(n) = e.source {
            if !tables.contains_key(&n) {
                tables.insert(n, midedge_table(n)?.rows().to_vec());
            }
        }
    }
    Ok(tables)
}

fn edge_jets<'t>(edge: &EdgeStencil, tables: &'t HashMap<usize, Vec<Jet>>) -> Result<std::borrow::Cow<'t, [Jet]>> {
    match edge.source {
        EdgeSource::Table(n) => Ok(std::borrow::Cow::Borrowed(&tables[&n])),
        EdgeSource::Evaluate { valence, xi } => {
            let patch = PatchStencil {
                cell: edge.cell,
                control_ids: edge.ids.clone(),
                valence,
                rotation: 0,
                ev_corner: None,
            };
            Ok(std::borrow::Cow::Owned(patch.eval(xi[0], xi[1])?))
        }
    }
}
