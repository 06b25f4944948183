//! Loop basis functions on single cells.
//!
//! Every cell is evaluated in its own patch chart: the unit triangle with
//! corner 0 at `(0,0)`, corner 1 at `(1,0)` and corner 2 at `(0,1)`. When a
//! cell touches an extraordinary vertex the chart is rotated so that this
//! vertex sits at the origin.
//!
//! Patch points are ordered as follows, written as offsets on the regular
//! lattice spanned by the first two cell edges:
//!
//! ```text
//!   0 (0,0)  corner 0         6 (1,-1)
//!   1 (1,0)  corner 1         7 (2,-1)
//!   2 (0,1)  corner 2         8 (2,0)
//!   3 (-1,1)                  9 (1,1)
//!   4 (-1,0)                 10 (0,2)
//!   5 (0,-1)                 11 (-1,2)
//! ```
//!
//! Points 1..=6 are the one-ring of corner 0 in counterclockwise order. For an
//! extraordinary corner of valence `N` the ring has `N` entries and the five
//! outer points follow at `N + 1 ..= N + 5`.

mod irregular;
mod midedge;
mod regular;

use crate::error::{Error, Result};
use crate::topology::{ControlMesh, Point3, REGULAR_VALENCE};

pub use irregular::{eval_irregular, subdivision_matrix, SubdivisionMatrix, MAX_EVAL_DEPTH};
pub use midedge::{midedge_table, MidEdgeTable};
pub use regular::{eval_regular, REGULAR_POINTS};

/// Value and parametric derivatives of one function:
/// `[Φ, Φ_1, Φ_2, Φ_11, Φ_12, Φ_22]`.
pub type Jet = [f64; 6];

pub const VALUE: usize = 0;
pub const D1: usize = 1;
pub const D2: usize = 2;
pub const D11: usize = 3;
pub const D12: usize = 4;
pub const D22: usize = 5;

const DOMAIN_SLACK: f64 = 1e-12;

fn check_domain(xi1: f64, xi2: f64) -> Result<()> {
    let inside = xi1 >= -DOMAIN_SLACK && xi2 >= -DOMAIN_SLACK && xi1 + xi2 <= 1.0 + DOMAIN_SLACK;
    if inside && xi1.is_finite() && xi2.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain(xi1, xi2))
    }
}

/// Control points whose basis functions are supported on one cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchStencil {
    pub cell: usize,
    pub control_ids: Vec<usize>,
    /// Valence of the chart origin.
    pub valence: usize,
    /// Local corner of the cell placed at the chart origin.
    pub rotation: usize,
    /// Local corner holding the extraordinary vertex, if any.
    pub ev_corner: Option<usize>,
}

impl PatchStencil {
    pub fn is_regular(&self) -> bool {
        self.valence == REGULAR_VALENCE
    }

    pub fn len(&self) -> usize {
        self.control_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_ids.is_empty()
    }

    /// Basis jets of the patch at `ξ` (patch chart).
    pub fn eval(&self, xi1: f64, xi2: f64) -> Result<Vec<Jet>> {
        if self.is_regular() {
            Ok(eval_regular(xi1, xi2)?.to_vec())
        } else {
            eval_irregular(self.valence, xi1, xi2)
        }
    }

    /// Converts a point of the unrotated cell chart into the patch chart.
    pub fn to_patch_chart(&self, xi1: f64, xi2: f64) -> (f64, f64) {
        let bary = [1.0 - xi1 - xi2, xi1, xi2];
        (bary[(self.rotation + 1) % 3], bary[(self.rotation + 2) % 3])
    }
}

/// Collects the patch of `cell`, rotating an extraordinary corner to the origin.
pub fn collect_patch(mesh: &ControlMesh, cell: usize) -> Result<PatchStencil> {
    let corners = mesh.cells()[cell];
    let mut ev = None;
    for (k, &v) in corners.iter().enumerate() {
        if mesh.is_extraordinary(v) {
            if ev.is_some() {
                return Err(Error::TwoEVsInPatch { cell });
            }
            ev = Some(k);
        }
    }
    collect_patch_rotated(mesh, cell, ev.unwrap_or(0))
}

/// Collects the patch of `cell` with local corner `rotation` at the origin.
/// Corners 1 and 2 of the rotated chart must be regular.
pub fn collect_patch_rotated(mesh: &ControlMesh, cell: usize, rotation: usize) -> Result<PatchStencil> {
    let corners = mesh.cells()[cell];
    let a = corners[rotation % 3];
    let b = corners[(rotation + 1) % 3];
    let c = corners[(rotation + 2) % 3];
    if mesh.is_extraordinary(b) || mesh.is_extraordinary(c) {
        return Err(Error::TwoEVsInPatch { cell });
    }
    let n = mesh.valence(a);
    let mut ids = Vec::with_capacity(n + 6);
    ids.push(a);
    let mut w = b;
    for _ in 0..n {
        ids.push(w);
        w = mesh.next_ccw(a, w);
    }
    debug_assert_eq!(ids[2], c);
    let p1 = mesh.next_ccw(b, ids[n]);
    let p2 = mesh.next_ccw(b, p1);
    let p3 = mesh.next_ccw(b, p2);
    let p4 = mesh.next_ccw(c, p3);
    let p5 = mesh.next_ccw(c, p4);
    ids.extend([p1, p2, p3, p4, p5]);
    let ev_corner = mesh.is_extraordinary(a).then_some(rotation % 3);
    Ok(PatchStencil { cell, control_ids: ids, valence: n, rotation: rotation % 3, ev_corner })
}

/// Point on the limit surface above control vertex `v`.
pub fn limit_position(mesh: &ControlMesh, v: usize) -> Point3 {
    mesh.limit_value(mesh.positions(), v)
}

/// Evaluates per-vertex data (for example positions) on the limit surface at
/// `ξ` in the unrotated chart of `cell`.
pub fn limit_point<T>(mesh: &ControlMesh, values: &[T], cell: usize, xi1: f64, xi2: f64) -> Result<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let patch = collect_patch(mesh, cell)?;
    let (y1, y2) = patch.to_patch_chart(xi1, xi2);
    if !patch.is_regular() && y1 + y2 <= 0.0 {
        return Ok(mesh.limit_value(values, patch.control_ids[0]));
    }
    let jets = patch.eval(y1, y2)?;
    let mut acc = values[patch.control_ids[0]] * jets[0][VALUE];
    for (&id, jet) in patch.control_ids.iter().zip(jets.iter()).skip(1) {
        acc = acc + values[id] * jet[VALUE];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bipyramid() -> ControlMesh {
        let p = vec![
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 0.0, -1.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-0.5, 0.75f64.sqrt(), 0.0),
            Point3::new(-0.5, -(0.75f64.sqrt()), 0.0),
        ];
        let cells = vec![[0, 2, 3], [0, 3, 4], [0, 4, 2], [1, 3, 2], [1, 4, 3], [1, 2, 4]];
        ControlMesh::new(cells, p).unwrap()
    }

    #[test]
    fn irregular_patch_has_n_plus_six_points() {
        let mesh = bipyramid().subdivide();
        for c in 0..mesh.num_cells() {
            let patch = collect_patch(&mesh, c).unwrap();
            assert_eq!(patch.len(), patch.valence + 6);
            let origin = patch.control_ids[0];
            assert_eq!(mesh.cells()[c][patch.rotation], origin);
            if let Some(k) = patch.ev_corner {
                assert_eq!(mesh.cells()[c][k], origin);
            }
        }
    }

    #[test]
    fn two_ev_corners_are_rejected() {
        let mesh = bipyramid();
        assert!(matches!(collect_patch(&mesh, 0), Err(Error::TwoEVsInPatch { cell: 0 })));
    }

    #[test]
    fn chart_rotation_keeps_barycentric_roles() {
        let patch = PatchStencil { cell: 0, control_ids: vec![], valence: 5, rotation: 1, ev_corner: Some(1) };
        // Corner 1 of the cell goes to the origin.
        assert_eq!(patch.to_patch_chart(1.0, 0.0), (0.0, 0.0));
        assert_eq!(patch.to_patch_chart(0.0, 1.0), (1.0, 0.0));
        assert_eq!(patch.to_patch_chart(0.0, 0.0), (0.0, 1.0));
    }
}
