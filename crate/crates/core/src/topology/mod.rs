//! Closed triangle control meshes and Loop refinement.
//!
//! A [`ControlMesh`] is the domain manifold of a Loop subdivision surface:
//! oriented cells glued along shared edges, together with the control points
//! of the geometry mapping. Half-edge `3 * c + e` runs from corner `e` to corner
//! `(e + 1) % 3` of cell `c`; every half-edge has exactly one twin.

mod obj;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use obj::{read_obj, write_obj};

pub type Point3 = Vector3<f64>;

/// Valence of a regular vertex.
pub const REGULAR_VALENCE: usize = 6;

/// Upper bound on the number of refinement steps applied in one call.
pub const MAX_SUBDIVISION_LEVELS: usize = 10;

/// Loop's vertex weight `β(N) = (5/8 − (3/8 + cos(2π/N)/4)²) / N`.
pub fn beta(valence: usize) -> Result<f64> {
    if valence < 3 {
        return Err(Error::InvalidValence(valence));
    }
    let n = valence as f64;
    let c = 0.375 + 0.25 * (2.0 * PI / n).cos();
    Ok((0.625 - c * c) / n)
}

#[derive(Clone, Debug)]
pub struct ControlMesh {
    positions: Vec<Point3>,
    cells: Vec<[usize; 3]>,
    twin: Vec<usize>,
    edges: Vec<[usize; 2]>,
    half_edge_edge: Vec<usize>,
    edge_half_edge: Vec<usize>,
    ring_offsets: Vec<usize>,
    rings: Vec<usize>,
    ring_half_edges: Vec<usize>,
    level: usize,
}

impl ControlMesh {
    /// Builds and validates a closed, consistently oriented triangle mesh.
    pub fn new(cells: Vec<[usize; 3]>, positions: Vec<Point3>) -> Result<Self> {
        Self::with_level(cells, positions, 0)
    }

    fn with_level(cells: Vec<[usize; 3]>, positions: Vec<Point3>, level: usize) -> Result<Self> {
        let nv = positions.len();
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= nv {
                    return Err(Error::InvalidIndex { index: v, count: nv });
                }
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(Error::DegenerateCell { cell: c });
            }
        }

        let nh = 3 * cells.len();
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        for (h, (a, b)) in (0..nh).map(|h| (h, half_edge_ends(&cells, h))) {
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            if directed.insert((a, b), h).is_some() {
                // A repeated direction is only an orientation problem when the
                // edge itself is manifold; report the edge count otherwise.
                let count = undirected[&(a.min(b), a.max(b))];
                if count > 2 {
                    return Err(Error::NonManifoldEdge { a, b, cells: count });
                }
                return Err(Error::InconsistentOrientation { a, b });
            }
        }
        // Deterministic reporting: scan in half-edge order.
        for h in 0..nh {
            let (a, b) = half_edge_ends(&cells, h);
            let count = undirected[&(a.min(b), a.max(b))];
            if count != 2 {
                return Err(Error::NonManifoldEdge { a, b, cells: count });
            }
        }

        let mut twin = vec![usize::MAX; nh];
        for h in 0..nh {
            let (a, b) = half_edge_ends(&cells, h);
            match directed.get(&(b, a)) {
                Some(&t) => twin[h] = t,
                None => return Err(Error::InconsistentOrientation { a, b }),
            }
        }

        let mut half_edge_edge = vec![usize::MAX; nh];
        let mut edges = Vec::with_capacity(nh / 2);
        let mut edge_half_edge = Vec::with_capacity(nh / 2);
        for h in 0..nh {
            if half_edge_edge[h] == usize::MAX {
                let id = edges.len();
                let (a, b) = half_edge_ends(&cells, h);
                edges.push([a, b]);
                edge_half_edge.push(h);
                half_edge_edge[h] = id;
                half_edge_edge[twin[h]] = id;
            }
        }

        // Outgoing half-edge with the smallest index per vertex, plus counts.
        let mut first_out = vec![usize::MAX; nv];
        let mut out_count = vec![0usize; nv];
        for h in 0..nh {
            let (a, _) = half_edge_ends(&cells, h);
            if first_out[a] == usize::MAX {
                first_out[a] = h;
            }
            out_count[a] += 1;
        }
        let mut ring_offsets = Vec::with_capacity(nv + 1);
        let mut rings = Vec::with_capacity(nh);
        let mut ring_half_edges = Vec::with_capacity(nh);
        ring_offsets.push(0);
        for v in 0..nv {
            let start = first_out[v];
            if start == usize::MAX {
                return Err(Error::UnreferencedVertex(v));
            }
            let mut h = start;
            let mut steps = 0;
            loop {
                rings.push(half_edge_ends(&cells, h).1);
                ring_half_edges.push(h);
                steps += 1;
                h = twin[prev_half_edge(h)];
                if h == start || steps > out_count[v] {
                    break;
                }
            }
            if steps != out_count[v] {
                return Err(Error::NonManifoldVertex(v));
            }
            ring_offsets.push(rings.len());
        }

        Ok(Self {
            positions,
            cells,
            twin,
            edges,
            half_edge_edge,
            edge_half_edge,
            ring_offsets,
            rings,
            ring_half_edges,
            level,
        })
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    /// Unique undirected edges, in order of first appearance in the cell list.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of refinement steps applied since construction.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    pub fn valence(&self, v: usize) -> usize {
        self.ring_offsets[v + 1] - self.ring_offsets[v]
    }

    pub fn valences(&self) -> Vec<usize> {
        (0..self.num_vertices()).map(|v| self.valence(v)).collect()
    }

    pub fn is_extraordinary(&self, v: usize) -> bool {
        self.valence(v) != REGULAR_VALENCE
    }

    /// Neighbours of `v` in counterclockwise order.
    pub fn ring(&self, v: usize) -> &[usize] {
        &self.rings[self.ring_offsets[v]..self.ring_offsets[v + 1]]
    }

    /// The vertex following `w` counterclockwise around `v`, i.e. the third
    /// corner of the cell containing the directed edge `v -> w`.
    pub fn next_ccw(&self, v: usize, w: usize) -> usize {
        let ring = self.ring(v);
        let k = ring
            .iter()
            .position(|&x| x == w)
            .unwrap_or_else(|| panic!("{w} is not a neighbour of {v}"));
        ring[(k + 1) % ring.len()]
    }

    /// Cell containing the directed edge `a -> b`, with the local corner of `a`.
    pub fn cell_of_directed_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let range = self.ring_offsets[a]..self.ring_offsets[a + 1];
        let k = self.rings[range.clone()].iter().position(|&x| x == b)?;
        let h = self.ring_half_edges[range.start + k];
        Some((h / 3, h % 3))
    }

    /// Outgoing half-edges of `v`, counterclockwise, parallel to [`Self::ring`].
    pub fn outgoing_half_edges(&self, v: usize) -> &[usize] {
        &self.ring_half_edges[self.ring_offsets[v]..self.ring_offsets[v + 1]]
    }

    /// Cell and local corner for every half-edge of `edge`: `(h, twin)`.
    pub fn edge_half_edges(&self, edge: usize) -> (usize, usize) {
        let h = self.edge_half_edge[edge];
        (h, self.twin[h])
    }

    pub fn twin(&self, half_edge: usize) -> usize {
        self.twin[half_edge]
    }

    pub fn half_edge_edge(&self, half_edge: usize) -> usize {
        self.half_edge_edge[half_edge]
    }

    /// Start and end vertex of a half-edge.
    pub fn half_edge_vertices(&self, half_edge: usize) -> (usize, usize) {
        half_edge_ends(&self.cells, half_edge)
    }

    /// Cell vertex opposite to the half-edge inside its own cell.
    pub fn opposite_vertex(&self, half_edge: usize) -> usize {
        self.cells[half_edge / 3][(half_edge % 3 + 2) % 3]
    }

    /// Mesh size `h`: the longest control edge.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| (self.positions[a] - self.positions[b]).norm())
            .fold(0.0, f64::max)
    }

    /// True iff some edge joins two extraordinary vertices.
    pub fn has_adjacent_evs(&self) -> bool {
        self.edges
            .iter()
            .any(|&[a, b]| self.is_extraordinary(a) && self.is_extraordinary(b))
    }

    /// Area of the flat control triangle `c`.
    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cells[c];
        let p = &self.positions;
        0.5 * (p[b] - p[a]).cross(&(p[d] - p[a])).norm()
    }

    /// Applies one Loop refinement step to per-vertex data.
    ///
    /// Original vertices keep their ids; the point created on edge `e` gets
    /// id `num_vertices() + e`.
    pub fn subdivide_values<T>(&self, values: &[T]) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        assert_eq!(values.len(), self.num_vertices(), "one value per vertex expected");
        let mut out = Vec::with_capacity(self.num_vertices() + self.num_edges());
        for (v, &value) in values.iter().enumerate() {
            let ring = self.ring(v);
            let b = beta(ring.len()).expect("validated valence");
            let sum = ring[1..]
                .iter()
                .fold(values[ring[0]], |acc, &w| acc + values[w]);
            out.push(value * (1.0 - ring.len() as f64 * b) + sum * b);
        }
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let (h, t) = self.edge_half_edges(e);
            let c = self.opposite_vertex(h);
            let d = self.opposite_vertex(t);
            out.push((values[a] + values[b]) * 0.375 + (values[c] + values[d]) * 0.125);
        }
        out
    }

    /// One step of Loop subdivision. Cell `c` is split into children
    /// `4c .. 4c + 4`; child `k < 3` keeps corner `k` of the parent at its
    /// local corner 0 and child 3 is the central (flipped) triangle.
    pub fn subdivide(&self) -> ControlMesh {
        let positions = self.subdivide_values(&self.positions);
        let nv = self.num_vertices();
        let mut cells = Vec::with_capacity(4 * self.num_cells());
        for (c, &[v0, v1, v2]) in self.cells.iter().enumerate() {
            let m0 = nv + self.half_edge_edge[3 * c];
            let m1 = nv + self.half_edge_edge[3 * c + 1];
            let m2 = nv + self.half_edge_edge[3 * c + 2];
            cells.push([v0, m0, m2]);
            cells.push([v1, m1, m0]);
            cells.push([v2, m2, m1]);
            cells.push([m0, m1, m2]);
        }
        ControlMesh::with_level(cells, positions, self.level + 1)
            .expect("subdivision preserves manifoldness")
    }

    /// Applies `levels` refinement steps.
    pub fn subdivide_n(&self, levels: usize) -> ControlMesh {
        let mut mesh = self.clone();
        for _ in 0..levels {
            mesh = mesh.subdivide();
        }
        mesh
    }

    /// Returns a copy with positions transformed by `f`.
    pub fn map_positions(&self, f: impl Fn(&Point3) -> Point3) -> ControlMesh {
        let mut mesh = self.clone();
        mesh.positions = self.positions.iter().map(f).collect();
        mesh
    }

    /// Limit weights of the vertex rule's fixed point: center weight and weight
    /// of each one-ring neighbour.
    pub fn limit_weights(valence: usize) -> Result<(f64, f64)> {
        let b = beta(valence)?;
        let n = valence as f64;
        let center = 3.0 / (3.0 + 8.0 * n * b);
        Ok((center, 8.0 * b / 3.0 * center))
    }

    /// Limit of per-vertex data at vertex `v` under infinite refinement.
    pub fn limit_value<T>(&self, values: &[T], v: usize) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let ring = self.ring(v);
        let (center, neighbour) = Self::limit_weights(ring.len()).expect("validated valence");
        let sum = ring[1..]
            .iter()
            .fold(values[ring[0]], |acc, &w| acc + values[w]);
        values[v] * center + sum * neighbour
    }
}

fn half_edge_ends(cells: &[[usize; 3]], h: usize) -> (usize, usize) {
    let cell = &cells[h / 3];
    (cell[h % 3], cell[(h % 3 + 1) % 3])
}

fn prev_half_edge(h: usize) -> usize {
    3 * (h / 3) + (h % 3 + 2) % 3
}

/// Refinement options for preparing a simulation mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubdivisionConfig {
    pub levels: usize,
    pub require_isolated_evs: bool,
}

impl SubdivisionConfig {
    pub fn new(levels: usize, require_isolated_evs: bool) -> Result<Self> {
        if levels > MAX_SUBDIVISION_LEVELS {
            return Err(Error::Config(format!(
                "at most {MAX_SUBDIVISION_LEVELS} subdivision levels are supported, got {levels}"
            )));
        }
        Ok(Self { levels, require_isolated_evs })
    }

    /// Refines `mesh` and checks that extraordinary vertices end up isolated.
    pub fn apply(&self, mesh: &ControlMesh) -> Result<ControlMesh> {
        let refined = mesh.subdivide_n(self.levels);
        if self.require_isolated_evs && refined.has_adjacent_evs() {
            return Err(Error::AdjacentEVs);
        }
        Ok(refined)
    }
}

/// Returns `mesh` unchanged when its extraordinary vertices are isolated,
/// otherwise refines it once (one step always suffices).
pub fn ensure_isolated_evs(mesh: &ControlMesh, auto_subdivide: bool) -> Result<ControlMesh> {
    if !mesh.has_adjacent_evs() {
        return Ok(mesh.clone());
    }
    if !auto_subdivide {
        return Err(Error::AdjacentEVs);
    }
    Ok(mesh.subdivide())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bipyramid() -> ControlMesh {
        let mut positions = vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 0.0, -1.0)];
        for k in 0..3 {
            let t = 2.0 * PI * k as f64 / 3.0;
            positions.push(Point3::new(t.cos(), t.sin(), 0.0));
        }
        let mut cells = Vec::new();
        for k in 0..3 {
            let a = 2 + k;
            let b = 2 + (k + 1) % 3;
            cells.push([a, b, 0]);
            cells.push([b, a, 1]);
        }
        ControlMesh::new(cells, positions).unwrap()
    }

    fn icosahedron() -> ControlMesh {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        // Edge length of the raw coordinates is 2.
        let positions = raw.iter().map(|p| Point3::new(p[0], p[1], p[2]) * 0.5).collect();
        let cells = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        ControlMesh::new(cells, positions).unwrap()
    }

    #[test]
    fn bipyramid_counts() {
        let mesh = bipyramid();
        let mut val = mesh.valences();
        val.sort();
        assert_eq!(val, vec![3, 3, 4, 4, 4]);
        assert_eq!(mesh.num_edges(), 9);
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn icosahedron_counts() {
        let mesh = icosahedron();
        assert!(mesh.valences().iter().all(|&n| n == 5));
        assert_eq!(mesh.num_edges(), 30);
        assert!((mesh.mesh_size() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_fan_is_rejected() {
        let positions = (0..4).map(|k| Point3::new(k as f64, (k * k) as f64, 0.0)).collect();
        let err = ControlMesh::new(vec![[0, 1, 2], [0, 2, 3]], positions).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge { cells: 1, .. }), "{err}");
    }

    #[test]
    fn flipped_cell_is_rejected() {
        let mesh = bipyramid();
        let mut cells = mesh.cells().to_vec();
        cells[0].swap(0, 1);
        let err = ControlMesh::new(cells, mesh.positions().to_vec()).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }), "{err}");
    }

    #[test]
    fn unreferenced_vertex_is_rejected() {
        let mesh = bipyramid();
        let mut positions = mesh.positions().to_vec();
        positions.push(Point3::zeros());
        let err = ControlMesh::new(mesh.cells().to_vec(), positions).unwrap_err();
        assert!(matches!(err, Error::UnreferencedVertex(5)));
    }

    #[test]
    fn beta_values() {
        assert!((beta(6).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!((beta(3).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        assert!((beta(4).unwrap() - 31.0 / 256.0).abs() < 1e-15);
        assert!(matches!(beta(2), Err(Error::InvalidValence(2))));
    }

    #[test]
    fn vertex_rule_weights_sum_to_one() {
        for n in 3..=50 {
            let b = beta(n).unwrap();
            assert!(b > 0.0);
            assert!(((1.0 - n as f64 * b) + n as f64 * b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn subdivision_counts_and_valences() {
        let mesh = bipyramid();
        let fine = mesh.subdivide();
        assert_eq!(fine.num_vertices(), 14);
        assert_eq!(fine.num_cells(), 24);
        assert_eq!(fine.num_edges(), 36);
        assert_eq!(fine.level(), 1);
        for v in 0..5 {
            assert_eq!(fine.valence(v), mesh.valence(v));
        }
        assert!((5..14).all(|v| fine.valence(v) == 6));
        assert!(mesh.has_adjacent_evs());
        assert!(!fine.has_adjacent_evs());
    }

    #[test]
    fn rings_are_counterclockwise() {
        let mesh = bipyramid();
        for (c, &[a, b, d]) in mesh.cells().iter().enumerate() {
            assert_eq!(mesh.next_ccw(a, b), d, "cell {c}");
            assert_eq!(mesh.next_ccw(b, d), a);
            assert_eq!(mesh.next_ccw(d, a), b);
            assert_eq!(mesh.cell_of_directed_edge(a, b), Some((c, 0)));
        }
    }

    #[test]
    fn regular_vertex_with_coincident_neighbours_is_fixed() {
        // Every regular vertex of a subdivided bipyramid: collapse its ring.
        let fine = bipyramid().subdivide();
        let v = 7;
        let p = Point3::new(0.3, -0.2, 0.9);
        let mut positions = fine.positions().to_vec();
        for &w in fine.ring(v) {
            positions[w] = p;
        }
        positions[v] = p;
        let moved = fine.subdivide_values(&positions);
        assert!((moved[v] - p).norm() < 1e-15);
    }

    #[test]
    fn planar_data_stays_planar() {
        let mesh = icosahedron();
        let flat: Vec<Point3> = mesh
            .positions()
            .iter()
            .map(|p| Point3::new(p.x, p.y, 2.0 * p.x - p.y + 0.5))
            .collect();
        let mut values = flat;
        let mut m = mesh.clone();
        for _ in 0..3 {
            values = m.subdivide_values(&values);
            m = m.subdivide();
        }
        for p in &values {
            assert!((p.z - (2.0 * p.x - p.y + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn limit_weights_regular() {
        let (c, n) = ControlMesh::limit_weights(6).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
        assert!((n - 1.0 / 12.0).abs() < 1e-15);
        for valence in 3..20 {
            let (c, n) = ControlMesh::limit_weights(valence).unwrap();
            assert!((c + valence as f64 * n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_value_converges_under_refinement() {
        let mesh = icosahedron();
        let target = mesh.limit_value(mesh.positions(), 0);
        let mut m = mesh.clone();
        let mut errors = Vec::new();
        for _ in 0..6 {
            m = m.subdivide();
            // Vertex ids are stable, so vertex 0 is still the same point.
            errors.push((m.positions()[0] - target).norm());
        }
        assert!(errors.windows(2).all(|w| w[1] < 0.6 * w[0]), "{errors:?}");
        assert!(errors[5] < 1e-2 * errors[0] + 1e-2, "{errors:?}");
        assert!((m.limit_value(m.positions(), 0) - target).norm() < 1e-12);
    }

    #[test]
    fn subdivision_config_bounds() {
        assert!(SubdivisionConfig::new(11, true).is_err());
        let cfg = SubdivisionConfig::new(1, true).unwrap();
        assert!(cfg.apply(&bipyramid()).is_ok());
        let cfg = SubdivisionConfig::new(0, true).unwrap();
        assert!(matches!(cfg.apply(&bipyramid()), Err(Error::AdjacentEVs)));
    }
}
