//! Control meshes used by the experiments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::topology::{ControlMesh, Point3};

/// Default torus radii and grid resolution.
pub const TORUS_DEFAULT: TorusParams = TorusParams { n: 8, m: 8, major: 1.0, minor: 0.5 };

/// Height of the two twelve-vertex rings of the Spherical-5-12 mesh.
pub const SPHERICAL_5_12_RING_HEIGHT: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusParams {
    /// Samples around the central axis.
    pub n: usize,
    /// Samples around the tube.
    pub m: usize,
    pub major: f64,
    pub minor: f64,
}

/// Regular torus grid: vertex `(i, j)` sits at angle `2πi/n` around the axis
/// and `2πj/m` around the tube; every quad is split along the same diagonal.
pub fn generate_torus(p: TorusParams) -> Result<ControlMesh> {
    let TorusParams { n, m, major, minor } = p;
    if n < 3 || m < 3 {
        return Err(Error::InvalidResolution { n, m });
    }
    let id = |i: usize, j: usize| (i % n) * m + j % m;
    let mut positions = Vec::with_capacity(n * m);
    for i in 0..n {
        let theta = 2.0 * PI * i as f64 / n as f64;
        for j in 0..m {
            let phi = 2.0 * PI * j as f64 / m as f64;
            let rho = major + minor * phi.cos();
            positions.push(Point3::new(rho * theta.cos(), rho * theta.sin(), minor * phi.sin()));
        }
    }
    let mut cells = Vec::with_capacity(2 * n * m);
    for i in 0..n {
        for j in 0..m {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    ControlMesh::new(cells, positions)
}

/// Triangular bipyramid on the unit sphere: two valence-3 apexes and three
/// valence-4 equator vertices.
pub fn generate_spherical_3_4() -> ControlMesh {
    let mut positions = vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 0.0, -1.0)];
    for k in 0..3 {
        let a = 2.0 * PI * k as f64 / 3.0;
        positions.push(Point3::new(a.cos(), a.sin(), 0.0));
    }
    let e = |k: usize| 2 + k % 3;
    let mut cells = Vec::new();
    for k in 0..3 {
        cells.push([0, e(k), e(k + 1)]);
        cells.push([1, e(k + 1), e(k)]);
    }
    ControlMesh::new(cells, positions).expect("valid bipyramid")
}

/// Gyroelongated 12-gonal bipyramid on the unit sphere: two valence-12 apexes
/// and two rings of twelve valence-5 vertices at heights `±z0`, the lower ring
/// rotated by π/12.
pub fn generate_spherical_5_12() -> ControlMesh {
    generate_spherical_5_12_with_height(SPHERICAL_5_12_RING_HEIGHT)
}

pub fn generate_spherical_5_12_with_height(z0: f64) -> ControlMesh {
    let rho = (1.0 - z0 * z0).sqrt();
    let mut positions = vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 0.0, -1.0)];
    for k in 0..12 {
        let a = PI * k as f64 / 6.0;
        positions.push(Point3::new(rho * a.cos(), rho * a.sin(), z0));
    }
    for k in 0..12 {
        let a = PI * (k as f64 + 0.5) / 6.0;
        positions.push(Point3::new(rho * a.cos(), rho * a.sin(), -z0));
    }
    let u = |k: usize| 2 + k % 12;
    let l = |k: usize| 14 + k % 12;
    let mut cells = Vec::new();
    for k in 0..12 {
        cells.push([0, u(k), u(k + 1)]);
        cells.push([1, l(k + 1), l(k)]);
        cells.push([u(k), l(k + 11), l(k)]);
        cells.push([u(k), l(k), u(k + 1)]);
    }
    // Orient every face outward: the mesh is star-shaped about the origin.
    for c in cells.iter_mut() {
        let [a, b, d] = c.map(|v| positions[v]);
        if (b - a).cross(&(d - a)).dot(&(a + b + d)) < 0.0 {
            c.swap(1, 2);
        }
    }
    ControlMesh::new(cells, positions).expect("valid gyroelongated bipyramid")
}
