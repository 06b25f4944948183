use nalgebra::{Matrix2, Vector2, Vector3};

use super::Operator;
use crate::basis::{Jet, D1, D11, D12, D2, D22, VALUE};
use crate::topology::Point3;

/// Geometry mapping `X = Σ C_i Φ_i` and its metric at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySample {
    pub x: Point3,
    /// Columns of the Jacobian, `X_,1` and `X_,2`.
    pub jacobian: [Vector3<f64>; 2],
    pub x11: Vector3<f64>,
    pub x12: Vector3<f64>,
    pub x22: Vector3<f64>,
    /// First fundamental form `G = JᵀJ`.
    pub g: Matrix2<f64>,
    pub det_g: f64,
    pub sqrt_det_g: f64,
    pub g_inv: Matrix2<f64>,
    /// `∂_a(√g G^{ab}) / √g`, the first-order part of the Laplace-Beltrami operator.
    pub first_order: Vector2<f64>,
}

impl GeometrySample {
    /// Builds the sample from control points `positions[ids]` and the basis
    /// jets at the point. A singular metric yields non-finite inverse data;
    /// callers check `det_g` first.
    pub fn new(positions: &[Point3], ids: &[usize], jets: &[Jet]) -> Self {
        let mut d = [Vector3::zeros(); 6];
        for (&i, jet) in ids.iter().zip(jets) {
            let c = &positions[i];
            for k in 0..6 {
                d[k] += c * jet[k];
            }
        }
        let [x, x1, x2, x11, x12, x22] = d;
        let g = Matrix2::new(x1.dot(&x1), x1.dot(&x2), x1.dot(&x2), x2.dot(&x2));
        let det_g = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let g_inv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det_g;

        // ∂_a G_cd = X_ac · X_d + X_c · X_ad
        let second = [[x11, x12], [x12, x22]];
        let first = [x1, x2];
        let dg = |a: usize| {
            Matrix2::from_fn(|c, dd| second[a][c].dot(&first[dd]) + first[c].dot(&second[a][dd]))
        };
        let mut first_order = Vector2::zeros();
        for a in 0..2 {
            let dga = dg(a);
            let half_trace = 0.5 * (g_inv * dga).trace();
            let dinv = g_inv * dga * g_inv;
            for b in 0..2 {
                first_order[b] += half_trace * g_inv[(a, b)] - dinv[(a, b)];
            }
        }
        Self {
            x,
            jacobian: [x1, x2],
            x11,
            x12,
            x22,
            g,
            det_g,
            sqrt_det_g: det_g.sqrt(),
            g_inv,
            first_order,
        }
    }

    /// Parametric gradient `(Φ_,1, Φ_,2)`.
    pub fn grad(jet: &Jet) -> Vector2<f64> {
        Vector2::new(jet[D1], jet[D2])
    }

    /// Surface gradient `J G⁻¹ ∇Φ` in R³.
    pub fn surface_gradient(&self, jet: &Jet) -> Vector3<f64> {
        let t = self.g_inv * Self::grad(jet);
        self.jacobian[0] * t[0] + self.jacobian[1] * t[1]
    }

    /// `Δ_M Φ = G⁻¹ : ∇²Φ + (∂_a(√g G^{ab}) / √g) ∂_b Φ`.
    pub fn laplace_beltrami(&self, jet: &Jet) -> f64 {
        let gi = &self.g_inv;
        gi[(0, 0)] * jet[D11]
            + 2.0 * gi[(0, 1)] * jet[D12]
            + gi[(1, 1)] * jet[D22]
            + self.first_order[0] * jet[D1]
            + self.first_order[1] * jet[D2]
    }

    /// Adds `w √g · form(φ_a, φ_b)` to the upper triangle of the row-major
    /// local block.
    pub fn accumulate(&self, op: Operator, jets: &[Jet], w: f64, local: &mut [f64]) {
        let k = jets.len();
        let scale = w * self.sqrt_det_g;
        match op {
            Operator::Mass => {
                let v: Vec<f64> = jets.iter().map(|j| j[VALUE]).collect();
                add_outer_upper(&v, &v, scale, k, local);
            }
            Operator::Laplace => {
                let grads: Vec<Vector2<f64>> = jets.iter().map(Self::grad).collect();
                for a in 0..k {
                    if grads[a] == Vector2::zeros() {
                        continue;
                    }
                    let t = self.g_inv * grads[a] * scale;
                    for b in a..k {
                        local[a * k + b] += t.dot(&grads[b]);
                    }
                }
            }
            Operator::BiLaplace => {
                let l: Vec<f64> = jets.iter().map(|j| self.laplace_beltrami(j)).collect();
                add_outer_upper(&l, &l, scale, k, local);
            }
        }
    }

    /// Adds `w √g f(X) φ_a` to `local`.
    pub fn accumulate_load(&self, f: &dyn Fn(&Point3) -> f64, jets: &[Jet], w: f64, local: &mut [f64]) {
        let s = w * self.sqrt_det_g * f(&self.x);
        for (l, j) in local.iter_mut().zip(jets) {
            *l += s * j[VALUE];
        }
    }
}

fn add_outer_upper(u: &[f64], v: &[f64], scale: f64, k: usize, local: &mut [f64]) {
    for a in 0..k {
        let ua = scale * u[a];
        if ua == 0.0 {
            continue;
        }
        for b in a..k {
            local[a * k + b] += ua * v[b];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_regular;
    use nalgebra::Rotation3;

    /// Regular patch laid out on the lattice `(i, j) -> i e1 + j e2`.
    fn flat_patch(e1: Vector3<f64>, e2: Vector3<f64>) -> Vec<Point3> {
        let layout = [(0, 0), (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1), (2, -1), (2, 0), (1, 1), (0, 2), (-1, 2)];
        layout.iter().map(|&(i, j)| e1 * i as f64 + e2 * j as f64).collect()
    }

    fn bumpy_patch() -> Vec<Point3> {
        let mut p = flat_patch(Vector3::x(), Vector3::y());
        for (k, q) in p.iter_mut().enumerate() {
            q.z = 0.1 * ((k * 7) % 5) as f64 - 0.2;
        }
        p
    }

    fn sample_at(p: &[Point3], xi: (f64, f64)) -> (GeometrySample, [Jet; 12]) {
        let ids: Vec<usize> = (0..12).collect();
        let jets = eval_regular(xi.0, xi.1).unwrap();
        (GeometrySample::new(p, &ids, &jets), jets)
    }

    #[test]
    fn planar_patch_has_constant_metric() {
        let p = flat_patch(Vector3::new(2.0, 0.0, 0.0), Vector3::new(0.0, 3.0, 0.0));
        let (g, _) = sample_at(&p, (0.2, 0.3));
        // Box splines reproduce linear functions, so J = (e1 e2).
        assert!((g.sqrt_det_g - 6.0).abs() < 1e-12);
        assert!(g.jacobian[0].z.abs() < 1e-15 && g.jacobian[1].z.abs() < 1e-15);
        assert!(g.first_order.norm() < 1e-12);
    }

    #[test]
    fn rotation_and_scaling_laws() {
        let p = bumpy_patch();
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 0.7);
        let rotated: Vec<Point3> = p.iter().map(|q| rot * q).collect();
        let scaled: Vec<Point3> = p.iter().map(|q| q * 2.5).collect();
        let (g0, _) = sample_at(&p, (0.4, 0.1));
        let (g1, _) = sample_at(&rotated, (0.4, 0.1));
        let (g2, _) = sample_at(&scaled, (0.4, 0.1));
        assert!((g0.g - g1.g).norm() < 1e-12);
        assert!((g2.sqrt_det_g - 6.25 * g0.sqrt_det_g).abs() < 1e-12);
    }

    #[test]
    fn divergence_matches_finite_differences() {
        // Δ_M φ √g = ∂_a q_a with q = √g G⁻¹ ∇φ.
        let p = bumpy_patch();
        let (xi, h) = ((0.27, 0.31), 1e-5);
        let q = |x: f64, y: f64, i: usize| {
            let (g, jets) = sample_at(&p, (x, y));
            g.g_inv * GeometrySample::grad(&jets[i]) * g.sqrt_det_g
        };
        let (g, jets) = sample_at(&p, xi);
        for i in 0..12 {
            let fd = (q(xi.0 + h, xi.1, i)[0] - q(xi.0 - h, xi.1, i)[0]) / (2.0 * h)
                + (q(xi.0, xi.1 + h, i)[1] - q(xi.0, xi.1 - h, i)[1]) / (2.0 * h);
            let exact = g.laplace_beltrami(&jets[i]) * g.sqrt_det_g;
            assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "basis {i}: {fd} vs {exact}");
        }
    }
}
