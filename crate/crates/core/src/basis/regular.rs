//! The twelve quartic box-spline basis functions of a regular patch.

use super::{check_domain, Jet};
use crate::error::Result;

/// Number of control points of a regular patch.
pub const REGULAR_POINTS: usize = 12;

/// Monomial exponents `(a, b)` of `ξ1^a ξ2^b`, graded by total degree.
const MONOMIALS: [(i32, i32); 15] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
];

/// Twelve times the monomial coefficients of each basis function, in the
/// canonical patch order (see [`super::PatchStencil`]).
const COEFFS: [[f64; 15]; REGULAR_POINTS] = [
    [6., 0., 0., -12., -12., -12., 8., 12., 12., 8., -1., -2., 0., -2., -1.],
    [1., 4., 2., 6., 6., 0., -4., -6., -12., -4., -1., -2., 0., 4., 2.],
    [1., 2., 4., 0., 6., 6., -4., -12., -6., -4., 2., 4., 0., -2., -1.],
    [1., -2., 2., 0., -6., 0., 2., 6., 0., -4., -1., -2., 0., 4., 2.],
    [1., -4., -2., 6., 6., 0., -4., -6., 0., 2., 1., 2., 0., -2., -1.],
    [1., -2., -4., 0., 6., 6., 2., 0., -6., -4., -1., -2., 0., 2., 1.],
    [1., 2., -2., 0., -6., 0., -4., 0., 6., 2., 2., 4., 0., -2., -1.],
    [0., 0., 0., 0., 0., 0., 2., 0., 0., 0., -1., -2., 0., 0., 0.],
    [0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 2., 0., 0., 0.],
    [0., 0., 0., 0., 0., 0., 2., 6., 6., 2., -1., -2., 0., -2., -1.],
    [0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 2., 1.],
    [0., 0., 0., 0., 0., 0., 0., 0., 0., 2., 0., 0., 0., -2., -1.],
];

/// Values and derivatives of the regular basis at `ξ`.
pub fn eval_regular(xi1: f64, xi2: f64) -> Result<[Jet; REGULAR_POINTS]> {
    check_domain(xi1, xi2)?;
    Ok(eval_unchecked(xi1, xi2))
}

pub(super) fn eval_unchecked(x: f64, y: f64) -> [Jet; REGULAR_POINTS] {
    let monos = monomial_jets(x, y);
    let mut out = [[0.0; 6]; REGULAR_POINTS];
    for (jet, coeffs) in out.iter_mut().zip(COEFFS.iter()) {
        for (c, m) in coeffs.iter().zip(monos.iter()) {
            if *c != 0.0 {
                for d in 0..6 {
                    jet[d] += c * m[d];
                }
            }
        }
        for v in jet.iter_mut() {
            *v /= 12.0;
        }
    }
    out
}

fn monomial_jets(x: f64, y: f64) -> [Jet; 15] {
    // p[k] = x^k, with p[-1], p[-2] never read thanks to the zero factors.
    let px = [1.0, x, x * x, x * x * x, x * x * x * x];
    let py = [1.0, y, y * y, y * y * y, y * y * y * y];
    let pow = |p: &[f64; 5], k: i32| if k < 0 { 0.0 } else { p[k as usize] };
    let mut out = [[0.0; 6]; 15];
    for (jet, &(a, b)) in out.iter_mut().zip(MONOMIALS.iter()) {
        let (fa, fb) = (a as f64, b as f64);
        *jet = [
            pow(&px, a) * pow(&py, b),
            fa * pow(&px, a - 1) * pow(&py, b),
            fb * pow(&px, a) * pow(&py, b - 1),
            fa * (fa - 1.0) * pow(&px, a - 2) * pow(&py, b),
            fa * fb * pow(&px, a - 1) * pow(&py, b - 1),
            fb * (fb - 1.0) * pow(&px, a) * pow(&py, b - 2),
        ];
    }
    out
}
