//! Evaluation near an extraordinary vertex by repeated local subdivision.
//!
//! The patch of a cell whose corner 0 has valence `N` has `K = N + 6` control
//! points: the EV, its ring `r_0 .. r_{N-1}` (counterclockwise, `r_0` and
//! `r_1` being the other two cell corners) and five outer points. One Loop
//! step maps them to `N + 12` points that contain three regular sub-patches
//! and a smaller copy of the original configuration. Lattice coordinates use
//! the directions `(1,0)`, `(0,1)` and `(-1,1)` with the EV at the origin.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

use super::regular::{eval_unchecked, REGULAR_POINTS};
use super::{check_domain, Jet};
use crate::error::{Error, Result};
use crate::topology::beta;

/// Deepest refinement level used to reach a regular sub-patch.
pub const MAX_EVAL_DEPTH: u32 = 40;

/// Lattice offsets of the canonical regular layout.
const LAYOUT: [(i32, i32); REGULAR_POINTS] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (0, -1),
    (1, -1),
    (2, -1),
    (2, 0),
    (1, 1),
    (0, 2),
    (-1, 2),
];

/// Local subdivision data for one valence.
#[derive(Debug)]
pub struct SubdivisionMatrix {
    valence: usize,
    /// `(N + 12) × (N + 6)` extended subdivision matrix.
    extended: DMatrix<f64>,
    /// Rows of the extended points that form sub-patch 1, 2 and 3.
    picks: [[usize; REGULAR_POINTS]; 3],
}

impl SubdivisionMatrix {
    pub fn new(valence: usize) -> Result<Self> {
        let b = beta(valence)?;
        let n = valence;
        let k = n + 6;
        let r = |j: usize| 1 + j % n;
        let p = |i: usize| n + i;
        let x = |i: usize| n + 5 + i;
        let mut a = DMatrix::zeros(n + 12, k);

        a[(0, 0)] = 1.0 - n as f64 * b;
        for j in 0..n {
            a[(0, r(j))] += b;
            let row = r(j);
            a[(row, 0)] += 3.0 / 8.0;
            a[(row, r(j))] += 3.0 / 8.0;
            a[(row, r(j + n - 1))] += 1.0 / 8.0;
            a[(row, r(j + 1))] += 1.0 / 8.0;
        }
        let mut edge = |row: usize, e: [usize; 2], wings: [usize; 2]| {
            for c in e {
                a[(row, c)] += 3.0 / 8.0;
            }
            for c in wings {
                a[(row, c)] += 1.0 / 8.0;
            }
        };
        edge(p(1), [r(0), r(n - 1)], [0, p(1)]);
        edge(p(3), [r(0), r(1)], [0, p(3)]);
        edge(p(5), [r(1), r(2)], [0, p(5)]);
        edge(x(1), [r(0), p(1)], [p(2), r(n - 1)]);
        edge(x(2), [r(0), p(2)], [p(1), p(3)]);
        edge(x(3), [r(0), p(3)], [p(2), r(1)]);
        edge(x(4), [r(1), p(3)], [r(0), p(4)]);
        edge(x(5), [r(1), p(4)], [p(3), p(5)]);
        edge(x(6), [r(1), p(5)], [p(4), r(2)]);
        // The two regular ring vertices that reach into the sub-patches.
        let mut vertex = |row: usize, center: usize, ring: [usize; 6]| {
            a[(row, center)] += 10.0 / 16.0;
            for c in ring {
                a[(row, c)] += 1.0 / 16.0;
            }
        };
        vertex(p(2), r(0), [0, r(n - 1), p(1), p(2), p(3), r(1)]);
        vertex(p(4), r(1), [0, r(0), p(3), p(4), p(5), r(2)]);

        let index = |(i, j): (i32, i32)| -> usize {
            match (i, j) {
                (0, 0) => 0,
                (1, 0) => r(0),
                (0, 1) => r(1),
                (-1, 1) => r(2),
                (1, -1) => r(n - 1),
                (2, -1) => p(1),
                (2, 0) => p(2),
                (1, 1) => p(3),
                (0, 2) => p(4),
                (-1, 2) => p(5),
                (3, -1) => x(1),
                (3, 0) => x(2),
                (2, 1) => x(3),
                (1, 2) => x(4),
                (0, 3) => x(5),
                (-1, 3) => x(6),
                _ => unreachable!("lattice point ({i}, {j}) outside the refined patch"),
            }
        };
        let pick = |f: &dyn Fn((i32, i32)) -> (i32, i32)| {
            let mut out = [0; REGULAR_POINTS];
            for (o, &l) in out.iter_mut().zip(LAYOUT.iter()) {
                *o = index(f(l));
            }
            out
        };
        let picks = [
            pick(&|(i, j)| (1 + i, j)),
            pick(&|(i, j)| (1 - i, 1 - j)),
            pick(&|(i, j)| (i, 1 + j)),
        ];
        Ok(Self { valence, extended: a, picks })
    }

    pub fn valence(&self) -> usize {
        self.valence
    }

    pub fn extended(&self) -> &DMatrix<f64> {
        &self.extended
    }

    /// Values and derivatives of all `N + 6` basis functions at `ξ`.
    pub fn eval(&self, xi1: f64, xi2: f64) -> Result<Vec<Jet>> {
        check_domain(xi1, xi2)?;
        let s = xi1 + xi2;
        if s <= 0.0 {
            return Err(Error::AtExtraordinaryVertex);
        }
        let mut depth = 1u32;
        let mut scale = 2.0;
        while scale * s <= 1.0 {
            depth += 1;
            scale *= 2.0;
            if depth > MAX_EVAL_DEPTH {
                return Err(Error::MaxDepthExceeded(depth));
            }
        }
        let (y1, y2) = (scale * xi1, scale * xi2);
        let (sub, y, sign) = if y1 >= 1.0 {
            (0, (y1 - 1.0, y2), 1.0)
        } else if y2 >= 1.0 {
            (2, (y1, y2 - 1.0), 1.0)
        } else {
            (1, (1.0 - y1, 1.0 - y2), -1.0)
        };
        let reg = eval_unchecked(y.0, y.1);
        let (s1, s2) = (sign * scale, scale * scale);

        let k = self.valence + 6;
        let mut fine = vec![[0.0; 6]; self.valence + 12];
        for (jet, &row) in reg.iter().zip(self.picks[sub].iter()) {
            let target = &mut fine[row];
            target[0] += jet[0];
            for d in 1..3 {
                target[d] += s1 * jet[d];
            }
            for d in 3..6 {
                target[d] += s2 * jet[d];
            }
        }
        let mut coarse = vec![[0.0; 6]; k];
        apply_transpose(&self.extended, &fine, &mut coarse);
        let mut scratch = vec![[0.0; 6]; k];
        for _ in 1..depth {
            std::mem::swap(&mut scratch, &mut coarse);
            apply_transpose(&self.extended, &scratch, &mut coarse);
        }
        Ok(coarse)
    }
}

/// `out = A[..input.len(), ..]^T · input`, skipping zero entries.
fn apply_transpose(a: &DMatrix<f64>, input: &[Jet], out: &mut [Jet]) {
    for o in out.iter_mut() {
        *o = [0.0; 6];
    }
    for (row, jet) in input.iter().enumerate() {
        if jet.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (col, o) in out.iter_mut().enumerate() {
            let w = a[(row, col)];
            if w != 0.0 {
                for d in 0..6 {
                    o[d] += w * jet[d];
                }
            }
        }
    }
}

/// Shared per-valence subdivision matrices.
pub fn subdivision_matrix(valence: usize) -> Result<Arc<SubdivisionMatrix>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<SubdivisionMatrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.read().expect("cache poisoned").get(&valence) {
        return Ok(m.clone());
    }
    let m = Arc::new(SubdivisionMatrix::new(valence)?);
    Ok(cache
        .write()
        .expect("cache poisoned")
        .entry(valence)
        .or_insert(m)
        .clone())
}

/// Values and derivatives of the `N + 6` basis functions of a patch whose
/// corner 0 is an extraordinary vertex of the given valence.
pub fn eval_irregular(valence: usize, xi1: f64, xi2: f64) -> Result<Vec<Jet>> {
    subdivision_matrix(valence)?.eval(xi1, xi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_regular;

    #[test]
    fn extended_rows_are_affine() {
        for n in [3, 4, 5, 6, 7, 12] {
            let m = SubdivisionMatrix::new(n).unwrap();
            for row in m.extended().row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn regular_valence_matches_box_spline() {
        for &(a, b) in &[(0.3, 0.2), (0.05, 0.1), (0.5, 0.0), (0.01, 0.003), (0.0, 0.7)] {
            let irr = eval_irregular(6, a, b).unwrap();
            let reg = eval_regular(a, b).unwrap();
            // Second derivatives pick up a factor 4 per level of round-off.
            let tol = 1e-13 * 4f64.powi(((a + b) as f64).log2().abs().ceil() as i32 + 1);
            for (x, y) in irr.iter().zip(reg.iter()) {
                for d in 0..6 {
                    assert!((x[d] - y[d]).abs() < tol, "({a}, {b}) d{d}: {} vs {}", x[d], y[d]);
                }
            }
        }
    }

    #[test]
    fn evaluation_at_the_vertex_is_refused() {
        assert!(matches!(eval_irregular(5, 0.0, 0.0), Err(Error::AtExtraordinaryVertex)));
        assert!(matches!(eval_irregular(5, 1e-14, 0.0), Err(Error::MaxDepthExceeded(_))));
    }
}
