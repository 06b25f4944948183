use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;

/// Row-compressed sparsity pattern with sorted column indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl Pattern {
    /// Pattern of the union of dense blocks `ids × ids`.
    pub fn from_blocks<'a>(n: usize, blocks: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for ids in blocks {
            for &i in ids {
                rows[i].extend_from_slice(ids);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Storage slot of `(i, j)`; panics if the entry is not in the pattern.
    #[inline]
    pub fn slot(&self, i: usize, j: usize) -> usize {
        let lo = self.row_ptr[i];
        let row = &self.cols[lo..self.row_ptr[i + 1]];
        lo + row.binary_search(&j).unwrap_or_else(|_| panic!("({i}, {j}) not in pattern"))
    }
}

/// Symmetric sparse matrix; both triangles are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Adds a dense symmetric block; `local` is row-major `ids.len()²`.
    pub fn add_block(&mut self, ids: &[usize], local: &[f64]) {
        let k = ids.len();
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate() {
                let v = local[a * k + b];
                if v != 0.0 {
                    let s = self.pattern.slot(i, j);
                    self.values[s] += v;
                }
            }
        }
    }

    /// Entry `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let p = &self.pattern;
        let lo = p.row_ptr[i];
        match p.cols[lo..p.row_ptr[i + 1]].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Non-zero slots of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1];
        self.pattern.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, rows computed in parallel.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        y.par_iter_mut().with_min_len(512).enumerate().for_each(|(i, yi)| {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.cols[k]];
            }
            *yi = acc;
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference; both matrices must share a dimension.
    pub fn max_abs_diff(&self, other: &SparseSymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - other.get(i, j)).abs());
            }
            for (j, v) in other.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True iff `A[i][j] == A[j][i]` bitwise for every stored entry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// MatrixMarket coordinate format, lower triangle, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        let lower: usize = (0..self.dim()).map(|i| self.row(i).filter(|&(j, _)| j <= i).count()).sum();
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", self.dim(), self.dim(), lower)?;
        for i in 0..self.dim() {
            for (j, v) in self.row(i).filter(|&(j, _)| j <= i) {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_scatter_symmetrically() {
        let blocks: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![2, 3]];
        let pattern = Arc::new(Pattern::from_blocks(4, blocks.iter().map(|b| b.as_slice())));
        assert_eq!(pattern.nnz(), 9 + 4 - 1);
        let mut a = SparseSymMatrix::zeros(pattern);
        a.add_block(&blocks[0], &[2.0, 1.0, 0.5, 1.0, 3.0, 0.0, 0.5, 0.0, 1.0]);
        a.add_block(&blocks[1], &[1.0, -1.0, -1.0, 4.0]);
        assert!(a.is_symmetric());
        assert_eq!(a.get(2, 2), 2.0);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 0.0, 0.0, 1.0]), vec![2.0, 1.0, -0.5, 4.0]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("4 4 8"));
    }
}
