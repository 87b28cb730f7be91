//! Compressed sparse row storage used for every assembled operator.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in insertion order, so two entries fed by the same sequence of
    /// contributions end up bitwise equal.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        symmetric: bool,
    ) -> Self {
        debug_assert!(triplets.iter().all(|&(r, c, _)| r < nrows && c < ncols));
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect(), true)
    }

    pub fn from_dense(rows: &[Vec<f64>], symmetric: bool) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, t, symmetric)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "vector length does not match column count");
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `selfᵀ x`
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "vector length does not match row count");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &v)| v * y[j]).sum::<f64>()
            })
            .sum()
    }

    pub fn transpose(&self) -> Self {
        let t = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t, self.symmetric)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Extracts the rows listed in `rows`, keeping only columns with a
    /// `Some(local)` entry in `col_map` and renumbering them.
    pub fn select(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> Self {
        assert_eq!(col_map.len(), self.ncols);
        let mut t = Vec::new();
        for (local_row, &r) in rows.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(lj) = col_map[j] {
                    t.push((local_row, lj, v));
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, t, self.symmetric && rows.len() == ncols)
    }

    /// Principal submatrix on `dofs` (in the given order).
    pub fn principal_submatrix(&self, dofs: &[usize]) -> Self {
        assert_eq!(self.nrows, self.ncols);
        let mut map = vec![None; self.ncols];
        for (l, &g) in dofs.iter().enumerate() {
            map[g] = Some(l);
        }
        let mut sub = self.select(dofs, &map, dofs.len());
        sub.symmetric = self.symmetric;
        sub
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] = v;
        }
        d
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn to_faer_lower(&self) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self
            .iter()
            .filter(|&(i, j, _)| i >= j)
            .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Solver(format!("sparse conversion failed: {e:?}")))
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)], false);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn products_match_dense() {
        let d = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, -1.0]];
        let a = SparseMatrix::from_dense(&d, false);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, 3.0]);
        assert_eq!(a.mul_transpose_vec(&[1.0, 1.0]), vec![1.0, 3.0, 1.0]);
        assert_eq!(a.transpose().to_dense(), vec![vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, -1.0]]);
        assert_eq!(a.bilinear(&[1.0, 1.0], &[1.0, 1.0, 1.0]), 5.0);
    }

    #[test]
    fn submatrix_renumbers() {
        let d = vec![
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -1.0],
            vec![0.0, -1.0, 4.0],
        ];
        let a = SparseMatrix::from_dense(&d, true);
        let s = a.principal_submatrix(&[2, 0]);
        assert_eq!(s.to_dense(), vec![vec![4.0, 0.0], vec![0.0, 4.0]]);
    }
}
