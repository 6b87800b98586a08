//! Compressed sparse storage and the matrix-vector kernels used by every
//! iteration.
//!
//! A [`SparseMatrix`] keeps both a row-compressed and a column-compressed copy
//! of its entries so that `A x` and `Aᵀ λ` are each a single gather loop with
//! a fixed summation order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::vecops;

/// Which dimension [`SparseMatrix::axis_norms`] reduces over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

/// Per-axis reduction computed by [`SparseMatrix::axis_norms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `max |a|`
    Inf,
    /// `sqrt(Σ a²)`
    L2,
    /// `Σ |a|^p`, without the final root.
    Power(f64),
}

/// Default power-iteration budget for [`SparseMatrix::estimate_spectral_norm`].
pub const SPECTRAL_MAX_ITERS: usize = 5000;
/// Default relative-change tolerance for [`SparseMatrix::estimate_spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    // row-compressed
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    // column-compressed
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate positions are summed and entries that end up exactly zero
    /// are dropped. Non-finite values are rejected.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "matrix entry",
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // stable sort keeps the input order of duplicates, so their sum is
        // reproducible
        sorted.sort_by_key(|a| (a.0, a.1));

        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);

        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let row_cols: Vec<usize> = merged.iter().map(|t| t.1).collect();
        let row_vals: Vec<f64> = merged.iter().map(|t| t.2).collect();

        let mut col_ptr = vec![0usize; ncols + 1];
        for &(_, c, _) in &merged {
            col_ptr[c + 1] += 1;
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let nnz = merged.len();
        let mut col_rows = vec![0usize; nnz];
        let mut col_vals = vec![0.0; nnz];
        let mut next = col_ptr.clone();
        // rows visited in increasing order, so row indices within each column
        // come out sorted
        for &(r, c, v) in &merged {
            let dst = next[c];
            col_rows[dst] = r;
            col_vals[dst] = v;
            next[c] += 1;
        }

        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            row_cols,
            row_vals,
            col_ptr,
            col_rows,
            col_vals,
        })
    }

    /// Builds a matrix from dense rows. All rows must have the same length.
    pub fn from_dense(rows: &[&[f64]]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            check_len("dense row", ncols, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip)
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &trip).expect("identity is well formed")
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, &[]).expect("empty matrix is well formed")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Entries of row `i` as `(col, value)`, columns increasing.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_cols[span.clone()]
            .iter()
            .copied()
            .zip(self.row_vals[span].iter().copied())
    }

    /// Entries of column `j` as `(row, value)`, rows increasing.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_rows[span.clone()]
            .iter()
            .copied()
            .zip(self.col_vals[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.row_cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.row_vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: self.col_ptr.clone(),
            row_cols: self.col_rows.clone(),
            row_vals: self.col_vals.clone(),
            col_ptr: self.row_ptr.clone(),
            col_rows: self.row_cols.clone(),
            col_vals: self.row_vals.clone(),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec input", self.ncols, x.len())?;
        let mut out = vec![0.0; self.nrows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// `out = A x` without length checks beyond debug assertions.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.row_cols[span.clone()]
                .iter()
                .zip(&self.row_vals[span])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    /// `y = Aᵀ λ`.
    pub fn matvec_transpose(&self, lam: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec_transpose input", self.nrows, lam.len())?;
        let mut out = vec![0.0; self.ncols];
        self.matvec_transpose_into(lam, &mut out);
        Ok(out)
    }

    pub fn matvec_transpose_into(&self, lam: &[f64], out: &mut [f64]) {
        debug_assert_eq!(lam.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        for (j, o) in out.iter_mut().enumerate() {
            let span = self.col_ptr[j]..self.col_ptr[j + 1];
            *o = self.col_rows[span.clone()]
                .iter()
                .zip(&self.col_vals[span])
                .map(|(&i, &a)| a * lam[i])
                .sum();
        }
    }

    /// Per-row or per-column norms. Empty rows/columns give 0.
    pub fn axis_norms(&self, axis: Axis, kind: NormKind) -> Vec<f64> {
        let (len, ptr, vals) = match axis {
            Axis::Rows => (self.nrows, &self.row_ptr, &self.row_vals),
            Axis::Cols => (self.ncols, &self.col_ptr, &self.col_vals),
        };
        (0..len)
            .map(|k| {
                let seg = &vals[ptr[k]..ptr[k + 1]];
                match kind {
                    NormKind::Inf => seg.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                    NormKind::L2 => vecops::norm(seg),
                    NormKind::Power(p) => seg.iter().map(|v| abs_pow(*v, p)).sum(),
                }
            })
            .collect()
    }

    /// `D_r A D_c` for diagonal factors given as vectors.
    pub fn scale(&self, row: &[f64], col: &[f64]) -> Result<SparseMatrix> {
        check_len("row scaling", self.nrows, row.len())?;
        check_len("column scaling", self.ncols, col.len())?;
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.row_vals[k] *= row[i] * col[self.row_cols[k]];
            }
        }
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.col_vals[k] *= row[self.col_rows[k]] * col[j];
            }
        }
        // a factor of zero (or underflow) would leave stored zeros behind
        if out.row_vals.contains(&0.0) {
            return Self::from_triplets(out.nrows, out.ncols, &out.triplets());
        }
        Ok(out)
    }

    /// Power iteration on `AᵀA` started from the normalised all-ones vector.
    ///
    /// Returns the Rayleigh-quotient estimate `‖A v‖` of the largest singular
    /// value, which never exceeds the true value. Stops once the relative
    /// change between successive estimates is at most `tol` or after
    /// `max_iters` products.
    pub fn estimate_spectral_norm(&self, max_iters: usize, tol: f64) -> f64 {
        if self.nnz() == 0 || self.ncols == 0 {
            return 0.0;
        }
        let n = self.ncols;
        let mut v = vec![1.0 / libm::sqrt(n as f64); n];
        let mut av = vec![0.0; self.nrows];
        let mut w = vec![0.0; n];
        let mut prev = 0.0;
        let mut estimate = 0.0;
        let mut reseeded = false;
        for it in 0..max_iters.max(1) {
            self.matvec_into(&v, &mut av);
            estimate = vecops::norm(&av);
            if estimate == 0.0 {
                // all-ones happened to lie in the null space
                if reseeded {
                    return 0.0;
                }
                reseeded = true;
                for (j, vj) in v.iter_mut().enumerate() {
                    *vj = 1.0 / (j as f64 + 1.0);
                }
                let nv = vecops::norm(&v);
                v.iter_mut().for_each(|vj| *vj /= nv);
                continue;
            }
            self.matvec_transpose_into(&av, &mut w);
            let nw = vecops::norm(&w);
            if nw == 0.0 {
                return estimate;
            }
            for (vj, wj) in v.iter_mut().zip(&w) {
                *vj = wj / nw;
            }
            if it > 0 && (estimate - prev).abs() <= tol * estimate {
                break;
            }
            prev = estimate;
        }
        estimate
    }
}

#[inline]
fn abs_pow(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        libm::pow(a, p)
    }
}
