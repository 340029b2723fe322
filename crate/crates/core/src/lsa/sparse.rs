//! Compressed sparse row matrix with the few products the LSA pipeline needs.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Columns are sorted
    /// within each row; explicit zeros are dropped.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Shape(format!("row {i}: duplicate column {}", w[0].0)));
                }
            }
            for (c, v) in row {
                if c >= ncols {
                    return Err(Error::Shape(format!("row {i}: column {c} >= {ncols}")));
                }
                if v != 0.0 {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows: indptr.len() - 1,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    pub fn from_dense(m: ArrayView2<f64>) -> Self {
        let rows = m
            .outer_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(m.ncols(), rows).expect("dense rows are well formed")
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                m[[i, c]] = v;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self · rhs` for a dense `rhs` of shape `ncols × k`.
    pub fn mul_dense(&self, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if rhs.nrows() != self.ncols {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows,
                self.ncols,
                rhs.nrows(),
                rhs.ncols()
            )));
        }
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.nrows, k));
        out.axis_iter_mut(ndarray::Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut out_row)| {
                for (c, v) in self.row(i) {
                    out_row.scaled_add(v, &rhs.row(c));
                }
            });
        Ok(out)
    }

    /// `selfᵀ · rhs` for a dense `rhs` of shape `nrows × k`.
    pub fn t_mul_dense(&self, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if rhs.nrows() != self.nrows {
            return Err(Error::Shape(format!(
                "cannot multiply transpose of {}x{} by {}x{}",
                self.nrows,
                self.ncols,
                rhs.nrows(),
                rhs.ncols()
            )));
        }
        let mut out = Array2::zeros((self.ncols, rhs.ncols()));
        for i in 0..self.nrows {
            let r = rhs.row(i);
            for (c, v) in self.row(i) {
                out.row_mut(c).scaled_add(v, &r);
            }
        }
        Ok(out)
    }
}
