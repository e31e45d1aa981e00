use crate::error::{Error, Result};

/// Row-major (CSR) sparse matrix of `f64` features.
///
/// Within a row, columns are strictly increasing and every stored value is
/// finite and nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Borrowed view of one row.
#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(self.values)
            .map(|(&j, &v)| dense[j] * v)
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `dense += scale * row`
    pub fn axpy_into(&self, scale: f64, dense: &mut [f64]) {
        for (&j, &v) in self.indices.iter().zip(self.values) {
            dense[j] += scale * v;
        }
    }
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> Self {
        SparseMatrix {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    pub fn from_rows<I>(n_cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<(usize, f64)>>,
    {
        let mut m = SparseMatrix::new(n_cols);
        for row in rows {
            m.push_row(row)?;
        }
        Ok(m)
    }

    /// Appends a row. Entries may come in any order; explicit zeros are
    /// dropped. Duplicate or out-of-range columns and non-finite values are
    /// rejected.
    pub fn push_row(&mut self, mut entries: Vec<(usize, f64)>) -> Result<()> {
        let row = self.n_rows();
        entries.sort_by_key(|&(j, _)| j);
        for (k, &(j, v)) in entries.iter().enumerate() {
            if j >= self.n_cols {
                return Err(Error::DimensionMismatch {
                    expected: self.n_cols,
                    found: j + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col: j, value: v });
            }
            if k > 0 && entries[k - 1].0 == j {
                return Err(Error::Data(format!("row {row}: duplicate column {j}")));
            }
        }
        for (j, v) in entries {
            if v != 0.0 {
                self.indices.push(j);
                self.values.push(v);
            }
        }
        self.indptr.push(self.indices.len());
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow {
            indices: &self.indices[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.n_cols);
        for &i in rows {
            let r = self.row(i);
            m.indices.extend_from_slice(r.indices);
            m.values.extend_from_slice(r.values);
            m.indptr.push(m.indices.len());
        }
        m
    }

    /// Same rows with every value multiplied by `s` (`s` must be finite and
    /// nonzero).
    pub fn scaled(&self, s: f64) -> SparseMatrix {
        assert!(s.is_finite() && s != 0.0, "scale must be finite and nonzero");
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Reinterprets the matrix with `n_cols` columns, dropping stored entries
    /// whose column falls outside the new width.
    pub fn with_n_cols(&self, n_cols: usize) -> SparseMatrix {
        if n_cols >= self.n_cols {
            let mut m = self.clone();
            m.n_cols = n_cols;
            return m;
        }
        let mut m = SparseMatrix::new(n_cols);
        for r in self.rows() {
            for (j, v) in r.iter() {
                if j < n_cols {
                    m.indices.push(j);
                    m.values.push(v);
                }
            }
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn to_dense_row(&self, i: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.n_cols];
        for (j, v) in self.row(i).iter() {
            d[j] = v;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_row_sorts_and_drops_zeros() {
        let mut m = SparseMatrix::new(5);
        m.push_row(vec![(3, 1.0), (0, 2.0), (1, 0.0)]).unwrap();
        let r = m.row(0);
        assert_eq!(r.indices, &[0, 3]);
        assert_eq!(r.values, &[2.0, 1.0]);
    }

    #[test]
    fn push_row_rejects_bad_entries() {
        let mut m = SparseMatrix::new(2);
        assert!(matches!(
            m.push_row(vec![(2, 1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.push_row(vec![(0, f64::NAN)]),
            Err(Error::NonFinite { .. })
        ));
        assert!(m.push_row(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert_eq!(m.n_rows(), 0);
    }

    #[test]
    fn select_and_resize() {
        let m = SparseMatrix::from_rows(4, vec![vec![(0, 1.0)], vec![(3, 2.0)], vec![]]).unwrap();
        let s = m.select_rows(&[1, 1, 2]);
        assert_eq!(s.n_rows(), 3);
        assert_eq!(s.row(1).values, &[2.0]);
        let narrow = m.with_n_cols(2);
        assert_eq!(narrow.nnz(), 1);
        assert_eq!(m.with_n_cols(10).n_cols(), 10);
    }

    #[test]
    fn row_dot() {
        let m = SparseMatrix::from_rows(4, vec![vec![(3, 0.5)]]).unwrap();
        assert_eq!(m.row(0).dot(&[0.0, 0.0, 0.0, 2.0]), 1.0);
    }
}
