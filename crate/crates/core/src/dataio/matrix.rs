use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_dim("dense matrix storage", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            Error::check_dim("dense matrix row", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Compressed sparse rows with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.first() != Some(&0) || indptr.last() != Some(&indices.len()) {
            return Err(Error::InvalidConfig("malformed CSR row pointer".into()));
        }
        Error::check_dim("CSR values", indices.len(), values.len())?;
        for w in indptr.windows(2) {
            if w[0] > w[1] {
                return Err(Error::InvalidConfig("CSR row pointer must be non-decreasing".into()));
            }
            let row = &indices[w[0]..w[1]];
            if row.windows(2).any(|p| p[0] >= p[1]) || row.iter().any(|&j| j >= cols) {
                return Err(Error::InvalidConfig(
                    "CSR column indices must be strictly increasing and below the column count".into(),
                ));
            }
        }
        Ok(Self {
            rows: indptr.len() - 1,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Design matrix, either dense or sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Features {
    pub fn n_rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.rows,
            Features::Sparse(m) => m.rows,
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Features::Dense(m) => m.cols,
            Features::Sparse(m) => m.cols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Features::Sparse(_))
    }

    /// Calls `f(column, value)` for every stored entry of row `i`.
    #[inline]
    pub fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        match self {
            Features::Dense(m) => m.row(i).iter().enumerate().for_each(|(j, &v)| f(j, v)),
            Features::Sparse(m) => {
                let (idx, val) = m.row(i);
                idx.iter().zip(val).for_each(|(&j, &v)| f(j, v));
            }
        }
    }

    #[inline]
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        match self {
            Features::Dense(m) => crate::linalg::dot(m.row(i), v),
            Features::Sparse(m) => {
                let (idx, val) = m.row(i);
                idx.iter().zip(val).map(|(&j, &a)| a * v[j]).sum()
            }
        }
    }

    /// `out += alpha * a_i`
    #[inline]
    pub fn row_axpy(&self, i: usize, alpha: f64, out: &mut [f64]) {
        self.for_each_in_row(i, |j, v| out[j] += alpha * v);
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |_, v| s += v * v);
        s.sqrt()
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        self.for_each_in_row(i, |j, v| out[j] = v);
        out
    }

    /// `A · v`
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row_dot(i, v)).collect()
    }

    /// `Aᵀ · u`
    pub fn matvec_t(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                self.row_axpy(i, ui, &mut out);
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Features {
        match self {
            Features::Dense(m) => {
                let mut data = Vec::with_capacity(rows.len() * m.cols);
                for &i in rows {
                    data.extend_from_slice(m.row(i));
                }
                Features::Dense(DenseMatrix {
                    rows: rows.len(),
                    cols: m.cols,
                    data,
                })
            }
            Features::Sparse(m) => {
                let mut indptr = vec![0];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &i in rows {
                    let (idx, val) = m.row(i);
                    indices.extend_from_slice(idx);
                    values.extend_from_slice(val);
                    indptr.push(indices.len());
                }
                Features::Sparse(CsrMatrix {
                    rows: rows.len(),
                    cols: m.cols,
                    indptr,
                    indices,
                    values,
                })
            }
        }
    }

    /// Widens the column count; used to align files whose largest index differs.
    pub fn with_cols(self, cols: usize) -> Result<Features> {
        if cols < self.n_cols() {
            return Err(Error::InvalidConfig(format!(
                "cannot shrink feature count from {} to {cols}",
                self.n_cols()
            )));
        }
        Ok(match self {
            Features::Sparse(mut m) => {
                m.cols = cols;
                Features::Sparse(m)
            }
            Features::Dense(m) => {
                let mut data = Vec::with_capacity(m.rows * cols);
                for i in 0..m.rows {
                    data.extend_from_slice(m.row(i));
                    data.extend(std::iter::repeat_n(0.0, cols - m.cols));
                }
                Features::Dense(DenseMatrix {
                    rows: m.rows,
                    cols,
                    data,
                })
            }
        })
    }
}
