use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Duplicates are summed. Explicit zeros are kept so that the sparsity
    /// pattern depends only on the index list.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for &(i, j, _) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "triplet ({i},{j}) outside a {rows}x{cols} matrix"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut cols_tmp = vec![0usize; triplets.len()];
        let mut vals_tmp = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols_tmp[next[i]] = j;
            vals_tmp[next[i]] = v;
            next[i] += 1;
        }
        let mut row_offsets = Vec::with_capacity(rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..rows {
            let (s, e) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(s..e);
            order.sort_unstable_by_key(|&k| cols_tmp[k]);
            for &k in &order {
                let j = cols_tmp[k];
                if col_indices.len() > row_offsets[i] && *col_indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += vals_tmp[k];
                } else {
                    col_indices.push(j);
                    values.push(vals_tmp[k]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(a: &Mat<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &t).expect("indices in range")
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            out.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
        }
        out
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.cols || y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "spmv: {}x{} matrix with x of length {} and y of length {}",
                self.rows,
                self.cols,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
        Ok(())
    }

    /// y += alpha * A x
    pub fn spmv_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.cols || y.len() != self.rows {
            return Err(Error::Dimension("spmv_add: dimension mismatch".into()));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let s: f64 = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
            *yi += alpha * s;
        }
        Ok(())
    }

    /// y = Aᵀ x without forming the transpose.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::Dimension(format!(
                "spmv_transpose: {}x{} matrix with x of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                col_indices[next[j]] = i;
                values[next[j]] = a;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// alpha*self + beta*other; the pattern is the union of both patterns.
    pub fn add(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "add: {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut row_offsets = Vec::with_capacity(self.rows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_offsets.push(0);
        for i in 0..self.rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_indices.push(ja);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_indices.push(ja);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_indices.push(jb);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Rows and columns selected by index lists, renumbered in list order.
    /// Column lists must be increasing.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.cols];
        for (k, &j) in cols.iter().enumerate() {
            col_map[j] = k;
        }
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for &i in rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                let k = col_map[j];
                if k != usize::MAX {
                    col_indices.push(k);
                    values.push(a);
                }
            }
            row_offsets.push(col_indices.len());
        }
        let mut out = Self {
            rows: rows.len(),
            cols: cols.len(),
            row_offsets,
            col_indices,
            values,
        };
        if cols.windows(2).any(|w| w[0] >= w[1]) {
            out.sort_rows();
        }
        out
    }

    fn sort_rows(&mut self) {
        for i in 0..self.rows {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut pairs: Vec<(usize, f64)> = self.col_indices[s..e]
                .iter()
                .copied()
                .zip(self.values[s..e].iter().copied())
                .collect();
            pairs.sort_unstable_by_key(|p| p.0);
            for (k, (j, v)) in pairs.into_iter().enumerate() {
                self.col_indices[s + k] = j;
                self.values[s + k] = v;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |a_ij - a_ji| over the stored pattern of both triangles.
    pub fn symmetry_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        self.add(1.0, &t, -1.0).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    /// Replaces row and column i by the unit vector e_i.
    pub fn pin(&self, i: usize) -> Self {
        let mut t: Vec<(usize, usize, f64)> = self
            .triplets()
            .into_iter()
            .filter(|&(r, c, _)| r != i && c != i)
            .collect();
        t.push((i, i, 1.0));
        Self::from_triplets(self.rows, self.cols, &t).expect("indices in range")
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                a[(i, j)] = x;
            }
        }
        a
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &t).expect("valid triplets")
    }

    /// Assembles a block matrix; `None` blocks are zero. Block row heights and
    /// column widths are taken from the first present block in each.
    pub fn block(blocks: &[Vec<Option<&CsrMatrix>>]) -> Result<Self> {
        let nbr = blocks.len();
        let nbc = blocks.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (bi, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(Error::Dimension("ragged block layout".into()));
            }
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    for (slot, v) in [(&mut heights[bi], b.rows), (&mut widths[bj], b.cols)] {
                        match *slot {
                            None => *slot = Some(v),
                            Some(s) if s != v => {
                                return Err(Error::Dimension("inconsistent block sizes".into()))
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights
            .into_iter()
            .map(|h| h.ok_or_else(|| Error::Dimension("empty block row".into())))
            .collect::<Result<_>>()?;
        let widths: Vec<usize> = widths
            .into_iter()
            .map(|w| w.ok_or_else(|| Error::Dimension("empty block column".into())))
            .collect::<Result<_>>()?;
        let col_start: Vec<usize> = widths
            .iter()
            .scan(0, |acc, &w| {
                let s = *acc;
                *acc += w;
                Some(s)
            })
            .collect();
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut row_offsets = Vec::with_capacity(rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for (bi, row) in blocks.iter().enumerate() {
            for i in 0..heights[bi] {
                for (bj, blk) in row.iter().enumerate() {
                    if let Some(b) = blk {
                        let (c, v) = b.row(i);
                        col_indices.extend(c.iter().map(|&j| j + col_start[bj]));
                        values.extend_from_slice(v);
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
