use super::SparseError;

/// Square matrix in compressed sparse row form.
///
/// Column indices are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self, SparseError> {
        if n == 0 {
            return Err(SparseError::Empty);
        }
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(SparseError::IndexOutOfRange { row: r, col: c, n });
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n {
            offsets[r + 1] += offsets[r];
        }
        Ok(CsrMatrix { n, offsets, cols, vals })
    }

    /// Build row by row; each row is a list of `(col, value)` with unique columns.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, SparseError> {
        let n = rows.len();
        if n == 0 {
            return Err(SparseError::Empty);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(SparseError::DuplicateEntry { row: r, col: w[0].0 });
                }
            }
            for (c, v) in row {
                if c >= n {
                    return Err(SparseError::IndexOutOfRange { row: r, col: c, n });
                }
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Ok(CsrMatrix { n, offsets, cols, vals })
    }

    pub fn identity(n: usize) -> Result<Self, SparseError> {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, SparseError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(c, &v)| (c, v)).collect())
                .collect(),
        )
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.offsets, &self.cols, &self.vals)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.offsets[r]..self.offsets[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.row(r).map(|e| e.1).sum()).collect()
    }

    /// `y = M v`.
    pub fn spmv(&self, v: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.n];
        self.spmv_into(v, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, v: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        if v.len() != self.n || y.len() != self.n {
            return Err(SparseError::DimensionMismatch { expected: self.n, got: v.len().min(y.len()) });
        }
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.offsets[r]..self.offsets[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                rows[c].push((r, v));
            }
        }
        CsrMatrix::from_rows(rows).expect("transpose of a valid matrix is valid")
    }

    /// `M + shift * I`.
    pub fn shifted(&self, shift: f64) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|r| {
                let mut row: Vec<(usize, f64)> = self.row(r).collect();
                match row.iter_mut().find(|e| e.0 == r) {
                    Some(e) => e.1 += shift,
                    None => row.push((r, shift)),
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(rows).expect("shifted matrix keeps the sparsity invariants")
    }

    /// Off-diagonal entries are all `<= 0`.
    pub fn is_z_matrix(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| c == r || v <= 0.0))
    }

    /// Largest positive off-diagonal entry, if any.
    pub fn z_violation(&self) -> Option<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .filter(|&(r, c, v)| r != c && v > 0.0)
            .max_by(|a, b| a.2.total_cmp(&b.2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t).unwrap()
    }

    #[test]
    fn spmv_examples() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(CsrMatrix::identity(4).unwrap().spmv(&v).unwrap(), v.to_vec());

        let m = laplacian_1d(4);
        let dense = [[2.0, -1.0, 0.0, 0.0], [-1.0, 2.0, -1.0, 0.0], [0.0, -1.0, 2.0, -1.0], [0.0, 0.0, -1.0, 2.0]];
        let expect: Vec<f64> = dense.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        assert_eq!(m.spmv(&v).unwrap(), expect);

        let z = CsrMatrix::from_rows(vec![vec![]; 4]).unwrap();
        assert_eq!(z.spmv(&v).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = laplacian_1d(4);
        assert!(matches!(m.spmv(&[1.0, 2.0]), Err(SparseError::DimensionMismatch { .. })));
    }

    #[test]
    fn triplets_merge_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 1, -1.0), (0, 0, 1.0), (0, 1, -2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(m.get(0, 1), -3.0);
        assert_eq!(m.nnz(), 3);
        assert!(m.is_z_matrix());
        assert_eq!(m.transpose().get(1, 0), -3.0);
        assert_eq!(m.shifted(1.0).diagonal(), vec![2.0, 5.0]);
    }
}
