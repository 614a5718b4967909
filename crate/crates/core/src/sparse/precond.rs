use super::CsrMatrix;

/// Zero-fill incomplete LU factors sharing the sparsity pattern of the matrix.
///
/// The strictly lower part holds `L` (unit diagonal implied), the rest holds `U`.
#[derive(Debug, Clone)]
pub(crate) struct Ilu0 {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    /// Returns `None` if a pivot vanishes or a row has no diagonal entry.
    pub(crate) fn new(m: &CsrMatrix) -> Option<Ilu0> {
        let (offsets, cols, vals) = m.raw_parts();
        let (offsets, cols, mut vals) = (offsets.to_vec(), cols.to_vec(), vals.to_vec());
        let n = m.dim();
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            for k in offsets[r]..offsets[r + 1] {
                if cols[k] == r {
                    diag_pos[r] = k;
                }
            }
            if diag_pos[r] == usize::MAX {
                return None;
            }
        }
        // column -> position in the current row
        let mut pos = vec![usize::MAX; n];
        for r in 0..n {
            for k in offsets[r]..offsets[r + 1] {
                pos[cols[k]] = k;
            }
            for k in offsets[r]..offsets[r + 1] {
                let c = cols[k];
                if c >= r {
                    break;
                }
                let pivot = vals[diag_pos[c]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return None;
                }
                let factor = vals[k] / pivot;
                vals[k] = factor;
                for kk in diag_pos[c] + 1..offsets[c + 1] {
                    let p = pos[cols[kk]];
                    if p != usize::MAX {
                        vals[p] -= factor * vals[kk];
                    }
                }
            }
            for k in offsets[r]..offsets[r + 1] {
                pos[cols[k]] = usize::MAX;
            }
            if vals[diag_pos[r]] == 0.0 {
                return None;
            }
        }
        Some(Ilu0 { offsets, cols, vals, diag_pos })
    }

    /// `dst = (LU)^{-1} src`.
    pub(crate) fn apply(&self, src: &[f64], dst: &mut [f64]) {
        let n = src.len();
        for r in 0..n {
            let mut acc = src[r];
            for k in self.offsets[r]..self.diag_pos[r] {
                acc -= self.vals[k] * dst[self.cols[k]];
            }
            dst[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = dst[r];
            for k in self.diag_pos[r] + 1..self.offsets[r + 1] {
                acc -= self.vals[k] * dst[self.cols[k]];
            }
            dst[r] = acc / self.vals[self.diag_pos[r]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_tridiagonal() {
        // ILU(0) of a tridiagonal matrix is its exact LU factorization.
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0 + i as f64));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -2.0));
            }
        }
        let m = CsrMatrix::from_triplets(n, t).unwrap();
        let ilu = Ilu0::new(&m).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b = m.spmv(&x).unwrap();
        let mut y = vec![0.0; n];
        ilu.apply(&b, &mut y);
        for (a, e) in y.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }
}
