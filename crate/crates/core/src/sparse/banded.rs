//! Banded LU without pivoting, for shifted M-matrices.

use super::{CsrMatrix, SparseError};

/// LU factors of `A - mu I` stored by rows over the band `[i - bw, i + bw]`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    a: Vec<f64>,
}

/// Largest `|i - j|` over the stored entries.
pub fn bandwidth(m: &CsrMatrix) -> usize {
    (0..m.dim()).flat_map(|i| m.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
}

impl BandedLu {
    /// Band storage needed for `m`, in entries.
    pub fn storage(m: &CsrMatrix) -> usize {
        m.dim() * (2 * bandwidth(m) + 1)
    }

    /// Factor `m - mu I`. Without pivoting this is stable when the shifted
    /// matrix is a nonsingular M-matrix; a non-positive pivot is reported as
    /// an error instead.
    pub fn factor(m: &CsrMatrix, mu: f64) -> Result<BandedLu, SparseError> {
        let n = m.dim();
        let bw = bandwidth(m);
        let w = 2 * bw + 1;
        let mut a = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in m.row(i) {
                a[i * w + j + bw - i] += v;
            }
            a[i * w + bw] -= mu;
        }
        for k in 0..n {
            let pivot = a[k * w + bw];
            if !(pivot > 0.0) {
                return Err(SparseError::InvalidOption(format!("banded LU pivot {pivot:e} at row {k}")));
            }
            let hi = (k + bw + 1).min(n);
            let (head, tail) = a.split_at_mut((k + 1) * w);
            let row_k = &head[k * w + bw + 1..k * w + bw + (hi - k)];
            for i in k + 1..hi {
                let base = (i - k - 1) * w;
                let lik = tail[base + k + bw - i];
                if lik == 0.0 {
                    continue;
                }
                let l = lik / pivot;
                tail[base + k + bw - i] = l;
                // columns k+1..hi of row i start at offset k + 1 + bw - i
                let start = base + k + 1 + bw - i;
                for (x, u) in tail[start..start + row_k.len()].iter_mut().zip(row_k) {
                    *x -= l * u;
                }
            }
        }
        Ok(BandedLu { n, bw, a })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SparseError> {
        let (n, bw) = (self.n, self.bw);
        if rhs.len() != n {
            return Err(SparseError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let w = 2 * bw + 1;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.a[i * w..i * w + w];
            let s: f64 = (lo..i).map(|j| row[j + bw - i] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let row = &self.a[i * w..i * w + w];
            let s: f64 = (i + 1..hi).map(|j| row[j + bw - i] * x[j]).sum();
            x[i] = (x[i] - s) / row[bw];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_shifted_tridiagonal_system() {
        let n = 50;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.5)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.2));
                }
                r
            })
            .collect();
        let m = CsrMatrix::from_rows(rows).unwrap();
        assert_eq!(bandwidth(&m), 1);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mu = 0.1;
        let mut rhs = m.spmv(&x).unwrap();
        rhs.iter_mut().zip(&x).for_each(|(r, v)| *r -= mu * v);
        let got = BandedLu::factor(&m, mu).unwrap().solve(&rhs).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_band_matches_dense_solution() {
        // 2D five-point stencil with drift, row-major on an 7x6 grid
        let (nx, ny) = (7, 6);
        let n = nx * ny;
        let mut rows = vec![Vec::new(); n];
        for j in 0..ny {
            for i in 0..nx {
                let u = j * nx + i;
                let mut d = 0.3 + 0.01 * u as f64;
                let mut push = |v: usize, w: f64| {
                    rows[u].push((v, -w));
                    d += w;
                };
                if i > 0 {
                    push(u - 1, 1.5);
                }
                if i + 1 < nx {
                    push(u + 1, 0.5);
                }
                if j > 0 {
                    push(u - nx, 1.0);
                }
                if j + 1 < ny {
                    push(u + nx, 2.0);
                }
                rows[u].push((u, d));
            }
        }
        let m = CsrMatrix::from_rows(rows).unwrap();
        assert_eq!(bandwidth(&m), nx);
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let rhs = m.spmv(&x).unwrap();
        let got = BandedLu::factor(&m, 0.0).unwrap().solve(&rhs).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_a_shift_past_the_spectrum() {
        let m = CsrMatrix::from_dense(&[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        assert!(BandedLu::factor(&m, 2.0).is_err());
    }
}
