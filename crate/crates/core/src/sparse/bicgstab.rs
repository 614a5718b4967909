//! Preconditioned BiCGSTAB for nonsymmetric systems.

use super::precond::Ilu0;
use super::{CsrMatrix, SolveFailure, SolveFailureKind, SparseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precond {
    #[default]
    Jacobi,
    /// Zero-fill incomplete LU; falls back to Jacobi if a pivot vanishes.
    Ilu0,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||M x - rhs|| / ||rhs||` of the returned iterate.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `M x = rhs` from a zero initial guess.
pub fn bicgstab(
    m: &CsrMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    precond: Precond,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    bicgstab_with_guess(m, rhs, None, tol, max_iter, precond)
}

/// Solve `M x = rhs` until `||M x - rhs||_2 <= tol ||rhs||_2`.
///
/// Breakdowns (`rho ~ 0`, `(r0, v) ~ 0`, `omega ~ 0`) restart the shadow
/// residual; a breakdown immediately after a restart is reported as an error.
pub fn bicgstab_with_guess(
    m: &CsrMatrix,
    rhs: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    precond: Precond,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let n = m.dim();
    if rhs.len() != n {
        return Err(SparseError::DimensionMismatch { expected: n, got: rhs.len() });
    }
    if !(tol >= 1e-14) {
        return Err(SparseError::InvalidOption(format!("bicgstab tolerance {tol} below 1e-14")));
    }
    let ilu = if precond == Precond::Ilu0 { Ilu0::new(m) } else { None };
    let inv_diag: Vec<f64> = match precond {
        Precond::Jacobi | Precond::Ilu0 => {
            m.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect()
        }
        Precond::None => vec![1.0; n],
    };
    let apply_precond = |src: &[f64], dst: &mut [f64]| match &ilu {
        Some(f) => f.apply(src, dst),
        None => {
            for ((d, s), k) in dst.iter_mut().zip(src).zip(&inv_diag) {
                *d = s * k;
            }
        }
    };

    let bnorm = norm(rhs);
    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(g) => return Err(SparseError::DimensionMismatch { expected: n, got: g.len() }),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let target = tol * bnorm;

    let mut r = m.spmv(&x)?;
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut rnorm = norm(&r);
    let mut best = (x.clone(), rnorm);
    if rnorm <= target {
        return Ok((x, SolveStats { iterations: 0, relative_residual: rnorm / bnorm }));
    }

    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut just_restarted = true;
    let eps = 1e-300;

    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= 1e-30 * norm(&r_hat) * rnorm + eps {
            if just_restarted {
                return Err(breakdown(SolveFailureKind::Breakdown, best, bnorm, iter));
            }
            restart(&mut r_hat, &r, &mut p, &mut v, &mut rho, &mut alpha, &mut omega);
            just_restarted = true;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply_precond(&p, &mut y);
        m.spmv_into(&y, &mut v)?;
        let rv = dot(&r_hat, &v);
        if rv.abs() <= eps {
            if just_restarted {
                return Err(breakdown(SolveFailureKind::Breakdown, best, bnorm, iter));
            }
            restart(&mut r_hat, &r, &mut p, &mut v, &mut rho, &mut alpha, &mut omega);
            just_restarted = true;
            continue;
        }
        alpha = rho_new / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let snorm = norm(&s);
        if snorm <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return finish(m, rhs, x, bnorm, iter);
        }
        apply_precond(&s, &mut z);
        m.spmv_into(&z, &mut t)?;
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        rnorm = norm(&r);
        if !rnorm.is_finite() {
            return Err(breakdown(SolveFailureKind::Breakdown, best, bnorm, iter));
        }
        if rnorm < best.1 {
            best = (x.clone(), rnorm);
        }
        if rnorm <= target {
            return finish(m, rhs, x, bnorm, iter);
        }
        just_restarted = false;
        if omega.abs() <= eps {
            restart(&mut r_hat, &r, &mut p, &mut v, &mut rho, &mut alpha, &mut omega);
            just_restarted = true;
        }
    }
    Err(breakdown(SolveFailureKind::MaxIter, best, bnorm, iter))
}

fn restart(
    r_hat: &mut [f64],
    r: &[f64],
    p: &mut [f64],
    v: &mut [f64],
    rho: &mut f64,
    alpha: &mut f64,
    omega: &mut f64,
) {
    r_hat.copy_from_slice(r);
    p.fill(0.0);
    v.fill(0.0);
    *rho = 1.0;
    *alpha = 1.0;
    *omega = 1.0;
}

fn breakdown(kind: SolveFailureKind, best: (Vec<f64>, f64), bnorm: f64, iterations: usize) -> SparseError {
    SparseError::Solve(Box::new(SolveFailure {
        kind,
        best: best.0,
        relative_residual: best.1 / bnorm,
        iterations,
    }))
}

fn finish(
    m: &CsrMatrix,
    rhs: &[f64],
    x: Vec<f64>,
    bnorm: f64,
    iterations: usize,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let mut r = m.spmv(&x)?;
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri -= bi;
    }
    Ok((x, SolveStats { iterations, relative_residual: norm(&r) / bnorm }))
}
