//! Principal eigenpair of a Z-matrix (nonpositive off-diagonals).
//!
//! For a Z-matrix `L` and `s` above its largest diagonal entry, `B = sI - L`
//! is entrywise nonnegative, so the Perron vector of `B` is the positive
//! eigenvector of `L` belonging to the eigenvalue of minimal real part.
//! Every sweep also yields the Collatz–Wielandt bracket
//! `min_i (Lv)_i / v_i <= lambda <= max_i (Lv)_i / v_i`, valid for any
//! positive `v` when `L` is irreducible.

use serde::{Deserialize, Serialize};

use super::banded::BandedLu;
use super::bicgstab::{bicgstab_with_guess, Precond};
use super::{CsrMatrix, SparseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Power,
    InverseRefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    /// Convergence threshold, relative to `max(1, max_i |L_ii|)`, for both the
    /// residual and the sweep-to-sweep eigenvalue change.
    pub tol: f64,
    pub max_power_sweeps: usize,
    /// Switch to shifted inverse iteration after the power warm-up.
    pub refine: bool,
    pub warmup_sweeps: usize,
    pub max_refine_steps: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub precond: Precond,
    /// Refinement uses a banded LU of `L - mu I` instead of BiCGSTAB when
    /// the band fits in this many entries; 0 disables it.
    pub max_band_entries: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_power_sweeps: 200_000,
            refine: false,
            warmup_sweeps: 20,
            max_refine_steps: 300,
            linear_tol: 1e-11,
            linear_max_iter: 20_000,
            precond: Precond::Jacobi,
            max_band_entries: 40_000_000,
        }
    }
}

impl EigenOptions {
    pub fn refined() -> Self {
        EigenOptions { refine: true, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Positive eigenvector scaled to unit max-norm.
    pub vector: Vec<f64>,
    /// `||L v - lambda v||_inf / ||v||_inf`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: EigenMethod,
    /// Collatz–Wielandt bracket of the final vector.
    pub lower_bound: f64,
    pub upper_bound: f64,
}

struct Sweep {
    lambda: f64,
    lo: f64,
    hi: f64,
    residual: f64,
}

/// Rayleigh-quotient estimate, ratio bracket and residual for positive `v`.
///
/// The estimate is `v.Lv / v.v` rather than a median of the ratios: the
/// median is wrong for reducible matrices and noisy when `v` is concentrated
/// on a few entries, while all ratios coincide at convergence anyway.
fn measure(lv: &[f64], v: &[f64]) -> Sweep {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (w, x) in lv.iter().zip(v) {
        if *x > 0.0 {
            let r = w / x;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let lambda = lv.iter().zip(v).map(|(w, x)| w * x).sum::<f64>() / vv;
    let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let residual = lv.iter().zip(v).map(|(w, x)| (w - lambda * x).abs()).fold(0.0, f64::max) / vmax;
    Sweep { lambda, lo, hi, residual }
}

fn normalize_max(v: &mut [f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    m
}

/// Residual `||L v - lambda v||_inf / ||v||_inf` recomputed from scratch.
pub fn eigen_residual(l: &CsrMatrix, lambda: f64, v: &[f64]) -> Result<f64, SparseError> {
    let lv = l.spmv(v)?;
    let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(lv.iter().zip(v).map(|(w, x)| (w - lambda * x).abs()).fold(0.0, f64::max) / vmax)
}

/// Eigenvalue of minimal real part of a Z-matrix with its positive eigenvector.
pub fn principal_eigenpair(l: &CsrMatrix, opts: &EigenOptions) -> Result<EigenResult, SparseError> {
    if let Some((row, col, value)) = l.z_violation() {
        return Err(SparseError::NotZMatrix { row, col, value });
    }
    let n = l.dim();
    let diag = l.diagonal();
    let maxdiag = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = diag.iter().fold(1.0f64, |a, d| a.max(d.abs()));
    let tol = opts.tol * scale;
    // eigenvalue changes below this are rounding noise in L v
    let round_off = 10.0 * f64::EPSILON * scale;
    let shift = maxdiag + 1.0;

    let mut v = vec![1.0; n];
    let mut lv = vec![0.0; n];
    let mut prev_lambda = f64::NAN;
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;

    // Power sweeps on sI - L.
    let power_budget = if opts.refine { opts.warmup_sweeps } else { opts.max_power_sweeps };
    loop {
        l.spmv_into(&v, &mut lv)?;
        let sw = measure(&lv, &v);
        let settled = (sw.lambda - prev_lambda).abs() <= (opts.tol * sw.lambda.abs().max(1.0)).max(round_off);
        if sw.residual <= tol && (settled || sw.residual == 0.0) {
            return finish(v, sw, iterations, EigenMethod::Power);
        }
        history.push(sw.residual);
        if !opts.refine && history.len() > 200 && sw.residual > history[history.len() - 201] / 10.0 {
            return Err(SparseError::Stagnation { iterations, residual: sw.residual });
        }
        if iterations >= power_budget {
            if opts.refine {
                break;
            }
            return Err(SparseError::Stagnation { iterations, residual: sw.residual });
        }
        prev_lambda = sw.lambda;
        for (x, w) in v.iter_mut().zip(&lv) {
            *x = shift * *x - w;
        }
        normalize_max(&mut v);
        iterations += 1;
    }

    // Shifted inverse iteration kept strictly below the Collatz–Wielandt lower
    // bound, so L - mu I stays a nonsingular M-matrix with a positive inverse.
    history.clear();
    let mut backoff = 1.0;
    let mut steps = 0;
    let mut direct = opts.max_band_entries > 0 && BandedLu::storage(l) <= opts.max_band_entries;
    // factored shift, kept while it stays within a few gaps of the target
    let mut factored: Option<(f64, BandedLu)> = None;
    loop {
        l.spmv_into(&v, &mut lv)?;
        let sw = measure(&lv, &v);
        let settled = (sw.lambda - prev_lambda).abs() <= (opts.tol * sw.lambda.abs().max(1.0)).max(round_off);
        if sw.residual <= tol && settled {
            return finish(v, sw, iterations, EigenMethod::InverseRefined);
        }
        history.push(sw.residual);
        if history.len() > 200 && sw.residual > history[history.len() - 201] / 10.0 {
            return Err(SparseError::Stagnation { iterations, residual: sw.residual });
        }
        if steps >= opts.max_refine_steps {
            return Err(SparseError::Stagnation { iterations, residual: sw.residual });
        }
        prev_lambda = sw.lambda;
        let spread = (sw.hi - sw.lo).max(0.0);
        let gap = backoff * (0.1 * spread).max(1e-3 * tol).max(1e-9 * scale);
        let mu = sw.lo - gap;
        if direct {
            let stale = factored.as_ref().map_or(true, |(m0, _)| sw.lo - m0 > 4.0 * gap);
            if stale {
                match BandedLu::factor(l, mu) {
                    Ok(lu) => factored = Some((mu, lu)),
                    Err(_) => {
                        direct = false;
                        factored = None;
                    }
                }
            }
            if let Some((_, lu)) = &factored {
                let mut x = lu.solve(&v)?;
                if normalize_max(&mut x) == 0.0 || x.iter().any(|e| !e.is_finite()) {
                    return Err(SparseError::Stagnation { iterations, residual: sw.residual });
                }
                x.iter_mut().for_each(|e| *e = e.abs());
                v = x;
                iterations += 1;
                steps += 1;
                continue;
            }
        }
        let shifted = l.shifted(-mu);
        let guess: Vec<f64> = v.iter().map(|x| x / (sw.lambda - mu).max(gap)).collect();
        match bicgstab_with_guess(&shifted, &v, Some(&guess), opts.linear_tol, opts.linear_max_iter, opts.precond) {
            Ok((mut x, _)) => {
                if normalize_max(&mut x) == 0.0 || x.iter().any(|e| !e.is_finite()) {
                    return Err(SparseError::Stagnation { iterations, residual: sw.residual });
                }
                // Inexact solves can leave round-off sized negatives where the
                // eigenvector is tiny; those entries restart from their magnitude.
                x.iter_mut().for_each(|e| *e = e.abs());
                v = x;
                backoff = (backoff * 0.5).max(1.0);
            }
            Err(SparseError::Solve(_)) if backoff < 1e6 => {
                backoff *= 10.0;
            }
            Err(e) => return Err(e),
        }
        iterations += 1;
        steps += 1;
    }
}

fn finish(vector: Vec<f64>, sw: Sweep, iterations: usize, method: EigenMethod) -> Result<EigenResult, SparseError> {
    if let Some(i) = vector.iter().position(|x| !(*x > 0.0)) {
        return Err(SparseError::NotPositive { index: i, value: vector[i] });
    }
    Ok(EigenResult {
        lambda: sw.lambda,
        vector,
        residual_norm: sw.residual,
        iterations,
        method,
        lower_bound: sw.lo,
        upper_bound: sw.hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let l = CsrMatrix::from_dense(&[vec![3.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 7.0]]).unwrap();
        // diag is reducible; the Perron vector of sI - L concentrates on e1
        let r = principal_eigenpair(&l, &EigenOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!((r.lambda - 3.0).abs() < 1e-10);
        assert!((r.vector[0] - 1.0).abs() < 1e-12 && r.vector[1] < 1e-8 && r.vector[2] < 1e-8);
    }

    #[test]
    fn rejects_positive_off_diagonal() {
        let l = CsrMatrix::from_dense(&[vec![1.0, 0.5], vec![-1.0, 1.0]]).unwrap();
        assert!(matches!(principal_eigenpair(&l, &EigenOptions::default()), Err(SparseError::NotZMatrix { .. })));
    }

    #[test]
    fn small_nonsymmetric_both_methods() {
        // 2x2 Z-matrix [[2,-1],[-3,4]]: eigenvalues 1 and 5
        let l = CsrMatrix::from_dense(&[vec![2.0, -1.0], vec![-3.0, 4.0]]).unwrap();
        for opts in [EigenOptions::default(), EigenOptions::refined()] {
            let r = principal_eigenpair(&l, &opts).unwrap();
            assert!((r.lambda - 1.0).abs() < 1e-9, "{r:?}");
            assert!((r.vector[0] - 1.0).abs() < 1e-9 && (r.vector[1] - 1.0).abs() < 1e-9);
            assert!(r.lower_bound <= 1.0 + 1e-9 && r.upper_bound >= 1.0 - 1e-9);
        }
    }
}
