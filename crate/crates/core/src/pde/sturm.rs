use serde::{Deserialize, Serialize};

use super::PdeError;
use crate::sparse::{principal_eigenpair, CsrMatrix, EigenOptions, Precond};

/// Condition imposed at one end of a 1D interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "coef")]
pub enum EndCondition {
    Neumann,
    Dirichlet,
    /// `u' + r u = 0`, with `'` the derivative in the increasing coordinate.
    Robin(f64),
}

/// Principal eigenpair of a 1D Sturm–Liouville problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigen1d {
    pub lambda: f64,
    /// Node values, max-normalized; zero at Dirichlet ends.
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn log_mean(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 && (a - b).abs() > 1e-12 * a.max(b) {
        (a - b) / (a / b).ln()
    } else {
        0.5 * (a + b)
    }
}

/// Smallest eigenvalue of `-(κ u')' + γ u = λ μ u` on `[0, length]`.
///
/// Coefficients are sampled at `N` equispaced nodes including both ends.
/// The scheme is vertex-centered: face conductances are log-means of the
/// adjacent `κ` samples (exact for exponential `κ`), masses and potentials
/// are lumped with weights `(1, 2, 1)/4` inside and `(3, 1)/8` at the ends,
/// so `κ` and `μ` may vanish at an endpoint. Dirichlet ends drop the node;
/// Robin and Neumann ends close the half-cell balance with the boundary flux.
pub fn solve_1d(
    kappa: &[f64],
    gamma: &[f64],
    mu: &[f64],
    length: f64,
    left: EndCondition,
    right: EndCondition,
) -> Result<Eigen1d, PdeError> {
    let n = kappa.len();
    if n < 16 || gamma.len() != n || mu.len() != n {
        return Err(PdeError::Invalid1d(format!(
            "coefficient arrays need equal length >= 16, got {}, {}, {}",
            n,
            gamma.len(),
            mu.len()
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(PdeError::Invalid1d(format!("interval length {length}")));
    }
    if let Some(i) = kappa.iter().chain(gamma).chain(mu).position(|v| !v.is_finite()) {
        return Err(PdeError::NonPositiveWeight(format!("non-finite coefficient at flat index {i}")));
    }
    let h = length / (n - 1) as f64;
    let cond: Vec<f64> = kappa.windows(2).map(|w| log_mean(w[0], w[1]) / h).collect();
    if let Some(i) = cond.iter().position(|&k| !(k > 0.0)) {
        return Err(PdeError::NonPositiveWeight(format!("conductance {} on cell {i}", cond[i])));
    }
    let lump = |f: &[f64], i: usize| -> f64 {
        if i == 0 {
            h * (3.0 * f[0] + f[1]) / 8.0
        } else if i == n - 1 {
            h * (3.0 * f[n - 1] + f[n - 2]) / 8.0
        } else {
            h * (f[i - 1] + 2.0 * f[i] + f[i + 1]) / 4.0
        }
    };

    let first = usize::from(left == EndCondition::Dirichlet);
    let last = if right == EndCondition::Dirichlet { n - 2 } else { n - 1 };
    let mut mass = Vec::with_capacity(last + 1 - first);
    for i in first..=last {
        let m = lump(mu, i);
        if !(m > 0.0) {
            return Err(PdeError::NonPositiveWeight(format!("lumped mass {m} at node {i}")));
        }
        mass.push(m);
    }

    // M^-1 (K + G) acting on u itself. A symmetric scaling by M^-1/2 would
    // leave u accurate only relative to sqrt(M), which fails once the weight
    // spans many orders of magnitude.
    let dim = mass.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(3); dim];
    for (r, i) in (first..=last).enumerate() {
        let mut d = lump(gamma, i);
        if i > 0 {
            d += cond[i - 1];
            if i - 1 >= first {
                rows[r].push((r - 1, -cond[i - 1] / mass[r]));
            }
        }
        if i + 1 < n {
            d += cond[i];
            if i < last {
                rows[r].push((r + 1, -cond[i] / mass[r]));
            }
        }
        if i == 0 {
            if let EndCondition::Robin(r0) = left {
                d -= kappa[0] * r0;
            }
        }
        if i == n - 1 {
            if let EndCondition::Robin(r1) = right {
                d += kappa[n - 1] * r1;
            }
        }
        rows[r].push((r, d / mass[r]));
    }
    principal_1d(rows, n, first)
}

/// Principal pair of the row-scaled nodal operator; nodes before `first`
/// and after the last row are Dirichlet zeros.
fn principal_1d(rows: Vec<Vec<(usize, f64)>>, n: usize, first: usize) -> Result<Eigen1d, PdeError> {
    let s = CsrMatrix::from_rows(rows)?;
    let opts = EigenOptions { tol: 1e-13, precond: Precond::Ilu0, ..EigenOptions::refined() };
    let eig = principal_eigenpair(&s, &opts)?;

    let mut u = vec![0.0; n];
    u[first..first + eig.vector.len()].copy_from_slice(&eig.vector);
    let umax = u.iter().fold(0.0f64, |a, v| a.max(*v));
    u.iter_mut().for_each(|v| *v /= umax);
    Ok(Eigen1d { lambda: eig.lambda, u, residual_norm: eig.residual_norm, iterations: eig.iterations })
}

/// Matched Robin coefficient and the resulting principal eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinMatch {
    pub alpha: f64,
    pub lambda: f64,
    /// Eigenfunction at the nodes, max-normalized.
    pub phi: Vec<f64>,
    /// `phi(0) - phi(L)` at the returned `alpha`.
    pub mismatch: f64,
    pub bisection_steps: usize,
}

/// Principal pair of `-φ'' - A|b|φ' + cφ = λφ` on `[0, L]` with
/// `φ'(0) + min(α, ε)φ(0) = 0` and `φ'(L) + αφ(L) = 0`.
///
/// `speed` and `c` are node samples of `|b|` and `c` along the curve.
pub fn robin_eigen(drift_rate: f64, speed: &[f64], c: &[f64], length: f64, alpha: f64, eps: f64) -> Result<Eigen1d, PdeError> {
    let n = speed.len();
    if n < 16 || c.len() != n {
        return Err(PdeError::Invalid1d(format!("speed/c samples need equal length >= 16, got {n} and {}", c.len())));
    }
    if !(drift_rate >= 0.0 && drift_rate.is_finite()) {
        return Err(PdeError::InvalidDriftRate(drift_rate));
    }
    let smax = speed.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let floor = 1e-8 * smax;
    let h = length / (n - 1) as f64;
    // The weight w = exp(A ∫|b|) can span far more than the f64 range, so
    // each row is divided by its own w_i and only the ratios
    // w_j / w_i = exp(A ∫_i^j |b|) of neighbors enter.
    let step: Vec<f64> = speed
        .windows(2)
        .map(|p| drift_rate * 0.5 * (p[0].abs().max(floor) + p[1].abs().max(floor)) * h)
        .collect();
    if let Some(i) = step.iter().position(|d| !(*d < 700.0)) {
        return Err(PdeError::Invalid1d(format!("drift step {} on cell {i} is too large for the grid", step[i])));
    }
    let left_coef = alpha.min(eps);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(3); n];
    for (i, row) in rows.iter_mut().enumerate() {
        let down = (i > 0).then(|| (-step[i - 1]).exp());
        let up = (i + 1 < n).then(|| step[i].exp());
        let (mass, pot) = match (down, up) {
            (Some(d), Some(u)) => (h * (d + 2.0 + u) / 4.0, h * (d * c[i - 1] + 2.0 * c[i] + u * c[i + 1]) / 4.0),
            (None, Some(u)) => (h * (3.0 + u) / 8.0, h * (3.0 * c[0] + u * c[1]) / 8.0),
            (Some(d), None) => (h * (3.0 + d) / 8.0, h * (3.0 * c[n - 1] + d * c[n - 2]) / 8.0),
            (None, None) => unreachable!("n >= 16"),
        };
        let mut diag = pot;
        if let Some(d) = down {
            let k = log_mean(d, 1.0) / h;
            diag += k;
            row.push((i - 1, -k / mass));
        } else {
            diag -= left_coef;
        }
        if let Some(u) = up {
            let k = log_mean(1.0, u) / h;
            diag += k;
            row.push((i + 1, -k / mass));
        } else {
            diag += alpha;
        }
        row.push((i, diag / mass));
    }
    principal_1d(rows, n, 0)
}

/// Find `α ≥ 0` with `φ(0) = φ(L)` for the Robin problem of [`robin_eigen`].
///
/// Bisection on `g(α) = φ(0) - φ(L)`, which is negative at `α = 0` when the
/// drift concentrates the eigenfunction toward `L`; the upper end starts at 1 and doubles
/// up to `2^10` until `g` turns positive.
pub fn robin_match(drift_rate: f64, speed: &[f64], c: &[f64], length: f64, eps: f64) -> Result<RobinMatch, PdeError> {
    let g = |alpha: f64| -> Result<(f64, Eigen1d), PdeError> {
        let e = robin_eigen(drift_rate, speed, c, length, alpha, eps)?;
        Ok((e.u[0] - e.u[e.u.len() - 1], e))
    };
    let tol = 1e-10;
    let (g0, e0) = g(0.0)?;
    if g0.abs() <= tol {
        return Ok(RobinMatch { alpha: 0.0, lambda: e0.lambda, phi: e0.u, mismatch: g0, bisection_steps: 0 });
    }
    if g0 > 0.0 {
        return Err(PdeError::NoSignChange { alpha_max: 0.0 });
    }
    let mut hi = 1.0;
    let mut found = None;
    while hi <= 1024.0 {
        let (gh, _) = g(hi)?;
        if gh > 0.0 {
            found = Some(hi);
            break;
        }
        hi *= 2.0;
    }
    let Some(mut hi) = found else {
        return Err(PdeError::NoSignChange { alpha_max: 1024.0 });
    };
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let mut steps = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let (gm, em) = g(mid)?;
        steps += 1;
        if gm.abs() <= tol || hi - lo <= 1e-13 * hi.max(1.0) || steps >= 200 {
            return Ok(RobinMatch { alpha: mid, lambda: em.lambda, phi: em.u, mismatch: gm, bisection_steps: steps });
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_sine() {
        let n = 513;
        let one = vec![1.0; n];
        let e = solve_1d(&one, &vec![0.0; n], &one, 1.0, EndCondition::Dirichlet, EndCondition::Dirichlet).unwrap();
        assert!((e.lambda - PI * PI).abs() <= 1e-3 * PI * PI, "{}", e.lambda);
        assert_eq!(e.u[0], 0.0);
        assert!((e.u[256] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn robin_exponential() {
        let n = 1000;
        let r = 0.5;
        let one = vec![1.0; n];
        let e = solve_1d(&one, &vec![0.0; n], &one, 1.0, EndCondition::Robin(r), EndCondition::Robin(r)).unwrap();
        assert!((e.lambda + r * r).abs() <= 1e-4, "{}", e.lambda);
        let h = 1.0 / (n - 1) as f64;
        for (i, u) in e.u.iter().enumerate() {
            assert!((u - (-r * i as f64 * h).exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn neumann_constant_and_shift() {
        let n = 64;
        let kappa: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.1).sin().powi(2)).collect();
        let mu: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.2).cos()).collect();
        let e = solve_1d(&kappa, &vec![0.0; n], &mu, 3.0, EndCondition::Neumann, EndCondition::Neumann).unwrap();
        assert!(e.lambda.abs() < 1e-10);
        assert!(e.u.iter().all(|u| (u - 1.0).abs() < 1e-8));
        let gamma: Vec<f64> = mu.iter().enumerate().map(|(i, m)| m * (i as f64 / 9.0).sin()).collect();
        let shifted: Vec<f64> = gamma.iter().zip(&mu).map(|(g, m)| g + 0.75 * m).collect();
        let a = solve_1d(&kappa, &gamma, &mu, 3.0, EndCondition::Neumann, EndCondition::Dirichlet).unwrap();
        let b = solve_1d(&kappa, &shifted, &mu, 3.0, EndCondition::Neumann, EndCondition::Dirichlet).unwrap();
        assert!((b.lambda - a.lambda - 0.75).abs() < 1e-10);
    }

    #[test]
    fn degenerate_center_end() {
        // κ = μ = y (polar weight of the Laplacian on radial functions)
        let n = 400;
        let y: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let e = solve_1d(&y, &vec![0.0; n], &y, 1.0, EndCondition::Neumann, EndCondition::Dirichlet).unwrap();
        // first zero of J0 squared
        let j0 = 2.404_825_557_695_773_f64;
        assert!((e.lambda - j0 * j0).abs() < 1e-2 * j0 * j0, "{}", e.lambda);
    }

    #[test]
    fn rejects_bad_weights() {
        let n = 20;
        let mut kappa = vec![1.0; n];
        kappa[5] = -1.0;
        let r = solve_1d(&kappa, &vec![0.0; n], &vec![1.0; n], 1.0, EndCondition::Neumann, EndCondition::Neumann);
        assert!(matches!(r, Err(PdeError::NonPositiveWeight(_))));
        let r = solve_1d(&[1.0; 8], &[0.0; 8], &[1.0; 8], 1.0, EndCondition::Neumann, EndCondition::Neumann);
        assert!(matches!(r, Err(PdeError::Invalid1d(_))));
    }

    #[test]
    fn robin_match_symmetric_at_zero_drift() {
        let n = 200;
        let m = robin_match(0.0, &vec![1.0; n], &vec![0.3; n], 2.0, 0.1).unwrap();
        assert!(m.mismatch.abs() <= 1e-8);
        assert!(m.alpha >= 0.0);
        let first = m.phi[0];
        let last = m.phi[n - 1];
        assert!((first - last).abs() <= 1e-8);
    }

    #[test]
    fn robin_match_drift_matches_ends() {
        let n = 400;
        let speed: Vec<f64> = (0..n).map(|i| (PI * i as f64 / (n - 1) as f64).sin()).collect();
        let c: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 / (n - 1) as f64).collect();
        let m = robin_match(20.0, &speed, &c, 1.0, 0.1).unwrap();
        assert!(m.alpha > 0.0);
        assert!(m.mismatch.abs() <= 1e-8, "{m:?}");
    }

    #[test]
    fn huge_weight_range_keeps_the_constant_eigenfunction() {
        // exp(A ∫|b|) spans about e^200 here
        let n = 400;
        let speed: Vec<f64> = (0..n).map(|i| (PI * i as f64 / (n - 1) as f64).sin()).collect();
        let e = robin_eigen(300.0, &speed, &vec![0.0; n], 1.0, 0.0, 0.1).unwrap();
        assert!(e.lambda.abs() < 1e-8);
        assert!(e.u.iter().all(|u| (u - 1.0).abs() < 1e-6), "{} {}", e.u[0], e.u[n / 2]);
    }
}
