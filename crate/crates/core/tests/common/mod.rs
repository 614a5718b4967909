//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls the solvers it is used to check.

#![allow(dead_code)]

use driftlimit::expr::{BinOp, Expr, Var};
use driftlimit::field::{PlanarField, ScalarField};
use driftlimit::sparse::CsrMatrix;
use driftlimit::Point;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Replace `x1`, `x2` in `e` by the given expressions.
pub fn substitute(e: &Expr, s1: &Expr, s2: &Expr) -> Expr {
    let go = |x: &Expr| Box::new(substitute(x, s1, s2));
    match e {
        Expr::Const(v) => Expr::Const(*v),
        Expr::Var(Var::X1) => s1.clone(),
        Expr::Var(Var::X2) => s2.clone(),
        Expr::Neg(a) => Expr::Neg(go(a)),
        Expr::Call(f, a) => Expr::Call(*f, go(a)),
        Expr::Binary(op, a, b) => Expr::Binary(*op, go(a), go(b)),
        Expr::Pow(a, p) => Expr::Pow(go(a), *p),
    }
}

fn lin(a: f64, b: f64) -> Expr {
    let term = |k: f64, v: Var| Expr::Binary(BinOp::Mul, Box::new(Expr::Const(k)), Box::new(Expr::Var(v)));
    Expr::Binary(BinOp::Add, Box::new(term(a, Var::X1)), Box::new(term(b, Var::X2)))
}

fn combine(a: f64, e1: &Expr, b: f64, e2: &Expr) -> Expr {
    let term = |k: f64, e: &Expr| Expr::Binary(BinOp::Mul, Box::new(Expr::Const(k)), Box::new(e.clone()));
    Expr::Binary(BinOp::Add, Box::new(term(a, e1)), Box::new(term(b, e2)))
}

/// `h(R^T x)` for the rotation `R` by `theta`.
pub fn rotate_scalar(h: &Expr, theta: f64) -> Expr {
    let (s, c) = theta.sin_cos();
    substitute(h, &lin(c, s), &lin(-s, c))
}

/// `R b(R^T x)`: the image of the flow of `b` under the rotation by `theta`.
pub fn rotate_field(b: &PlanarField, theta: f64) -> PlanarField {
    let (s, c) = theta.sin_cos();
    let (b1, b2) = b.components();
    let (r1, r2) = (rotate_scalar(b1, theta), rotate_scalar(b2, theta));
    PlanarField::new(combine(c, &r1, -s, &r2), combine(s, &r1, c, &r2))
}

pub fn rotate(p: Point, theta: f64) -> Point {
    let (s, c) = theta.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Period of the attracting cycle of `f` by fixed-step classical RK4, and
/// the time average of `g` over it. After a transient, periods are measured
/// between upward crossings of `x2 = 0`, located by bisection on the cubic
/// Hermite interpolant; the average uses the trapezoid rule with the end
/// steps split at the crossings.
pub fn rk4_cycle<F, G>(f: F, g: G, x0: Point, h: f64, transient: f64, periods: usize) -> (f64, f64)
where
    F: Fn(Point) -> Point,
    G: Fn(Point) -> f64,
{
    let step = |x: Point| {
        let k1 = f(x);
        let k2 = f([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k3 = f([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k4 = f([x[0] + h * k3[0], x[1] + h * k3[1]]);
        [
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let mut x = x0;
    let mut t = 0.0;
    while t < transient {
        x = step(x);
        t += h;
    }
    let mut times = Vec::new();
    let mut integral = 0.0;
    while times.len() < periods + 1 {
        let y = step(x);
        let (gx, gy) = (g(x), g(y));
        let crossing = if x[1] < 0.0 && y[1] >= 0.0 {
            let (f0, f1) = (f(x)[1], f(y)[1]);
            let herm = |s: f64| {
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                h00 * x[1] + h10 * h * f0 + h01 * y[1] + h11 * h * f1
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if herm(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        } else {
            None
        };
        match crossing {
            Some(s) => {
                let gs = gx + s * (gy - gx);
                if !times.is_empty() {
                    integral += 0.5 * s * h * (gx + gs);
                }
                times.push(t + s * h);
                if times.len() < periods + 1 {
                    integral += 0.5 * (1.0 - s) * h * (gs + gy);
                }
            }
            None if !times.is_empty() => integral += 0.5 * h * (gx + gy),
            None => {}
        }
        x = y;
        t += h;
    }
    let span = times[periods] - times[0];
    (span / periods as f64, integral / span)
}

/// Irreducible random Z-matrix: a sparse nonpositive off-diagonal pattern
/// plus a cycle, with diagonal `sum |offdiag| + c_i`.
pub fn random_z_matrix<R: Rng>(rng: &mut R, n: usize, density: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < density {
                m[(i, j)] = -rng.gen::<f64>();
            }
        }
        let next = (i + 1) % n;
        if m[(i, next)] == 0.0 {
            m[(i, next)] = -0.1 - rng.gen::<f64>();
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| -m[(i, j)]).sum();
        m[(i, i)] = off + 5.0 * rng.gen::<f64>();
    }
    m
}

pub fn to_csr(m: &DMatrix<f64>) -> CsrMatrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    CsrMatrix::from_dense(&rows).expect("square")
}

/// Principal eigenvalue of a Z-matrix `L` from the semigroup `e^{-tL}`:
/// power iteration on the dense matrix exponential, `λ = -ln ρ / t`.
pub fn semigroup_eigenvalue(l: &DMatrix<f64>, t: f64) -> f64 {
    let n = l.nrows();
    let e = (-l * t).exp();
    let mut v = DVector::from_element(n, 1.0);
    let mut rho = 0.0;
    for _ in 0..20_000 {
        let w = &e * &v;
        let next = w.norm() / v.norm();
        v = w.normalize();
        if (next - rho).abs() <= 1e-15 * next {
            rho = next;
            break;
        }
        rho = next;
    }
    -rho.ln() / t
}

/// Smallest real part among the eigenvalues of a dense matrix.
pub fn dense_min_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}

/// Ritz value of `-Δ + r²/2` on radial functions of the unit disk with
/// Neumann data, in the basis `r^{2k}`, `k < terms`. The `θ`-average of
/// `x1²` is `r²/2`, so this is the constrained minimum for the rigid
/// rotation with `c = x1²`.
pub fn radial_ritz_rotation_x1sq(terms: usize) -> f64 {
    // ∫_0^1 r^m r dr = 1/(m + 2)
    let mom = |m: usize| 1.0 / (m as f64 + 2.0);
    let mut k = DMatrix::zeros(terms, terms);
    let mut mass = DMatrix::zeros(terms, terms);
    for i in 0..terms {
        for j in 0..terms {
            let (a, b) = (2 * i, 2 * j);
            let grad = if a > 0 && b > 0 { (a * b) as f64 * mom(a + b - 2) } else { 0.0 };
            k[(i, j)] = grad + 0.5 * mom(a + b + 2);
            mass[(i, j)] = mom(a + b);
        }
    }
    generalized_min(&k, &mass)
}

/// Smallest eigenvalue of the symmetric definite pencil `(k, m)`.
pub fn generalized_min(k: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let chol = m.clone().cholesky().expect("mass matrix is positive definite");
    let linv = chol.l().try_inverse().expect("triangular factor is invertible");
    let s = &linv * k * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    s.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// P1 finite elements with consistent mass for `-(κu')' + γu = λμu` on
/// `[0, length]`, Neumann at both ends, coefficients given as functions.
pub fn p1_pencil_neumann<K, G, M>(kappa: K, gamma: G, mu: M, length: f64, elements: usize) -> f64
where
    K: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let n = elements + 1;
    let h = length / elements as f64;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    // two-point Gauss per element
    let g = 0.5 / 3f64.sqrt();
    for e in 0..elements {
        let x0 = e as f64 * h;
        for q in [0.5 - g, 0.5 + g] {
            let x = x0 + q * h;
            let w = 0.5 * h;
            let phi = [1.0 - q, q];
            let dphi = [-1.0 / h, 1.0 / h];
            for r in 0..2 {
                for s in 0..2 {
                    a[(e + r, e + s)] += w * (kappa(x) * dphi[r] * dphi[s] + gamma(x) * phi[r] * phi[s]);
                    b[(e + r, e + s)] += w * mu(x) * phi[r] * phi[s];
                }
            }
        }
    }
    generalized_min(&a, &b)
}

/// Arc-length resampling of a polyline to `n` equispaced nodes; returns the
/// nodes and the total length.
pub fn resample_by_arclength(pts: &[Point], n: usize) -> (Vec<Point>, f64) {
    let mut s = vec![0.0];
    for w in pts.windows(2) {
        s.push(s.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = *s.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while k + 2 < s.len() && s[k + 1] < target {
            k += 1;
        }
        let span = (s[k + 1] - s[k]).max(f64::MIN_POSITIVE);
        let t = ((target - s[k]) / span).clamp(0.0, 1.0);
        out.push([pts[k][0] + t * (pts[k + 1][0] - pts[k][0]), pts[k][1] + t * (pts[k + 1][1] - pts[k][1])]);
    }
    (out, total)
}

/// Central differences of `f` at `p` with step `h`.
pub fn fd_grad(f: &ScalarField, p: Point, h: f64) -> Option<[f64; 2]> {
    let e = |q: Point| f.eval(q).ok();
    Some([
        (e([p[0] + h, p[1]])? - e([p[0] - h, p[1]])?) / (2.0 * h),
        (e([p[0], p[1] + h])? - e([p[0], p[1] - h])?) / (2.0 * h),
    ])
}
