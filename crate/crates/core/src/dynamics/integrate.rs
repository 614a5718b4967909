//! Dormand–Prince 5(4) with cubic Hermite dense output.

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::field::VectorField;
use crate::Point;

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One accepted step, handed to the step observer.
#[derive(Debug, Clone, Copy)]
pub struct Step<const D: usize> {
    pub t0: f64,
    pub x0: [f64; D],
    pub f0: [f64; D],
    pub t1: f64,
    pub x1: [f64; D],
    pub f1: [f64; D],
}

impl<const D: usize> Step<D> {
    /// Cubic Hermite interpolant on `[t0, t1]`.
    pub fn at(&self, t: f64) -> [f64; D] {
        hermite(self.t0, &self.x0, &self.f0, self.t1, &self.x1, &self.f1, t)
    }
}

fn hermite<const D: usize>(
    t0: f64,
    x0: &[f64; D],
    f0: &[f64; D],
    t1: f64,
    x1: &[f64; D],
    f1: &[f64; D],
    t: f64,
) -> [f64; D] {
    let h = t1 - t0;
    if h == 0.0 {
        return *x0;
    }
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * x0[i] + h10 * h * f0[i] + h01 * x1[i] + h11 * h * f1[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Local error tolerance per step (mixed absolute/relative).
    pub tol: f64,
    /// Blow-up bound on `max |x_i|`.
    pub bound: f64,
    pub max_steps: usize,
    /// Largest allowed step; `0` means unbounded.
    pub max_step: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { tol: 1e-9, bound: 1e6, max_steps: 2_000_000, max_step: 0.0 }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegrateOptions { tol, ..Default::default() }
    }
}

/// A single fifth-order step of length `h` from `x`, used to place section
/// crossings more accurately than the cubic dense output allows.
pub fn rk_step<const D: usize, F>(mut f: F, x: &[f64; D], h: f64) -> Result<[f64; D], DynamicsError>
where
    F: FnMut(&[f64; D]) -> Result<[f64; D], DynamicsError>,
{
    let axpy = |h: f64, ks: &[&[f64; D]], a: &[f64]| -> [f64; D] {
        std::array::from_fn(|i| x[i] + h * ks.iter().zip(a).map(|(k, a)| a * k[i]).sum::<f64>())
    };
    let k1 = f(x)?;
    let k2 = f(&axpy(h, &[&k1], &A2))?;
    let k3 = f(&axpy(h, &[&k1, &k2], &A3))?;
    let k4 = f(&axpy(h, &[&k1, &k2, &k3], &A4))?;
    let k5 = f(&axpy(h, &[&k1, &k2, &k3, &k4], &A5))?;
    let k6 = f(&axpy(h, &[&k1, &k2, &k3, &k4, &k5], &A6))?;
    Ok(axpy(h, &[&k1, &k2, &k3, &k4, &k5, &k6], &B))
}

/// Integrate the autonomous system `x' = f(x)` from `t = 0` to `t_end > 0`,
/// calling `observe` after every accepted step. Returns the final time and
/// state (earlier than `t_end` if the observer stopped the run).
pub fn dopri<const D: usize, F, O>(
    mut f: F,
    x0: [f64; D],
    t_end: f64,
    opts: &IntegrateOptions,
    mut observe: O,
) -> Result<(f64, [f64; D]), DynamicsError>
where
    F: FnMut(&[f64; D]) -> Result<[f64; D], DynamicsError>,
    O: FnMut(&Step<D>) -> Control,
{
    if !(1e-14..=1e-2).contains(&opts.tol) {
        return Err(DynamicsError::InvalidOption(format!("integration tolerance {} outside [1e-14, 1e-2]", opts.tol)));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(DynamicsError::InvalidOption(format!("end time {t_end}")));
    }
    let tol = opts.tol;
    let mut t = 0.0;
    let mut x = x0;
    let mut k1 = f(&x)?;
    if t_end == 0.0 {
        return Ok((t, x));
    }
    let fnorm = k1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xnorm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut h = (0.01 * (1.0 + xnorm) / fnorm.max(1e-12)).min(t_end).min(0.1);
    if opts.max_step > 0.0 {
        h = h.min(opts.max_step);
    }
    let mut steps = 0;
    let axpy = |x: &[f64; D], h: f64, ks: &[&[f64; D]], a: &[f64]| -> [f64; D] {
        std::array::from_fn(|i| x[i] + h * ks.iter().zip(a).map(|(k, a)| a * k[i]).sum::<f64>())
    };
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(DynamicsError::StepLimit { t, steps });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = f(&axpy(&x, h, &[&k1], &A2))?;
        let k3 = f(&axpy(&x, h, &[&k1, &k2], &A3))?;
        let k4 = f(&axpy(&x, h, &[&k1, &k2, &k3], &A4))?;
        let k5 = f(&axpy(&x, h, &[&k1, &k2, &k3, &k4], &A5))?;
        let k6 = f(&axpy(&x, h, &[&k1, &k2, &k3, &k4, &k5], &A6))?;
        let xn = axpy(&x, h, &[&k1, &k2, &k3, &k4, &k5, &k6], &B);
        let k7 = f(&xn)?;
        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = 0.0f64;
        for i in 0..D {
            let e: f64 = h * ks.iter().zip(&E).map(|(k, e)| e * k[i]).sum::<f64>();
            let sc = tol * (1.0 + x[i].abs().max(xn[i].abs()));
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || xn.iter().any(|v| !v.is_finite()) {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            let step = Step { t0: t, x0: x, f0: k1, t1: if last { t_end } else { t + h }, x1: xn, f1: k7 };
            t = step.t1;
            x = xn;
            k1 = k7;
            steps += 1;
            if x.iter().any(|v| v.abs() > opts.bound) {
                return Err(DynamicsError::BlowUp { t, norm: x.iter().fold(0.0f64, |a, v| a.max(v.abs())) });
            }
            if observe(&step) == Control::Stop {
                return Ok((t, x));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if opts.max_step > 0.0 {
            h = h.min(opts.max_step);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(DynamicsError::StepUnderflow { t });
        }
    }
    Ok((t, x))
}

/// A computed solution curve of `x' = b(x)` with dense output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    /// `b` at each state, for Hermite interpolation.
    pub velocities: Vec<Point>,
    pub tol: f64,
}

impl Trajectory {
    fn start(x0: Point, v0: Point, tol: f64) -> Self {
        Trajectory { times: vec![0.0], states: vec![x0], velocities: vec![v0], tol }
    }

    fn push(&mut self, s: &Step<2>) {
        self.times.push(s.t1);
        self.states.push(s.x1);
        self.velocities.push(s.f1);
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn last(&self) -> Point {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Dense output at `t`, clamped to the computed interval.
    pub fn at(&self, t: f64) -> Point {
        let t = t.clamp(0.0, self.duration());
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len().max(2) - 1);
        if self.times.len() == 1 {
            return self.states[0];
        }
        hermite(
            self.times[k - 1],
            &self.states[k - 1],
            &self.velocities[k - 1],
            self.times[k],
            &self.states[k],
            &self.velocities[k],
            t,
        )
    }

    /// `n + 1` states at uniform times over the whole trajectory.
    pub fn uniform(&self, n: usize) -> Vec<Point> {
        let tt = self.duration();
        (0..=n).map(|i| self.at(tt * i as f64 / n as f64)).collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.states.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }
}

/// Time direction of an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

pub(crate) fn eval_dir<F: VectorField + ?Sized>(b: &F, x: &Point, dir: Direction) -> Result<Point, DynamicsError> {
    let v = b.eval(*x)?;
    let s = dir.sign();
    Ok([s * v[0], s * v[1]])
}

/// Integrate `x' = ±b(x)` for `duration` time units, recording every step.
/// The observer sees each step and may stop early. Times are stored as
/// elapsed time, so backward runs also have increasing `times`.
pub fn integrate_with<F, O>(
    b: &F,
    x0: Point,
    duration: f64,
    dir: Direction,
    opts: &IntegrateOptions,
    mut observe: O,
) -> Result<Trajectory, DynamicsError>
where
    F: VectorField + ?Sized,
    O: FnMut(&Step<2>) -> Control,
{
    let v0 = eval_dir(b, &x0, dir)?;
    let mut traj = Trajectory::start(x0, v0, opts.tol);
    dopri(|x| eval_dir(b, x, dir), x0, duration, opts, |s| {
        traj.push(s);
        observe(s)
    })?;
    Ok(traj)
}

/// Forward trajectory from `x0` to `t_end` with local error `tol`.
pub fn integrate<F: VectorField + ?Sized>(b: &F, x0: Point, t_end: f64, tol: f64) -> Result<Trajectory, DynamicsError> {
    integrate_with(b, x0, t_end, Direction::Forward, &IntegrateOptions::with_tol(tol), |_| Control::Continue)
}
