//! Isolated periodic orbits via Poincaré return maps.

use serde::{Deserialize, Serialize};

use super::integrate::{integrate_with, Control, Direction, IntegrateOptions};
use super::section::{next_crossing, Return, ReturnOptions, Section};
use super::DynamicsError;
use crate::field::VectorField;
use crate::Point;

/// One-sided attraction of an invariant curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    SemiStable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// States at uniform times over one period; the last repeats the first
    /// up to the closure gap.
    pub samples: Vec<Point>,
    pub period: f64,
    pub stability: Stability,
    /// Return-map slope on the side of the enclosed region.
    pub inner_slope: f64,
    pub outer_slope: f64,
    /// Section through `samples[0]` used for the return map.
    pub section_normal: Point,
    /// `|P(s) - s|` at the accepted section point.
    pub return_residual: f64,
}

impl PeriodicOrbit {
    pub fn closure_gap(&self) -> f64 {
        let (a, b) = (self.samples[0], self.samples[self.samples.len() - 1]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Shoelace area of the sample polygon; positive for counterclockwise orbits.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.samples)
    }

    /// Largest extent of the orbit along either axis.
    pub fn size(&self) -> f64 {
        extent(&self.samples)
    }

    /// Smallest distance from `p` to a sample.
    pub fn distance_to(&self, p: Point) -> f64 {
        min_distance(&self.samples, p)
    }
}

pub(crate) fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        a[0] * b[1] - b[0] * a[1]
    })
    .sum::<f64>()
        * 0.5
}

pub(crate) fn extent(pts: &[Point]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

pub(crate) fn min_distance(pts: &[Point], p: Point) -> f64 {
    pts.iter().map(|q| (q[0] - p[0]).hypot(q[1] - p[1])).fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| x.iter().map(|p| min_distance(y, *p)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOptions {
    /// Accuracy of the return-map fixed point.
    pub tol: f64,
    /// Time spent approaching the attractor before the section is built.
    pub transient: f64,
    pub max_period: f64,
    /// Number of uniform-time intervals in the stored samples.
    pub samples: usize,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions { tol: 1e-9, transient: 100.0, max_period: 500.0, samples: 2048 }
    }
}

/// Locate the periodic orbit attracting `seed` with default options and no
/// domain restriction.
pub fn find_limit_cycle<F: VectorField + ?Sized>(b: &F, seed: Point, tol: f64) -> Result<PeriodicOrbit, DynamicsError> {
    find_limit_cycle_with(b, seed, &CycleOptions { tol, ..Default::default() }, |_| true)
}

/// Integrate from `seed` for the transient, cut the flow by the normal line
/// at the end point and solve `P(s) = s` for the return map by secant
/// iteration. Stability comes from the one-sided slopes of `P` at offsets
/// `±1e-4` times the orbit size.
pub fn find_limit_cycle_with<F, I>(b: &F, seed: Point, opts: &CycleOptions, inside: I) -> Result<PeriodicOrbit, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let int_tol = (opts.tol * 1e-2).clamp(1e-13, 1e-8);
    let iopts = IntegrateOptions::with_tol(int_tol);
    let mut left = false;
    let warm = integrate_with(b, seed, opts.transient, Direction::Forward, &iopts, |s| {
        if inside(s.x1) {
            Control::Continue
        } else {
            left = true;
            Control::Stop
        }
    })?;
    if left {
        return Err(DynamicsError::NoRecurrence(format!("trajectory from {seed:?} left the domain")));
    }
    let p = warm.last();
    let v = b.eval(p)?;
    let vmax = warm.velocities.iter().map(|w| w[0].hypot(w[1])).fold(0.0f64, f64::max);
    if v[0].hypot(v[1]) <= 1e-6 * vmax.max(1e-300) {
        return Err(DynamicsError::NoRecurrence(format!("trajectory from {seed:?} converges to a fixed point near {p:?}")));
    }
    let sec = Section::new(p, v);
    // orbit size: the transient tail, or one trip back to the section line
    let tail = warm.times.partition_point(|&t| t < 0.8 * warm.duration());
    let mut size = extent(&warm.states[tail.min(warm.states.len() - 1)..]);
    let trip = integrate_with(b, p, opts.max_period, Direction::Forward, &iopts, |s| {
        if !inside(s.x1) || (sec.side(s.x0) < 0.0 && sec.side(s.x1) >= 0.0) {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    size = size.max(extent(&trip.states));
    if !(size > 0.0) {
        return Err(DynamicsError::NoRecurrence(format!("trajectory from {seed:?} does not move")));
    }
    // half the first trip rules out a spurious crossing at the start point
    let ropts =
        ReturnOptions { integrate: iopts, min_time: 0.5 * trip.duration(), max_time: opts.max_period, window: 0.4 * size };

    let ret = |s: f64| -> Result<(f64, f64), DynamicsError> {
        match next_crossing(b, sec.point(s), Direction::Forward, &sec, &ropts, &inside)? {
            Return::Crossed(c) => Ok((sec.coord(c.point), c.time)),
            Return::Exited { .. } => Err(DynamicsError::NoRecurrence("orbit left the domain before returning".into())),
            Return::Timeout { .. } => Err(DynamicsError::NoRecurrence("no return to the section within max_period".into())),
        }
    };

    // secant on F(s) = P(s) - s
    let (mut s0, mut f0) = (0.0, ret(0.0)?.0);
    let mut s1 = f0;
    let mut f1 = ret(s1)?.0 - s1;
    let mut iters = 0;
    while f1.abs() > opts.tol {
        iters += 1;
        if iters > 60 {
            return Err(DynamicsError::NoRecurrence(format!("return map did not converge (|P(s) - s| = {:e})", f1.abs())));
        }
        let denom = f1 - f0;
        let next = if denom.abs() > 1e-300 { s1 - f1 * (s1 - s0) / denom } else { s1 + f1 };
        // keep the iterate on the admissible window
        let next = next.clamp(-0.35 * size, 0.35 * size);
        s0 = s1;
        f0 = f1;
        s1 = next;
        f1 = ret(s1)?.0 - s1;
    }
    let s_star = s1;
    let (p_star, period) = ret(s_star)?;
    let x_star = sec.point(s_star);

    let traj = integrate_with(b, x_star, period, Direction::Forward, &iopts, |_| Control::Continue)?;
    let samples = traj.uniform(opts.samples);

    // strongly repelling orbits throw the offset point off the window, so
    // the offset shrinks until the return exists
    let slope = |sign: f64| -> Result<f64, DynamicsError> {
        let mut d = sign * 1e-4 * size;
        loop {
            match ret(s_star + d) {
                Ok((q, _)) => return Ok((q - p_star) / d),
                Err(DynamicsError::NoRecurrence(_)) if d.abs() > 1e-9 * size => d *= 0.1,
                Err(e) => return Err(e),
            }
        }
    };
    let plus = slope(1.0)?;
    let minus = slope(-1.0)?;
    // +tangent points left of the flow, which is inside for counterclockwise orbits
    let ccw = signed_area(&samples) > 0.0;
    let (inner, outer) = if ccw { (plus, minus) } else { (minus, plus) };
    let neutral = |m: f64| (m - 1.0).abs() <= 1e-5;
    if neutral(inner) && neutral(outer) {
        return Err(DynamicsError::NotIsolated { inner, outer });
    }
    let stability = match (inner.abs() < 1.0, outer.abs() < 1.0) {
        (true, true) => Stability::Stable,
        (false, false) => Stability::Unstable,
        _ => Stability::SemiStable,
    };
    Ok(PeriodicOrbit {
        samples,
        period,
        stability,
        inner_slope: inner,
        outer_slope: outer,
        section_normal: sec.normal,
        return_residual: (p_star - s_star).abs(),
    })
}
