//! Homoclinic loops of a hyperbolic saddle by shooting along its manifolds.

use serde::{Deserialize, Serialize};

use super::cycle::{extent, min_distance, signed_area, Stability};
use super::fixed::{FixedKind, FixedPointInfo};
use super::integrate::{integrate_with, Control, Direction, IntegrateOptions};
use super::section::{next_crossing, Return, ReturnOptions, Section};
use super::DynamicsError;
use crate::field::VectorField;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicLoop {
    /// The unstable branch from the saddle to its closest return.
    pub samples: Vec<Point>,
    pub transit_time: f64,
    /// Distance to the saddle at the closest return.
    pub gap: f64,
    /// Attraction of nearby orbits inside this loop.
    pub inside: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicStructure {
    pub saddle: Point,
    pub loops: Vec<HomoclinicLoop>,
    /// Attraction of nearby orbits outside the union of the loops.
    pub outside: Stability,
}

impl HomoclinicStructure {
    /// Attracting from outside and from inside every loop.
    pub fn is_stable(&self) -> bool {
        self.outside == Stability::Stable && self.loops.iter().all(|l| l.inside == Stability::Stable)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        self.loops.iter().map(|l| min_distance(&l.samples, p)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicOptions {
    /// Reconnection tolerance (distance to the saddle).
    pub tol: f64,
    /// Initial displacement along each eigenvector.
    pub offset: f64,
    pub max_time: f64,
    /// Other saddles; a branch ending at one of them is heteroclinic.
    pub other_saddles: Vec<Point>,
}

impl HomoclinicOptions {
    pub fn with_tol(tol: f64) -> Self {
        HomoclinicOptions { tol, offset: 1e-6, max_time: 200.0, other_saddles: Vec::new() }
    }
}

/// Unit eigenvector of `j` for the real eigenvalue `lambda`.
fn eigenvector(j: &[[f64; 2]; 2], lambda: f64) -> Point {
    let a = [j[0][1], lambda - j[0][0]];
    let b = [lambda - j[1][1], j[1][0]];
    let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Where one manifold branch went.
#[derive(Debug, Clone, PartialEq)]
enum Branch {
    /// Came back within `tol` of the saddle; `states` end at the closest approach.
    Returned { states: Vec<Point>, time: f64, gap: f64 },
    /// Ended within `tol` of another saddle.
    Heteroclinic(Point),
    Escaped(String),
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn shoot<F, I>(b: &F, saddle: Point, dir_vec: Point, dir: Direction, opts: &HomoclinicOptions, inside: &I) -> Result<Branch, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let x0 = [saddle[0] + opts.offset * dir_vec[0], saddle[1] + opts.offset * dir_vec[1]];
    let depart = (10.0 * opts.tol).max(1e3 * opts.offset);
    let mut departed = false;
    let mut best: Option<(usize, f64)> = None;
    let mut count = 0usize;
    let mut hetero = None;
    let mut exited = false;
    let iopts = IntegrateOptions { tol: 1e-12, ..Default::default() };
    let run = integrate_with(b, x0, opts.max_time, dir, &iopts, |s| {
        count += 1;
        if !inside(s.x1) {
            exited = true;
            return Control::Stop;
        }
        let d = dist(s.x1, saddle);
        if !departed {
            departed = d > depart;
            return Control::Continue;
        }
        if let Some(&o) = opts.other_saddles.iter().find(|o| dist(s.x1, **o) <= opts.tol) {
            hetero = Some(o);
            return Control::Stop;
        }
        match best {
            Some((_, m)) if d > 2.0 * m && d > opts.tol => Control::Stop,
            _ if d <= opts.tol && best.is_none_or(|(_, m)| d < m) => {
                best = Some((count, d));
                Control::Continue
            }
            _ => Control::Continue,
        }
    });
    let traj = match run {
        Ok(t) => t,
        Err(DynamicsError::BlowUp { .. } | DynamicsError::StepUnderflow { .. }) => {
            return Ok(Branch::Escaped("branch escaped to infinity".into()));
        }
        Err(e) => return Err(e),
    };
    if let Some(o) = hetero {
        return Ok(Branch::Heteroclinic(o));
    }
    match best {
        Some((k, gap)) => {
            let states = traj.states[..=k].to_vec();
            Ok(Branch::Returned { time: traj.times[k], states, gap })
        }
        None if exited => Ok(Branch::Escaped("branch left the domain".into())),
        None => Ok(Branch::Escaped(format!("no return within t = {}", opts.max_time))),
    }
}

/// Arc-length fraction over which the approach to the saddle must be monotone.
const APPROACH_FRACTION: f64 = 0.2;

fn approach_is_asymptotic(states: &[Point], saddle: Point) -> bool {
    let mut s = vec![0.0];
    for w in states.windows(2) {
        s.push(s.last().unwrap() + dist(w[0], w[1]));
    }
    let total = *s.last().unwrap();
    let start = s.partition_point(|&v| v < (1.0 - APPROACH_FRACTION) * total);
    states[start..].windows(2).all(|w| dist(w[1], saddle) <= dist(w[0], saddle) * (1.0 + 1e-9))
}

/// Follow orbits started `delta` off the loop point `q` (toward `side`) and
/// compare successive returns to the normal section at `q`.
fn side_stability<F, I>(b: &F, q: Point, side: f64, delta: f64, max_time: f64, inside: &I) -> Result<Stability, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let sec = Section::new(q, b.eval(q)?);
    let start = sec.point(side * delta);
    let iopts = IntegrateOptions { tol: 1e-11, ..Default::default() };
    let ropts = ReturnOptions { integrate: iopts, min_time: 1e-3, max_time, window: 50.0 * delta };
    let mut offsets = vec![delta];
    let mut p = start;
    for _ in 0..4 {
        match next_crossing(b, p, Direction::Forward, &sec, &ropts, inside)? {
            Return::Crossed(c) => {
                let s = sec.coord(c.point);
                if s * side <= 0.0 {
                    // crossed the loop numerically: treat as drawn onto it
                    return Ok(Stability::Stable);
                }
                offsets.push(s.abs());
                p = c.point;
                if s.abs() < 0.05 * delta {
                    return Ok(Stability::Stable);
                }
            }
            _ => return Ok(Stability::Unstable),
        }
    }
    let n = offsets.len();
    Ok(if offsets[n - 1] < offsets[0] { Stability::Stable } else { Stability::Unstable })
}

/// Search for homoclinic loops of `saddle` with default options and no domain.
pub fn detect_homoclinic<F: VectorField + ?Sized>(
    b: &F,
    saddle: &FixedPointInfo,
    tol: f64,
) -> Result<HomoclinicStructure, DynamicsError> {
    detect_homoclinic_with(b, saddle, &HomoclinicOptions::with_tol(tol), |_| true)
}

/// Shoot forward along both unstable directions and backward along both
/// stable ones. A loop is recorded when a forward branch comes back within
/// `tol` of the saddle along a stable direction whose backward branch also
/// returns, and the final approach is monotone.
pub fn detect_homoclinic_with<F, I>(
    b: &F,
    saddle: &FixedPointInfo,
    opts: &HomoclinicOptions,
    inside: I,
) -> Result<HomoclinicStructure, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    if saddle.kind != FixedKind::Saddle {
        return Err(DynamicsError::InvalidOption(format!("{:?} is not a saddle", saddle.location)));
    }
    let x0 = saddle.location;
    let j = b.jacobian(x0)?;
    let (lu, ls) = (saddle.eigenvalues[0][0].max(saddle.eigenvalues[1][0]), saddle.eigenvalues[0][0].min(saddle.eigenvalues[1][0]));
    let u = eigenvector(&j, lu);
    let s = eigenvector(&j, ls);

    let mut backward_returns = Vec::new();
    for sign in [1.0, -1.0] {
        match shoot(b, x0, [sign * s[0], sign * s[1]], Direction::Backward, opts, &inside)? {
            Branch::Heteroclinic(o) => {
                return Err(DynamicsError::UnsupportedTopology(format!(
                    "stable branch of the saddle at {x0:?} comes from the saddle at {o:?}"
                )))
            }
            Branch::Returned { .. } => backward_returns.push(sign),
            Branch::Escaped(_) => {}
        }
    }

    let mut loops = Vec::new();
    let mut reasons = Vec::new();
    for sign in [1.0, -1.0] {
        match shoot(b, x0, [sign * u[0], sign * u[1]], Direction::Forward, opts, &inside)? {
            Branch::Heteroclinic(o) => {
                return Err(DynamicsError::UnsupportedTopology(format!(
                    "unstable branch of the saddle at {x0:?} reaches the saddle at {o:?}"
                )))
            }
            Branch::Returned { states, time, gap } => {
                let last = states[states.len() - 1];
                let arrival = ((last[0] - x0[0]) * s[0] + (last[1] - x0[1]) * s[1]).signum();
                if !backward_returns.contains(&arrival) {
                    reasons.push(format!("branch {sign:+} returns but the stable branch {arrival:+} does not"));
                } else if !approach_is_asymptotic(&states, x0) {
                    reasons.push(format!("branch {sign:+} passes the saddle without settling on it"));
                } else {
                    loops.push(HomoclinicLoop { samples: states, transit_time: time, gap, inside: Stability::Stable });
                }
            }
            Branch::Escaped(why) => reasons.push(format!("branch {sign:+}: {why}")),
        }
    }
    if loops.is_empty() {
        return Err(DynamicsError::NotFound(reasons.join("; ")));
    }

    // stability on each side, probed from the loop point farthest from the saddle
    let mut outside = None;
    for lp in loops.iter_mut() {
        let (k, _) = lp
            .samples
            .iter()
            .enumerate()
            .map(|(k, p)| (k, dist(*p, x0)))
            .fold((0, 0.0), |a, e| if e.1 > a.1 { e } else { a });
        let q = lp.samples[k];
        let delta = 1e-2 * extent(&lp.samples);
        // +tangent (left of the flow) is inside for counterclockwise loops
        let ccw = signed_area(&lp.samples) > 0.0;
        let in_side = if ccw { 1.0 } else { -1.0 };
        let probe_time = 20.0 * lp.transit_time;
        lp.inside = side_stability(b, q, in_side, delta, probe_time, &inside)?;
        if outside.is_none() {
            outside = Some(side_stability(b, q, -in_side, delta, 2.0 * probe_time, &inside)?);
        }
    }
    Ok(HomoclinicStructure { saddle: x0, loops, outside: outside.expect("at least one loop") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::fixed::describe;
    use crate::field::{Builtin, PlanarField};

    #[test]
    fn figure_eight_at_zero_level() {
        let b = Builtin::Corollary { alpha: 0.0 }.field();
        let saddle = describe(&b, [0.0, 0.0]).unwrap();
        let h = detect_homoclinic(&b, &saddle, 1e-4 * 3.6).unwrap();
        assert_eq!(h.loops.len(), 2);
        assert!(h.is_stable(), "{:?} {:?}", h.outside, h.loops.iter().map(|l| l.inside).collect::<Vec<_>>());
        // one loop per well
        let sides: Vec<f64> = h.loops.iter().map(|l| l.samples[l.samples.len() / 2][0].signum()).collect();
        assert!(sides.contains(&1.0) && sides.contains(&-1.0));
    }

    #[test]
    fn no_loop_when_branches_reach_a_cycle() {
        let b = Builtin::Corollary { alpha: 0.5 }.field();
        let saddle = describe(&b, [0.0, 0.0]).unwrap();
        assert!(matches!(detect_homoclinic(&b, &saddle, 3.6e-4), Err(DynamicsError::NotFound(_))));
    }

    #[test]
    fn linear_saddle_has_no_loop() {
        let b = PlanarField::parse("x1", "-x2").unwrap();
        let saddle = describe(&b, [0.0, 0.0]).unwrap();
        assert!(matches!(detect_homoclinic(&b, &saddle, 1e-4), Err(DynamicsError::NotFound(_))));
    }

    #[test]
    fn heteroclinic_connection_is_unsupported() {
        // pendulum: saddles at ±π joined by heteroclinic orbits
        let b = PlanarField::parse("x2", "-sin(x1)").unwrap();
        let pi = std::f64::consts::PI;
        let saddle = describe(&b, [-pi, 0.0]).unwrap();
        assert_eq!(saddle.kind, FixedKind::Saddle);
        let opts = HomoclinicOptions { other_saddles: vec![[pi, 0.0]], ..HomoclinicOptions::with_tol(1e-4) };
        let r = detect_homoclinic_with(&b, &saddle, &opts, |p| p[0].abs() < 4.0 && p[1].abs() < 3.0);
        assert!(matches!(r, Err(DynamicsError::UnsupportedTopology(_))), "{r:?}");
    }
}
