//! Zeros of `b`, their linear type, and probing of non-hyperbolic ones.

use serde::{Deserialize, Serialize};

use super::integrate::{Direction, IntegrateOptions};
use super::section::{next_crossing, Return, ReturnOptions, Section};
use super::DynamicsError;
use crate::field::VectorField;
use crate::geometry::Domain;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedKind {
    StableNode,
    StableSpiral,
    UnstableNode,
    UnstableSpiral,
    Saddle,
    Center,
    Degenerate,
}

/// Nonlinear behavior near a non-hyperbolic point, found by following
/// nearby orbits around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    Stable,
    Unstable,
    /// Nearby orbits close up: the point is surrounded by periodic orbits.
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub location: Point,
    /// Jacobian eigenvalues as `(re, im)` pairs.
    pub eigenvalues: [[f64; 2]; 2],
    pub kind: FixedKind,
    /// `|b|` at `location`.
    pub residual: f64,
    /// Set for centers and degenerate points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeOutcome>,
    /// Supplied by the caller rather than found as a zero of `b`.
    #[serde(default)]
    pub declared: bool,
}

impl FixedPointInfo {
    /// Attracting, either linearly or by probing.
    pub fn is_stable(&self) -> bool {
        matches!(self.kind, FixedKind::StableNode | FixedKind::StableSpiral) || self.probe == Some(ProbeOutcome::Stable)
    }
}

/// Eigenvalues and type of a 2x2 Jacobian.
///
/// A real part counts as zero when `|re| <= 1e-8 |λ|`.
pub fn classify_jacobian(j: &[[f64; 2]; 2]) -> ([[f64; 2]; 2], FixedKind) {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = 0.25 * tr * tr - det;
    let zero_tol = 1e-8;
    if disc >= 0.0 {
        let r = disc.sqrt();
        let (l1, l2) = (0.5 * tr + r, 0.5 * tr - r);
        let scale = l1.abs().max(l2.abs());
        let eig = [[l1, 0.0], [l2, 0.0]];
        if scale == 0.0 || l1.abs() <= zero_tol * scale || l2.abs() <= zero_tol * scale {
            return (eig, FixedKind::Degenerate);
        }
        let kind = match (l1 > 0.0, l2 > 0.0) {
            (false, false) => FixedKind::StableNode,
            (true, true) => FixedKind::UnstableNode,
            _ => FixedKind::Saddle,
        };
        (eig, kind)
    } else {
        let re = 0.5 * tr;
        let im = (-disc).sqrt();
        let eig = [[re, im], [re, -im]];
        let kind = if re.abs() <= zero_tol * re.hypot(im) {
            FixedKind::Center
        } else if re < 0.0 {
            FixedKind::StableSpiral
        } else {
            FixedKind::UnstableSpiral
        };
        (eig, kind)
    }
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

/// Damped Newton iteration for `b(x) = 0`.
fn newton<F: VectorField + ?Sized>(b: &F, seed: Point, scale: f64) -> Result<Option<Point>, DynamicsError> {
    let mut x = seed;
    let mut fx = b.eval(x)?;
    for _ in 0..80 {
        let j = b.jacobian(x)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let jn = j.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(det.abs() > 1e-14 * jn * jn) {
            return Ok(None);
        }
        let dx = [(j[1][1] * fx[0] - j[0][1] * fx[1]) / det, (-j[1][0] * fx[0] + j[0][0] * fx[1]) / det];
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let y = [x[0] - t * dx[0], x[1] - t * dx[1]];
            let fy = b.eval(y)?;
            if norm(fy) < norm(fx) || norm(fx) == 0.0 {
                accepted = Some((y, fy));
                break;
            }
            t *= 0.5;
        }
        let Some((y, fy)) = accepted else {
            return Ok((norm(fx) <= 1e-12 * scale.max(1.0)).then_some(x));
        };
        let step = t * norm(dx);
        x = y;
        fx = fy;
        if norm(fx) <= 1e-13 * scale.max(1.0) || step <= 1e-15 * (1.0 + norm(x)) {
            return Ok((norm(fx) <= 1e-10 * scale.max(1.0)).then_some(x));
        }
    }
    Ok((norm(fx) <= 1e-10 * scale.max(1.0)).then_some(x))
}

/// Result of [`find_fixed_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSearch {
    pub points: Vec<FixedPointInfo>,
    /// Seeds whose Newton iteration failed or left the domain.
    pub dropped: Vec<String>,
}

/// Zeros of `b` inside `d`, found by Newton from local minima of `|b|` on a
/// `grid_seeds x grid_seeds` lattice over the bounding box.
///
/// Roots within `1e-6` of each other are merged, keeping the smaller
/// residual. Centers and degenerate points are probed with nearby orbits.
pub fn find_fixed_points<F: VectorField + ?Sized>(
    b: &F,
    d: &Domain,
    grid_seeds: usize,
) -> Result<FixedPointSearch, DynamicsError> {
    if grid_seeds < 16 {
        return Err(DynamicsError::InvalidOption(format!("grid_seeds = {grid_seeds}, need at least 16")));
    }
    let bb = d.bounding_box();
    let m = grid_seeds;
    let (dx, dy) = (bb.width() / m as f64, bb.height() / m as f64);
    let at = |i: usize, j: usize| [bb.lo[0] + (i as f64 + 0.5) * dx, bb.lo[1] + (j as f64 + 0.5) * dy];
    let mut mag = vec![f64::INFINITY; m * m];
    for j in 0..m {
        for i in 0..m {
            let p = at(i, j);
            if d.contains(p) {
                mag[j * m + i] = norm(b.eval(p)?);
            }
        }
    }
    let scale = mag.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let mut seeds = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let v = mag[j * m + i];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= m as i64 || jj >= m as i64 {
                        continue;
                    }
                    let w = mag[jj as usize * m + ii as usize];
                    // strict on one half of the neighbors so plateaus keep one seed
                    let earlier = (dj, di) < (0, 0);
                    if w < v || (earlier && w == v) {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push(at(i, j));
            }
        }
    }

    let mut roots: Vec<(Point, f64)> = Vec::new();
    let mut dropped = Vec::new();
    for s in seeds {
        match newton(b, s, scale)? {
            Some(x) if d.contains(x) => {
                let r = norm(b.eval(x)?);
                match roots.iter_mut().find(|(y, _)| norm([x[0] - y[0], x[1] - y[1]]) <= 1e-6) {
                    Some(existing) if r < existing.1 => *existing = (x, r),
                    Some(_) => {}
                    None => roots.push((x, r)),
                }
            }
            Some(x) => dropped.push(format!("seed {s:?} converged to {x:?} outside the domain")),
            None => dropped.push(format!("seed {s:?}: Newton failed (singular Jacobian or no convergence)")),
        }
    }
    roots.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));

    let diam = d.diameter();
    let mut points = Vec::with_capacity(roots.len());
    for (x, r) in roots {
        let mut info = describe(b, x)?;
        info.residual = r;
        if matches!(info.kind, FixedKind::Center | FixedKind::Degenerate) {
            info.probe = Some(probe_point(b, x, 1e-2 * diam, |p| d.contains(p))?);
        }
        points.push(info);
    }
    Ok(FixedPointSearch { points, dropped })
}

/// Linear classification of `b` at `x`, without probing.
pub fn describe<F: VectorField + ?Sized>(b: &F, x: Point) -> Result<FixedPointInfo, DynamicsError> {
    let (eigenvalues, kind) = classify_jacobian(&b.jacobian(x)?);
    Ok(FixedPointInfo { location: x, eigenvalues, kind, residual: norm(b.eval(x)?), probe: None, declared: false })
}

/// Follow the orbit through `x + radius e1` around `x` for a dozen turns and
/// compare successive crossings of the ray `x + s e1`, `s > 0`.
pub fn probe_point<F, I>(b: &F, x: Point, radius: f64, inside: I) -> Result<ProbeOutcome, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let start = [x[0] + radius, x[1]];
    let v = b.eval(start)?;
    if v[1] == 0.0 {
        return Ok(ProbeOutcome::Stable);
    }
    let sec = Section::new(x, [0.0, v[1].signum()]);
    let speed = norm(v).max(1e-300);
    let turn = std::f64::consts::TAU * radius / speed;
    let opts = ReturnOptions {
        integrate: IntegrateOptions { tol: 1e-12, ..Default::default() },
        min_time: 0.05 * turn,
        max_time: 200.0 * turn,
        window: 4.0 * radius,
    };
    let mut p = start;
    let mut radii = vec![radius];
    for _ in 0..12 {
        match next_crossing(b, p, Direction::Forward, &sec, &opts, &inside)? {
            Return::Crossed(c) => {
                let s = sec.coord(c.point);
                // the ray is the half-line on the starting side
                if s * sec.coord(start) <= 0.0 {
                    break;
                }
                radii.push(s.abs());
                p = c.point;
            }
            Return::Exited { .. } => return Ok(ProbeOutcome::Unstable),
            Return::Timeout { point } => {
                let dist = norm([point[0] - x[0], point[1] - x[1]]);
                return Ok(if dist < radius { ProbeOutcome::Stable } else { ProbeOutcome::Unstable });
            }
        }
        if *radii.last().unwrap() < 1e-3 * radius {
            return Ok(ProbeOutcome::Stable);
        }
    }
    let last = *radii.last().unwrap();
    let rel = (last - radius) / radius;
    let monotone_down = radii.windows(2).all(|w| w[1] < w[0]);
    let monotone_up = radii.windows(2).all(|w| w[1] > w[0]);
    Ok(if rel < -1e-6 && monotone_down {
        ProbeOutcome::Stable
    } else if rel > 1e-6 && monotone_up {
        ProbeOutcome::Unstable
    } else if rel.abs() <= 1e-6 {
        ProbeOutcome::Neutral
    } else if rel < 0.0 {
        ProbeOutcome::Stable
    } else {
        ProbeOutcome::Unstable
    })
}
