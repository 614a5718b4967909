//! Transversal sections and return maps.

use super::integrate::{dopri, eval_dir, rk_step, Control, Direction, IntegrateOptions, Step};
use super::DynamicsError;
use crate::field::VectorField;
use crate::Point;

/// The line through `origin` normal to `normal`, crossed in the direction of
/// `normal`. `coord` measures position along the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub origin: Point,
    /// Unit vector; a crossing goes from `(x - origin)·normal < 0` to `> 0`.
    pub normal: Point,
}

impl Section {
    pub fn new(origin: Point, direction: Point) -> Section {
        let n = direction[0].hypot(direction[1]);
        Section { origin, normal: [direction[0] / n, direction[1] / n] }
    }

    /// Unit vector along the line, `normal` rotated by +90 degrees.
    pub fn tangent(&self) -> Point {
        [-self.normal[1], self.normal[0]]
    }

    pub fn side(&self, x: Point) -> f64 {
        (x[0] - self.origin[0]) * self.normal[0] + (x[1] - self.origin[1]) * self.normal[1]
    }

    pub fn coord(&self, x: Point) -> f64 {
        let t = self.tangent();
        (x[0] - self.origin[0]) * t[0] + (x[1] - self.origin[1]) * t[1]
    }

    pub fn point(&self, s: f64) -> Point {
        let t = self.tangent();
        [self.origin[0] + s * t[0], self.origin[1] + s * t[1]]
    }
}

/// A crossing located on a step by secant refinement with exact sub-steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub point: Point,
}

fn refine_crossing<F: VectorField + ?Sized>(
    b: &F,
    dir: Direction,
    sec: &Section,
    step: &Step<2>,
) -> Result<Crossing, DynamicsError> {
    let h = step.t1 - step.t0;
    let g = |tau: f64| -> Result<(f64, Point), DynamicsError> {
        let x = if tau == 0.0 { step.x0 } else { rk_step(|x| eval_dir(b, x, dir), &step.x0, tau)? };
        Ok((sec.side(x), x))
    };
    let (mut a, mut fa) = (0.0, sec.side(step.x0));
    let (mut c, mut fc) = (h, sec.side(step.x1));
    let mut best = (h, step.x1, fc.abs());
    // Illinois false position
    let mut side = 0;
    for _ in 0..60 {
        let tau = if fc != fa { c - fc * (c - a) / (fc - fa) } else { 0.5 * (a + c) };
        let tau = tau.clamp(a.min(c), a.max(c));
        let (ft, x) = g(tau)?;
        if ft.abs() < best.2 {
            best = (tau, x, ft.abs());
        }
        if ft == 0.0 || (c - a).abs() <= 1e-15 * h.max(1e-300) || ft.abs() <= 1e-15 {
            break;
        }
        if (ft > 0.0) == (fc > 0.0) {
            c = tau;
            fc = ft;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = tau;
            fa = ft;
            if side == -1 {
                fc *= 0.5;
            }
            side = -1;
        }
    }
    Ok(Crossing { time: step.t0 + best.0, point: best.1 })
}

/// Options for [`next_crossing`].
#[derive(Debug, Clone, Copy)]
pub struct ReturnOptions {
    pub integrate: IntegrateOptions,
    /// Crossings before this elapsed time are ignored.
    pub min_time: f64,
    pub max_time: f64,
    /// Only crossings with `|coord| <= window` count.
    pub window: f64,
}

/// Outcome of following a trajectory to a section.
#[derive(Debug, Clone, PartialEq)]
pub enum Return {
    Crossed(Crossing),
    /// The trajectory left the region accepted by `inside`.
    Exited { time: f64, point: Point },
    /// No crossing within `max_time`.
    Timeout { point: Point },
}

/// Follow `x' = ±b` from `x0` to the next admissible crossing of `sec`.
pub fn next_crossing<F, I>(
    b: &F,
    x0: Point,
    dir: Direction,
    sec: &Section,
    opts: &ReturnOptions,
    inside: I,
) -> Result<Return, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let mut found: Option<Result<Crossing, DynamicsError>> = None;
    let mut exited = None;
    let mut latest = (0.0, x0);
    let run = dopri(|x| eval_dir(b, x, dir), x0, opts.max_time, &opts.integrate, |s| {
        latest = (s.t1, s.x1);
        if !inside(s.x1) {
            exited = Some((s.t1, s.x1));
            return Control::Stop;
        }
        if s.t1 >= opts.min_time && sec.side(s.x0) < 0.0 && sec.side(s.x1) >= 0.0 {
            let cross = refine_crossing(b, dir, sec, s);
            match cross {
                Ok(c) if c.time >= opts.min_time && sec.coord(c.point).abs() <= opts.window => {
                    found = Some(Ok(c));
                    return Control::Stop;
                }
                Ok(_) => {}
                Err(e) => {
                    found = Some(Err(e));
                    return Control::Stop;
                }
            }
        }
        Control::Continue
    });
    // escaping to infinity counts as leaving
    let last = match run {
        Ok((_, last)) => last,
        Err(DynamicsError::BlowUp { .. } | DynamicsError::StepUnderflow { .. }) => {
            return Ok(Return::Exited { time: latest.0, point: latest.1 });
        }
        Err(e) => return Err(e),
    };
    if let Some(c) = found {
        return Ok(Return::Crossed(c?));
    }
    if let Some((time, point)) = exited {
        return Ok(Return::Exited { time, point });
    }
    Ok(Return::Timeout { point: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Builtin;

    #[test]
    fn rotation_returns_after_one_period() {
        let b = Builtin::Rotation.field();
        // section through (r, 0) crossed upward
        let sec = Section::new([0.7, 0.0], [0.0, 1.0]);
        let opts = ReturnOptions {
            integrate: IntegrateOptions::with_tol(1e-11),
            min_time: 0.1,
            max_time: 20.0,
            window: 0.5,
        };
        match next_crossing(&b, [0.7, 0.0], Direction::Forward, &sec, &opts, |_| true).unwrap() {
            Return::Crossed(c) => {
                assert!((c.time - std::f64::consts::TAU).abs() < 1e-8, "{c:?}");
                assert!((c.point[0] - 0.7).abs() < 1e-9 && c.point[1].abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // (-0.7, 0) crosses the axis downward, so only the return to (0.7, 0) counts
        let sec2 = Section::new([0.0, 0.0], [0.0, 1.0]);
        let wide = ReturnOptions { window: 1.0, ..opts };
        let r = next_crossing(&b, [0.7, 0.0], Direction::Forward, &sec2, &wide, |_| true).unwrap();
        assert!(matches!(r, Return::Crossed(c) if (c.point[0] - 0.7).abs() < 1e-9));
    }
}
