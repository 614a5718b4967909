use std::fmt::Write as _;

use super::config::Problem;
use super::AppError;
use crate::dynamics::{
    integrate_with, Components, Control, Direction, FixedKind, IntegrateOptions, LimitComponent, Stability,
};
use crate::geometry::Rect;
use crate::Point;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

struct View {
    bbox: Rect,
    scale: f64,
}

impl View {
    fn new(bbox: Rect) -> View {
        let scale = (SIZE - 2.0 * MARGIN) / bbox.width().max(bbox.height());
        View { bbox, scale }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        let cx = 0.5 * (self.bbox.lo[0] + self.bbox.hi[0]);
        let cy = 0.5 * (self.bbox.lo[1] + self.bbox.hi[1]);
        (0.5 * SIZE + (p[0] - cx) * self.scale, 0.5 * SIZE - (p[1] - cy) * self.scale)
    }

    fn polyline(&self, out: &mut String, pts: &[Point], style: &str) {
        let mut d = String::new();
        for p in pts {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, d.trim_end());
    }

    fn dot(&self, out: &mut String, p: Point, r: f64, fill: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}" stroke="black" stroke-width="0.8"/>"#);
    }
}

fn kind_color(kind: FixedKind, stable: bool) -> &'static str {
    match kind {
        FixedKind::StableNode | FixedKind::StableSpiral => "#1a9850",
        FixedKind::UnstableNode | FixedKind::UnstableSpiral => "#d73027",
        FixedKind::Saddle => "#fdae61",
        FixedKind::Center if stable => "#1a9850",
        FixedKind::Center => "#4575b4",
        FixedKind::Degenerate if stable => "#1a9850",
        FixedKind::Degenerate => "#999999",
    }
}

fn stability_color(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "#1a9850",
        Stability::Unstable => "#d73027",
        Stability::SemiStable => "#fdae61",
    }
}

/// Phase portrait: domain outline, background trajectories from a lattice,
/// and the limit-set components colored by stability.
pub fn phase_portrait(p: &Problem, comps: &Components) -> Result<String, AppError> {
    let bbox = p.domain.bounding_box();
    let view = View::new(bbox);
    let inside = |x: Point| p.domain.contains(x);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);

    let mut outline: Vec<Point> =
        p.domain.boundary_samples(400).map_err(|e| AppError::Numerical(e.to_string()))?.into_iter().map(|(q, _)| q).collect();
    // boundary samples of sublevel sets come unordered; draw those as dots
    if matches!(p.domain, crate::geometry::Domain::Sublevel { .. }) {
        for q in &outline {
            let (x, y) = view.map(*q);
            let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="0.8" fill="#333333"/>"##);
        }
    } else {
        if let Some(first) = outline.first().copied() {
            outline.push(first);
        }
        view.polyline(&mut s, &outline, r##"stroke="#333333" stroke-width="1.5""##);
    }

    for r in &p.degenerate {
        let pts: Vec<Point> =
            r.domain.boundary_samples(200).map_err(|e| AppError::Numerical(e.to_string()))?.into_iter().map(|(q, _)| q).collect();
        view.polyline(&mut s, &pts, r##"stroke="#762a83" stroke-width="1.5" stroke-dasharray="4 3""##);
    }

    let m = 12;
    let opts = IntegrateOptions::with_tol(1e-6);
    for k in 0..m * m {
        let (i, j) = (k % m, k / m);
        let x0 = [
            bbox.lo[0] + (i as f64 + 0.5) * bbox.width() / m as f64,
            bbox.lo[1] + (j as f64 + 0.5) * bbox.height() / m as f64,
        ];
        if !inside(x0) {
            continue;
        }
        let Ok(tr) = integrate_with(&p.field, x0, 10.0, Direction::Forward, &opts, |st| {
            if inside(st.x1) {
                Control::Continue
            } else {
                Control::Stop
            }
        }) else {
            continue;
        };
        view.polyline(&mut s, &tr.states, r##"stroke="#bbbbbb" stroke-width="0.7""##);
    }

    for comp in &comps.components {
        match comp {
            LimitComponent::Cycle(o) => {
                let style = format!(r#"stroke="{}" stroke-width="2.5""#, stability_color(o.stability));
                view.polyline(&mut s, &o.samples, &style);
            }
            LimitComponent::HomoclinicUnion(h) | LimitComponent::SingleHomoclinic(h) => {
                let color = if h.is_stable() { "#1a9850" } else { "#d73027" };
                for lp in &h.loops {
                    view.polyline(&mut s, &lp.samples, &format!(r#"stroke="{color}" stroke-width="2.5""#));
                }
                view.dot(&mut s, h.saddle, 5.0, kind_color(FixedKind::Saddle, false));
            }
            LimitComponent::ClosedOrbitFamily(f) => {
                for q in 1..=4 {
                    let x0 = f.point(f.ell_max * q as f64 / 4.0 * (1.0 - 1e-6));
                    let v = p.field.eval(x0).map_err(|e| AppError::Numerical(e.to_string()))?;
                    let turn = 1.2 * std::f64::consts::TAU * f.ell_max * q as f64 / 4.0 / v[0].hypot(v[1]).max(1e-12);
                    let fine = IntegrateOptions::with_tol(1e-10);
                    if let Ok(tr) = integrate_with(&p.field, x0, turn, Direction::Forward, &fine, |_| Control::Continue) {
                        view.polyline(&mut s, &tr.states, r##"stroke="#4575b4" stroke-width="1.8""##);
                    }
                }
                view.dot(&mut s, f.center, 5.0, kind_color(FixedKind::Center, false));
            }
            LimitComponent::FixedPt(fp) => view.dot(&mut s, fp.location, 5.0, kind_color(fp.kind, fp.is_stable())),
            LimitComponent::DegenerateRegion(_) => {}
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
