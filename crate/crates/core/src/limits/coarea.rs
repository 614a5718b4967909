//! Orbit-integral weights that reduce a closed-orbit family to one dimension.
//!
//! Orbits are labeled by the distance `ell` from the center along the
//! family's ray. Writing `x = Φ^t(p(ell))`, the area element is
//! `|ξ × b| dt dℓ` with `ξ = ∂x/∂ell` solving the variational equation, and
//! `|∇ell| = |b| / |ξ × b|`. A function `u(ell)` constant on orbits then has
//! energy `∫ u'^2 κ`, mass `∫ u^2 μ` and potential `∫ c u^2` = `∫ u^2 γ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LimitsError;
use crate::dynamics::{dopri, Control, DynamicsError, IntegrateOptions, OrbitFamily};
use crate::field::{ScalarField, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoareaWeights {
    /// Equispaced stations from the center (`ell = 0`) to `ell_max`.
    pub ell: Vec<f64>,
    pub kappa: Vec<f64>,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Period of the orbit through each station; zero at the center.
    pub period: Vec<f64>,
}

impl CoareaWeights {
    pub fn len(&self) -> usize {
        self.ell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ell.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.ell.last().unwrap_or(&0.0)
    }

    /// Every other station, for the coarse half of a Richardson pair.
    pub fn coarsen(&self) -> CoareaWeights {
        let pick = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<_>>();
        CoareaWeights {
            ell: pick(&self.ell),
            kappa: pick(&self.kappa),
            mu: pick(&self.mu),
            gamma: pick(&self.gamma),
            period: pick(&self.period),
        }
    }
}

/// Weights `(κ, μ, γ, T)` for the orbit through `fam.point(ell)`.
fn station<F: VectorField + ?Sized>(
    b: &F,
    c: &ScalarField,
    fam: &OrbitFamily,
    ell: f64,
) -> Result<[f64; 4], LimitsError> {
    let p = fam.point(ell);
    let d = fam.direction;
    let v = b.eval(p)?;
    let speed = v[0].hypot(v[1]);
    let perp = [-d[1], d[0]];
    let orient = (v[0] * perp[0] + v[1] * perp[1]).signum();
    if !(speed > 0.0) || orient == 0.0 {
        return Err(LimitsError::WeightSingularity(format!("flow is not transversal to the ray at ell = {ell}")));
    }
    let side = |x: &[f64; 7]| orient * ((x[0] - fam.center[0]) * perp[0] + (x[1] - fam.center[1]) * perp[1]);
    let along = |x: &[f64; 7]| (x[0] - fam.center[0]) * d[0] + (x[1] - fam.center[1]) * d[1];

    let rhs = |y: &[f64; 7]| -> Result<[f64; 7], DynamicsError> {
        let x = [y[0], y[1]];
        let bx = b.eval(x)?;
        let j = b.jacobian(x)?;
        let cross = (y[2] * bx[1] - y[3] * bx[0]).abs();
        let cx = c.eval(x)?;
        Ok([
            bx[0],
            bx[1],
            j[0][0] * y[2] + j[0][1] * y[3],
            j[1][0] * y[2] + j[1][1] * y[3],
            cross,
            (bx[0] * bx[0] + bx[1] * bx[1]) / cross,
            cx * cross,
        ])
    };
    let y0 = [p[0], p[1], d[0], d[1], 0.0, 0.0, 0.0];
    let t_max = 1e3 * std::f64::consts::TAU * ell / speed;
    let opts = IntegrateOptions { tol: 1e-11, max_steps: 1_000_000, ..Default::default() };
    let mut hit: Option<(f64, [f64; 7])> = None;
    dopri(rhs, y0, t_max, &opts, |s| {
        if side(&s.x0) < 0.0 && side(&s.x1) >= 0.0 && along(&s.x1) > 0.0 {
            let (mut lo, mut hi) = (s.t0, s.t1);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if side(&s.at(mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hit = Some((hi, s.at(hi)));
            return Control::Stop;
        }
        Control::Continue
    })?;
    let (period, y) = hit.ok_or_else(|| {
        LimitsError::WeightSingularity(format!("orbit through ell = {ell} does not return to the ray"))
    })?;
    let w = [y[5], y[4], y[6], period];
    if w.iter().any(|v| !v.is_finite()) || !(w[0] > 0.0 && w[1] > 0.0) {
        return Err(LimitsError::WeightSingularity(format!("weights {w:?} at ell = {ell}")));
    }
    Ok(w)
}

/// Weights at `stations` equispaced points of `[0, fam.ell_max]`. The center
/// station gets zero weights, which is their limit there.
pub fn coarea_weights<F: VectorField + ?Sized>(
    b: &F,
    c: &ScalarField,
    fam: &OrbitFamily,
    stations: usize,
) -> Result<CoareaWeights, LimitsError> {
    if stations < 16 {
        return Err(LimitsError::Invalid(format!("need at least 16 stations, got {stations}")));
    }
    let h = fam.ell_max / (stations - 1) as f64;
    let ell: Vec<f64> = (0..stations).map(|k| k as f64 * h).collect();
    let rows: Vec<Result<[f64; 4], LimitsError>> = ell
        .par_iter()
        .map(|&l| if l == 0.0 { Ok([0.0; 4]) } else { station(b, c, fam, l) })
        .collect();
    let mut w = CoareaWeights {
        ell: ell.clone(),
        kappa: Vec::with_capacity(stations),
        mu: Vec::with_capacity(stations),
        gamma: Vec::with_capacity(stations),
        period: Vec::with_capacity(stations),
    };
    for r in rows {
        let [k, m, g, t] = r?;
        w.kappa.push(k);
        w.mu.push(m);
        w.gamma.push(g);
        w.period.push(t);
    }
    Ok(w)
}

/// Transversal coordinate of the orbit through `x`: where it next crosses
/// the family's ray. `None` when the orbit leaves the domain, fails to come
/// back within `max_time`, or lands beyond `fam.ell_max`.
pub fn orbit_label<F, I>(b: &F, fam: &OrbitFamily, x: crate::Point, max_time: f64, inside: I) -> Result<Option<f64>, LimitsError>
where
    F: VectorField + ?Sized,
    I: Fn(crate::Point) -> bool,
{
    let d = fam.direction;
    let perp = [-d[1], d[0]];
    let rel = |p: &[f64; 2]| [p[0] - fam.center[0], p[1] - fam.center[1]];
    let along = |p: &[f64; 2]| rel(p)[0] * d[0] + rel(p)[1] * d[1];
    let across = |p: &[f64; 2]| rel(p)[0] * perp[0] + rel(p)[1] * perp[1];
    // orientation of the flow across the ray
    let probe = fam.point(0.5 * fam.ell_max);
    let v = b.eval(probe)?;
    let orient = (v[0] * perp[0] + v[1] * perp[1]).signum();
    if along(&x) > 0.0 && across(&x) == 0.0 {
        let l = along(&x);
        return Ok((l <= fam.ell_max).then_some(l));
    }
    let side = |p: &[f64; 2]| orient * across(p);
    let mut hit = None;
    let mut out = false;
    let opts = IntegrateOptions { tol: 1e-10, ..Default::default() };
    let run = dopri(
        |y: &[f64; 2]| Ok(b.eval(*y)?),
        x,
        max_time,
        &opts,
        |s| {
            if !inside(s.x1) {
                out = true;
                return Control::Stop;
            }
            if side(&s.x0) < 0.0 && side(&s.x1) >= 0.0 && along(&s.x1) > 0.0 {
                let (mut lo, mut hi) = (s.t0, s.t1);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if side(&s.at(mid)) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hit = Some(along(&s.at(hi)));
                return Control::Stop;
            }
            Control::Continue
        },
    );
    match run {
        Ok(_) => {}
        Err(DynamicsError::BlowUp { .. } | DynamicsError::StepUnderflow { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if out {
        return Ok(None);
    }
    Ok(hit.filter(|l| *l <= fam.ell_max * (1.0 + 1e-9)))
}
