//! Large-drift limit values of each limit-set component and their minimum.

mod coarea;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coarea::{coarea_weights, orbit_label, CoareaWeights};

use crate::dynamics::{
    dopri, Control, DegenerateRegion, DynamicsError, FamilyEnd, FixedPointInfo, HomoclinicStructure, IntegrateOptions,
    LimitComponent, OrbitFamily, PeriodicOrbit, Stability,
};
use crate::expr::ExprError;
use crate::field::{PlanarField, ScalarField, VectorField};
use crate::geometry::{Grid, GeometryError};
use crate::pde::{principal_eigenvalue, solve_1d, BoundarySpec, EndCondition, PdeError, Scheme};
use crate::sparse::{EigenOptions, Precond};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitsError {
    #[error("{0}")]
    Invalid(String),
    #[error("orbit average forms disagree: time {time}, arc length {arc}")]
    Inconsistent { time: f64, arc: f64 },
    #[error("weight singularity: {0}")]
    WeightSingularity(String),
    #[error("every component has an infinite limit value; the system is probably misclassified")]
    AllInfinite,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pde(#[from] PdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitCase {
    FixedPointValue,
    OrbitAverage,
    SaddleValue,
    FamilyRayleigh,
    DegenerateN,
    DegenerateD,
    DegenerateDN,
    Unstable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Second value of the same quantity by an independent route.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    /// Estimated discretization or quadrature error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// `Λ` of one component. `value` is `+∞` exactly when `case` is `Unstable`;
/// it serializes as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedLimit {
    pub value: f64,
    pub case: LimitCase,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl PredictedLimit {
    pub fn unstable() -> Self {
        PredictedLimit { value: f64::INFINITY, case: LimitCase::Unstable, diagnostics: Diagnostics::default() }
    }

    fn plain(value: f64, case: LimitCase) -> Self {
        PredictedLimit { value, case, diagnostics: Diagnostics::default() }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `c` at a stable point, `+∞` otherwise.
pub fn fixed_point_value(c: &ScalarField, f: &FixedPointInfo) -> Result<PredictedLimit, LimitsError> {
    if !f.is_stable() {
        return Ok(PredictedLimit::unstable());
    }
    Ok(PredictedLimit::plain(c.eval(f.location)?, LimitCase::FixedPointValue))
}

/// Composite Simpson rule over equispaced values, `values.len()` odd.
fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().enumerate().map(|(k, v)| if k % 2 == 0 { 4.0 * v } else { 2.0 * v }).sum();
    h / 3.0 * (values[0] + inner + values[n])
}

/// Tolerated relative disagreement between the two orbit-average forms.
const AVERAGE_MISMATCH: f64 = 1e-4;

/// Time average of `c` over a stable cycle, cross-checked against the
/// arc-length form `∮ c/|b| ds / ∮ 1/|b| ds` computed by integrating the
/// unit-speed flow once around.
pub fn orbit_average<F: VectorField + ?Sized>(
    c: &ScalarField,
    b: &F,
    orbit: &PeriodicOrbit,
) -> Result<PredictedLimit, LimitsError> {
    if orbit.stability != Stability::Stable {
        return Ok(PredictedLimit::unstable());
    }
    let n = orbit.samples.len() - 1;
    if n < 4 || n % 2 != 0 {
        return Err(LimitsError::Invalid(format!("need an even number of sample intervals, got {n}")));
    }
    let cv = orbit.samples.iter().map(|p| c.eval(*p)).collect::<Result<Vec<f64>, _>>()?;
    let h = orbit.period / n as f64;
    let time = simpson(&cv, h) / orbit.period;
    let coarse: Vec<f64> = cv.iter().step_by(2).copied().collect();
    let time_coarse = if (n / 2) % 2 == 0 { simpson(&coarse, 2.0 * h) / orbit.period } else { time };

    let iopts = IntegrateOptions { tol: 1e-12, max_steps: 1_000_000, ..Default::default() };
    let x0 = orbit.samples[0];
    // length of the orbit: integrate |b| over one period
    let (_, end) = dopri(
        |y: &[f64; 3]| {
            let v = b.eval([y[0], y[1]])?;
            Ok([v[0], v[1], v[0].hypot(v[1])])
        },
        [x0[0], x0[1], 0.0],
        orbit.period,
        &iopts,
        |_| Control::Continue,
    )?;
    let length = end[2];
    let (_, arc) = dopri(
        |y: &[f64; 4]| {
            let x = [y[0], y[1]];
            let v = b.eval(x)?;
            let s = v[0].hypot(v[1]);
            Ok([v[0] / s, v[1] / s, c.eval(x)? / s, 1.0 / s])
        },
        [x0[0], x0[1], 0.0, 0.0],
        length,
        &iopts,
        |_| Control::Continue,
    )?;
    let arc_value = arc[2] / arc[3];
    if (arc_value - time).abs() > AVERAGE_MISMATCH * time.abs().max(1.0) {
        return Err(LimitsError::Inconsistent { time, arc: arc_value });
    }
    Ok(PredictedLimit {
        value: time,
        case: LimitCase::OrbitAverage,
        diagnostics: Diagnostics {
            cross_check: Some(arc_value),
            error_estimate: Some((time - time_coarse).abs()),
            residual: Some(orbit.return_residual),
        },
    })
}

/// `c` at the saddle of a union of two loops attracting from both sides;
/// `+∞` for single loops and unions that are not stable on every side.
pub fn saddle_value(c: &ScalarField, h: &HomoclinicStructure) -> Result<PredictedLimit, LimitsError> {
    if h.loops.len() != 2 || !h.is_stable() {
        return Ok(PredictedLimit::unstable());
    }
    Ok(PredictedLimit::plain(c.eval(h.saddle)?, LimitCase::SaddleValue))
}

/// Default number of stations along a family's transversal.
pub const FAMILY_STATIONS: usize = 129;

/// Smallest eigenvalue of the reduced problem `-(κu')' + γu = λμu` on the
/// family's transversal, natural at the center and Neumann or Dirichlet at
/// the outer orbit. The error estimate compares against every other station.
pub fn family_rayleigh<F: VectorField + ?Sized>(
    c: &ScalarField,
    b: &F,
    fam: &OrbitFamily,
    stations: usize,
) -> Result<PredictedLimit, LimitsError> {
    let w = coarea_weights(b, c, fam, stations)?;
    let (fine, _) = reduced_eigen(&w, fam.outer)?;
    let coarse = if w.coarsen().len() >= 16 { Some(reduced_eigen(&w.coarsen(), fam.outer)?.0) } else { None };
    Ok(PredictedLimit {
        value: fine.lambda,
        case: LimitCase::FamilyRayleigh,
        diagnostics: Diagnostics {
            cross_check: None,
            error_estimate: coarse.map(|e| (e.lambda - fine.lambda).abs()),
            residual: Some(fine.residual_norm),
        },
    })
}

/// The 1D eigenpair of a family from its weights.
pub fn reduced_eigen(w: &CoareaWeights, outer: FamilyEnd) -> Result<(crate::pde::Eigen1d, f64), LimitsError> {
    let right = match outer {
        FamilyEnd::Neumann => EndCondition::Neumann,
        FamilyEnd::Dirichlet => EndCondition::Dirichlet,
    };
    let e = solve_1d(&w.kappa, &w.gamma, &w.mu, w.length(), EndCondition::Neumann, right)?;
    let len = w.length();
    Ok((e, len))
}

/// Principal eigenvalue of `-Δ + c` on a region where `b` vanishes, under the
/// region's boundary condition, on an `n`-cell grid.
pub fn degenerate_value(c: &ScalarField, region: &DegenerateRegion, n: usize) -> Result<PredictedLimit, LimitsError> {
    let grid = Grid::build(&region.domain, n)?;
    let opts = EigenOptions { tol: 1e-10, precond: Precond::Ilu0, ..EigenOptions::refined() };
    let r = principal_eigenvalue(&grid, &PlanarField::zero(), 0.0, c, &region.bc, Scheme::ExponentialFitting, &opts)?;
    let case = match region.bc {
        BoundarySpec::AllNeumann => LimitCase::DegenerateN,
        BoundarySpec::AllDirichlet => LimitCase::DegenerateD,
        BoundarySpec::Mixed { .. } => LimitCase::DegenerateDN,
    };
    Ok(PredictedLimit {
        value: r.eigen.lambda,
        case,
        diagnostics: Diagnostics { residual: Some(r.eigen.residual_norm), ..Default::default() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    pub family_stations: usize,
    pub degenerate_n: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { family_stations: FAMILY_STATIONS, degenerate_n: 129 }
    }
}

/// `Λ` of a single component.
pub fn component_value<F: VectorField + ?Sized>(
    k: &LimitComponent,
    c: &ScalarField,
    b: &F,
    opts: &LimitOptions,
) -> Result<PredictedLimit, LimitsError> {
    match k {
        LimitComponent::FixedPt(f) => fixed_point_value(c, f),
        LimitComponent::Cycle(o) => orbit_average(c, b, o),
        LimitComponent::HomoclinicUnion(h) | LimitComponent::SingleHomoclinic(h) => saddle_value(c, h),
        LimitComponent::ClosedOrbitFamily(f) => family_rayleigh(c, b, f, opts.family_stations),
        LimitComponent::DegenerateRegion(r) => degenerate_value(c, r, opts.degenerate_n),
    }
}

/// Per-component values and their minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub limit: PredictedLimit,
    /// Index of the minimizing component.
    pub argmin: usize,
    pub components: Vec<PredictedLimit>,
}

/// The predicted value of `lim λ(A)`: the minimum of `Λ` over components.
pub fn predicted_limit<F: VectorField + ?Sized>(
    components: &[LimitComponent],
    c: &ScalarField,
    b: &F,
    opts: &LimitOptions,
) -> Result<Prediction, LimitsError> {
    if components.is_empty() {
        return Err(LimitsError::Invalid("no components".into()));
    }
    let values = components.iter().map(|k| component_value(k, c, b, opts)).collect::<Result<Vec<_>, _>>()?;
    let argmin = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .map(|(i, _)| i)
        .ok_or(LimitsError::AllInfinite)?;
    Ok(Prediction { limit: values[argmin].clone(), argmin, components: values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{describe, find_limit_cycle, FixedKind, HomoclinicLoop, ProbeOutcome};
    use crate::field::Builtin;

    fn stable_point(x: [f64; 2]) -> FixedPointInfo {
        FixedPointInfo {
            location: x,
            eigenvalues: [[-1.0, 0.0], [-1.0, 0.0]],
            kind: FixedKind::StableNode,
            residual: 0.0,
            probe: None,
            declared: false,
        }
    }

    fn unit_circle(c_period: f64) -> PeriodicOrbit {
        let n = 1024;
        let samples = (0..=n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        PeriodicOrbit {
            samples,
            period: c_period,
            stability: Stability::Stable,
            inner_slope: 0.5,
            outer_slope: 0.5,
            section_normal: [0.0, 1.0],
            return_residual: 0.0,
        }
    }

    #[test]
    fn fixed_point_values() {
        let c = ScalarField::parse("x1 + x2^2 + 2").unwrap();
        assert_eq!(fixed_point_value(&c, &stable_point([1.0, 0.0])).unwrap().value, 3.0);
        assert_eq!(fixed_point_value(&c, &stable_point([-1.0, 0.0])).unwrap().value, 1.0);
        let b = Builtin::Corollary { alpha: 0.1 }.field();
        let saddle = describe(&b, [0.0, 0.0]).unwrap();
        let v = fixed_point_value(&c, &saddle).unwrap();
        assert!(v.value.is_infinite() && v.case == LimitCase::Unstable);
        let mut center = stable_point([0.5, 0.0]);
        center.kind = FixedKind::Center;
        center.probe = Some(ProbeOutcome::Stable);
        assert_eq!(fixed_point_value(&c, &center).unwrap().value, 2.5);
    }

    #[test]
    fn averages_on_the_unit_circle() {
        let b = Builtin::Rotation.field();
        let o = unit_circle(std::f64::consts::TAU);
        let k = orbit_average(&ScalarField::constant(1.7), &b, &o).unwrap();
        assert!((k.value - 1.7).abs() < 1e-12);
        let sq = orbit_average(&ScalarField::parse("x1^2").unwrap(), &b, &o).unwrap();
        assert!((sq.value - 0.5).abs() < 1e-10);
        assert!((sq.diagnostics.cross_check.unwrap() - 0.5).abs() < 1e-9);
        let mut unstable = o.clone();
        unstable.stability = Stability::SemiStable;
        assert!(orbit_average(&ScalarField::constant(1.0), &b, &unstable).unwrap().value.is_infinite());
    }

    #[test]
    fn bad_orbit_is_inconsistent() {
        // a circle traversed with the wrong period is not an orbit of the rotation
        let b = Builtin::Rotation.field();
        let o = unit_circle(3.0);
        let r = orbit_average(&ScalarField::parse("x1").unwrap(), &b, &o);
        assert!(matches!(r, Err(LimitsError::Inconsistent { .. })), "{r:?}");
    }

    #[test]
    fn corollary_cycle_forms_agree() {
        let b = Builtin::Corollary { alpha: 0.5 }.field();
        let o = find_limit_cycle(&b, [1.2, 0.0], 1e-10).unwrap();
        let v = orbit_average(&ScalarField::parse("x1^2").unwrap(), &b, &o).unwrap();
        let arc = v.diagnostics.cross_check.unwrap();
        assert!((v.value - arc).abs() <= 1e-6 * v.value.abs(), "{} vs {arc}", v.value);
    }

    #[test]
    fn saddle_values() {
        let c = ScalarField::parse("x1^2 + x2 + 0.25").unwrap();
        let lp = HomoclinicLoop { samples: vec![[0.0, 0.0]], transit_time: 1.0, gap: 0.0, inside: Stability::Stable };
        let mut h = HomoclinicStructure { saddle: [0.0, 0.0], loops: vec![lp.clone(), lp.clone()], outside: Stability::Stable };
        assert_eq!(saddle_value(&c, &h).unwrap().value, 0.25);
        h.outside = Stability::Unstable;
        assert!(saddle_value(&c, &h).unwrap().value.is_infinite());
        let single = HomoclinicStructure { saddle: [0.0, 0.0], loops: vec![lp], outside: Stability::Stable };
        assert!(saddle_value(&c, &single).unwrap().value.is_infinite());
    }

    fn disk_family() -> OrbitFamily {
        OrbitFamily { center: [0.0, 0.0], direction: [1.0, 0.0], ell_max: 1.0, outer: FamilyEnd::Neumann, touches_boundary: true }
    }

    #[test]
    fn family_with_zero_potential_is_zero() {
        let b = Builtin::Rotation.field();
        let v = family_rayleigh(&ScalarField::constant(0.0), &b, &disk_family(), 65).unwrap();
        assert!(v.value.abs() < 1e-8, "{}", v.value);
        let w = coarea_weights(&b, &ScalarField::constant(0.0), &disk_family(), 65).unwrap();
        let (e, _) = reduced_eigen(&w, FamilyEnd::Neumann).unwrap();
        assert!(e.u.iter().all(|u| (u - 1.0).abs() < 1e-8));
    }

    #[test]
    fn offset_family_value() {
        let b = Builtin::Prop12 { alpha: 0.25 }.field();
        let fam = OrbitFamily { center: [0.0, -1.0 / 3.0], ell_max: 2.0 / 3.0, ..disk_family() };
        let v = family_rayleigh(&ScalarField::parse("x2").unwrap(), &b, &fam, 65).unwrap();
        assert!((v.value + 1.0 / 3.0).abs() < 1e-8, "{}", v.value);
    }

    #[test]
    fn dirichlet_outer_end_raises_the_value() {
        let b = Builtin::Rotation.field();
        let c = ScalarField::constant(0.0);
        let fam = OrbitFamily { outer: FamilyEnd::Dirichlet, ..disk_family() };
        // first zero of J0, squared
        let j0 = 2.404_825_557_695_773_f64;
        let v = family_rayleigh(&c, &b, &fam, 257).unwrap();
        assert!((v.value - j0 * j0).abs() < 1e-2 * j0 * j0, "{}", v.value);
    }

    #[test]
    fn minimum_over_components() {
        let c = ScalarField::parse("x1 + x2^2 + 2").unwrap();
        let b = Builtin::Corollary { alpha: -0.25 }.field();
        let saddle = describe(&b, [0.0, 0.0]).unwrap();
        let ks = vec![
            LimitComponent::FixedPt(saddle.clone()),
            LimitComponent::FixedPt(stable_point([1.0, 0.0])),
            LimitComponent::FixedPt(stable_point([-1.0, 0.0])),
        ];
        let p = predicted_limit(&ks, &c, &b, &LimitOptions::default()).unwrap();
        assert_eq!((p.limit.value, p.argmin), (1.0, 2));
        let five = predicted_limit(
            &[LimitComponent::FixedPt(stable_point([0.0, 0.0]))],
            &ScalarField::constant(5.0),
            &b,
            &LimitOptions::default(),
        )
        .unwrap();
        assert_eq!(five.limit.value, 5.0);
        let none = predicted_limit(&[LimitComponent::FixedPt(saddle)], &c, &b, &LimitOptions::default());
        assert_eq!(none, Err(LimitsError::AllInfinite));
    }

    #[test]
    fn degenerate_neumann_is_the_constant() {
        let region = DegenerateRegion {
            domain: crate::geometry::Domain::disk([0.0, 0.0], 0.3).unwrap(),
            label: "core".into(),
            bc: BoundarySpec::AllNeumann,
        };
        let v = degenerate_value(&ScalarField::constant(2.0), &region, 48).unwrap();
        assert!((v.value - 2.0).abs() < 1e-8 && v.case == LimitCase::DegenerateN);
    }
}
