//! Assembly of the limit set into connected components.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cycle::{find_limit_cycle_with, hausdorff, CycleOptions, PeriodicOrbit, Stability};
use super::fixed::{find_fixed_points, FixedKind, FixedPointInfo, ProbeOutcome};
use super::homoclinic::{detect_homoclinic_with, HomoclinicOptions, HomoclinicStructure};
use super::integrate::{Direction, IntegrateOptions};
use super::section::{next_crossing, Return, ReturnOptions, Section};
use super::DynamicsError;
use crate::field::{PlanarField, VectorField};
use crate::geometry::{check_inflow, Domain, InflowReport};
use crate::pde::BoundarySpec;
use crate::Point;

/// Condition for the reduced problem at an end of a closed-orbit family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyEnd {
    Neumann,
    Dirichlet,
}

/// Periodic orbits filling a region around an interior center, one through
/// each point `center + ell * direction` with `0 < ell < ell_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFamily {
    pub center: Point,
    /// Unit vector of the transversal ray.
    pub direction: Point,
    pub ell_max: f64,
    /// Condition at `ell_max`; the center end is always natural.
    pub outer: FamilyEnd,
    /// The outermost orbit reaches the domain boundary.
    pub touches_boundary: bool,
}

impl OrbitFamily {
    pub fn point(&self, ell: f64) -> Point {
        [self.center[0] + ell * self.direction[0], self.center[1] + ell * self.direction[1]]
    }
}

/// Region where `b` vanishes identically, with the boundary condition of its
/// limiting problem. Always declared, never detected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateRegion {
    #[serde(skip)]
    pub domain: Domain,
    pub label: String,
    pub bc: BoundarySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum LimitComponent {
    FixedPt(FixedPointInfo),
    Cycle(PeriodicOrbit),
    HomoclinicUnion(HomoclinicStructure),
    SingleHomoclinic(HomoclinicStructure),
    ClosedOrbitFamily(OrbitFamily),
    DegenerateRegion(DegenerateRegion),
}

impl LimitComponent {
    pub fn name(&self) -> &'static str {
        match self {
            LimitComponent::FixedPt(_) => "fixed_pt",
            LimitComponent::Cycle(_) => "cycle",
            LimitComponent::HomoclinicUnion(_) => "homoclinic_union",
            LimitComponent::SingleHomoclinic(_) => "single_homoclinic",
            LimitComponent::ClosedOrbitFamily(_) => "closed_orbit_family",
            LimitComponent::DegenerateRegion(_) => "degenerate_region",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComponentOptions {
    /// Lattice size for the fixed-point search.
    pub grid_seeds: usize,
    /// Lattice size for the omega-limit probes.
    pub probe_lattice: usize,
    pub cycle: CycleOptions,
    /// Homoclinic reconnection tolerance relative to the domain diameter.
    pub homoclinic_rel_tol: f64,
    pub degenerate: Vec<DegenerateRegion>,
    /// Attracting points on the boundary, known from the field's definition.
    pub boundary_attractors: Vec<Point>,
}

impl Default for ComponentOptions {
    fn default() -> Self {
        ComponentOptions {
            grid_seeds: 48,
            probe_lattice: 8,
            cycle: CycleOptions { transient: 60.0, samples: 1024, ..Default::default() },
            homoclinic_rel_tol: 1e-4,
            degenerate: Vec::new(),
            boundary_attractors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Components {
    pub components: Vec<LimitComponent>,
    pub inflow: InflowReport,
    pub warnings: Vec<String>,
    /// Fixed-point seeds and probes that were discarded, with reasons.
    pub diagnostics: Vec<String>,
}

/// The flow of `-b`.
struct Reversed<'a, F: ?Sized>(&'a F);

impl<F: VectorField + ?Sized> VectorField for Reversed<'_, F> {
    fn eval(&self, p: Point) -> Result<Point, crate::expr::ExprError> {
        let v = self.0.eval(p)?;
        Ok([-v[0], -v[1]])
    }

    fn jacobian(&self, p: Point) -> Result<[[f64; 2]; 2], crate::expr::ExprError> {
        let j = self.0.jacobian(p)?;
        Ok([[-j[0][0], -j[0][1]], [-j[1][0], -j[1][1]]])
    }
}

/// A cycle of `-b` seen as a cycle of `b`: same point set, traversed
/// backwards, with inverted return-map slopes.
fn reverse_orbit(mut o: PeriodicOrbit) -> PeriodicOrbit {
    o.samples.reverse();
    o.inner_slope = 1.0 / o.inner_slope;
    o.outer_slope = 1.0 / o.outer_slope;
    o.section_normal = [-o.section_normal[0], -o.section_normal[1]];
    o.stability = match o.stability {
        Stability::Stable => Stability::Unstable,
        Stability::Unstable => Stability::Stable,
        Stability::SemiStable => Stability::SemiStable,
    };
    o
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from `from` along `dir` to the domain boundary.
fn ray_exit(d: &Domain, from: Point, dir: Point) -> f64 {
    let step = 1e-3 * d.diameter();
    let at = |l: f64| [from[0] + l * dir[0], from[1] + l * dir[1]];
    let mut hi = step;
    while d.contains(at(hi)) {
        hi += step;
    }
    let mut lo = hi - step;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if d.contains(at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RayReturn {
    /// Came back to the ray at this distance from the center.
    Back(f64),
    Exited,
    Lost,
}

fn ray_return<F, I>(b: &F, center: Point, dir: Point, ell: f64, inside: &I) -> Result<RayReturn, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let p = [center[0] + ell * dir[0], center[1] + ell * dir[1]];
    let v = b.eval(p)?;
    // section normal to the ray, oriented with the flow
    let perp = [-dir[1], dir[0]];
    let s = v[0] * perp[0] + v[1] * perp[1];
    if s == 0.0 {
        return Ok(RayReturn::Lost);
    }
    let sec = Section::new(center, [s.signum() * perp[0], s.signum() * perp[1]]);
    let speed = v[0].hypot(v[1]);
    let turn = std::f64::consts::TAU * ell / speed;
    let opts = ReturnOptions {
        integrate: IntegrateOptions { tol: 1e-12, ..Default::default() },
        min_time: 0.05 * turn,
        max_time: 200.0 * turn,
        window: f64::INFINITY,
    };
    let along = |q: Point| (q[0] - center[0]) * dir[0] + (q[1] - center[1]) * dir[1];
    let mut x = p;
    // skip crossings of the opposite half-line
    for _ in 0..2 {
        match next_crossing(b, x, Direction::Forward, &sec, &opts, inside)? {
            Return::Crossed(c) if along(c.point) > 0.0 => return Ok(RayReturn::Back(along(c.point))),
            Return::Crossed(c) => x = c.point,
            Return::Exited { .. } => return Ok(RayReturn::Exited),
            Return::Timeout { .. } => return Ok(RayReturn::Lost),
        }
    }
    Ok(RayReturn::Lost)
}

/// The family of closed orbits around a neutral center, or `None` when the
/// orbits near it do not close.
fn orbit_family<F, I>(b: &F, d: &Domain, center: Point, inside: &I) -> Result<Option<OrbitFamily>, DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let dir = [1.0, 0.0];
    let reach = ray_exit(d, center, dir);
    let closes = |ell: f64| -> Result<(bool, RayReturn), DynamicsError> {
        let r = ray_return(b, center, dir, ell, inside)?;
        Ok((matches!(r, RayReturn::Back(e) if (e - ell).abs() <= 1e-6 * ell), r))
    };
    let mut lo = 1e-3 * reach;
    if !closes(lo)?.0 {
        return Ok(None);
    }
    let mut hi = reach * (1.0 - 1e-9);
    let (closed_at_hi, _) = closes(hi)?;
    let (ell_max, beyond) = if closed_at_hi {
        (hi, RayReturn::Exited)
    } else {
        let mut beyond = RayReturn::Lost;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let (ok, r) = closes(mid)?;
            if ok {
                lo = mid;
            } else {
                hi = mid;
                beyond = r;
            }
        }
        (lo, beyond)
    };
    let (touches, outer) = match beyond {
        RayReturn::Exited => (true, FamilyEnd::Neumann),
        RayReturn::Back(e) if e < ell_max => (false, FamilyEnd::Neumann),
        _ => (false, FamilyEnd::Dirichlet),
    };
    Ok(Some(OrbitFamily { center, direction: dir, ell_max, outer, touches_boundary: touches }))
}

enum Probe {
    Cycle(PeriodicOrbit),
    Nothing(String),
}

fn probe_seed<F, I>(b: &F, seed: Point, opts: &CycleOptions, inside: &I) -> Result<[Probe; 2], DynamicsError>
where
    F: VectorField + ?Sized,
    I: Fn(Point) -> bool,
{
    let mut out = [Probe::Nothing(String::new()), Probe::Nothing(String::new())];
    let rev = Reversed(b);
    for (k, slot) in out.iter_mut().enumerate() {
        let found = if k == 0 {
            find_limit_cycle_with(b, seed, opts, inside)
        } else {
            find_limit_cycle_with(&rev, seed, opts, inside).map(reverse_orbit)
        };
        *slot = match found {
            Ok(o) => Probe::Cycle(o),
            Err(
                e @ (DynamicsError::NoRecurrence(_)
                | DynamicsError::NotIsolated { .. }
                | DynamicsError::BlowUp { .. }
                | DynamicsError::StepUnderflow { .. }
                | DynamicsError::StepLimit { .. }),
            ) => Probe::Nothing(e.to_string()),
            Err(e) => return Err(e),
        };
    }
    Ok(out)
}

/// Classify the limit set of `x' = b(x)` in `d` into components.
///
/// Fixed points come from a lattice search; each saddle is checked for
/// homoclinic loops; cycles are found by forward and backward probes from a
/// seed lattice; neutral centers seed closed-orbit families. Degenerate
/// regions and boundary attractors are taken from `opts`.
pub fn assemble_components(b: &PlanarField, d: &Domain, opts: &ComponentOptions) -> Result<Components, DynamicsError> {
    let diam = d.diameter();
    // zeros found on the rim of a declared region belong to it
    let rim = 1e-4 * diam;
    let in_degenerate = |p: Point| {
        opts.degenerate.iter().any(|r| {
            [[0.0, 0.0], [rim, 0.0], [-rim, 0.0], [0.0, rim], [0.0, -rim]]
                .iter()
                .any(|o| r.domain.contains([p[0] + o[0], p[1] + o[1]]))
        })
    };
    let inside = |p: Point| d.contains(p);
    let mut warnings = Vec::new();
    let inflow = check_inflow(d, b, 400)?;
    if !inflow.satisfied {
        warnings.push(format!(
            "inflow condition fails: max b.n = {:.3e} at ({:.4}, {:.4})",
            inflow.max_flux, inflow.worst_point[0], inflow.worst_point[1]
        ));
    }

    let search = find_fixed_points(b, d, opts.grid_seeds)?;
    let mut diagnostics = search.dropped;
    let near_attractor = |p: Point| opts.boundary_attractors.iter().any(|a| dist(*a, p) <= 1e-6 * diam);
    let fixed: Vec<FixedPointInfo> =
        search.points.into_iter().filter(|f| !in_degenerate(f.location) && !near_attractor(f.location)).collect();

    let mut components = Vec::new();
    let saddles: Vec<Point> = fixed.iter().filter(|f| f.kind == FixedKind::Saddle).map(|f| f.location).collect();
    let mut homoclinic = Vec::new();
    for f in &fixed {
        if f.kind == FixedKind::Saddle {
            let hopts = HomoclinicOptions {
                other_saddles: saddles.iter().copied().filter(|s| *s != f.location).collect(),
                ..HomoclinicOptions::with_tol(opts.homoclinic_rel_tol * diam)
            };
            match detect_homoclinic_with(b, f, &hopts, inside) {
                Ok(h) => {
                    homoclinic.push(h);
                    continue;
                }
                Err(DynamicsError::NotFound(why)) => diagnostics.push(format!("saddle {:?}: {why}", f.location)),
                Err(e) => return Err(e),
            }
        }
        if f.probe != Some(ProbeOutcome::Neutral) {
            components.push(LimitComponent::FixedPt(f.clone()));
        }
    }

    let mut families = Vec::new();
    for f in fixed.iter().filter(|f| f.probe == Some(ProbeOutcome::Neutral)) {
        match orbit_family(b, d, f.location, &inside)? {
            Some(fam) => families.push(fam),
            None => {
                warnings.push(format!("center {:?} is neutral but nearby orbits do not close", f.location));
                components.push(LimitComponent::FixedPt(f.clone()));
            }
        }
    }

    // omega- and alpha-limit probes
    let bb = d.bounding_box();
    let m = opts.probe_lattice.max(2);
    let keep_off = 2e-2 * diam;
    let seeds: Vec<Point> = (0..m * m)
        .map(|k| {
            let (i, j) = (k % m, k / m);
            [bb.lo[0] + (i as f64 + 0.5) * bb.width() / m as f64, bb.lo[1] + (j as f64 + 0.5) * bb.height() / m as f64]
        })
        .filter(|&p| {
            inside(p)
                && !in_degenerate(p)
                && fixed.iter().all(|f| dist(f.location, p) > keep_off)
                && families.iter().all(|fam: &OrbitFamily| dist(fam.center, p) >= fam.ell_max)
        })
        .collect();
    let results: Vec<Result<[Probe; 2], DynamicsError>> =
        seeds.par_iter().map(|&s| probe_seed(b, s, &opts.cycle, &inside)).collect();
    let mut cycles: Vec<PeriodicOrbit> = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        for probe in r? {
            match probe {
                Probe::Cycle(o) => {
                    if saddles.iter().any(|s| o.distance_to(*s) < 1e-2 * diam) {
                        diagnostics.push(format!("probe from {seed:?}: orbit through a saddle discarded"));
                    } else if o.size() < 1e-3 * diam {
                        diagnostics.push(format!("probe from {seed:?}: orbit of size {:.2e} discarded", o.size()));
                    } else if cycles.iter().all(|c| hausdorff(&c.samples, &o.samples) > 1e-2 * c.size()) {
                        cycles.push(o);
                    }
                }
                Probe::Nothing(why) => diagnostics.push(format!("probe from {seed:?}: {why}")),
            }
        }
    }
    cycles.sort_by(|a, b| a.samples[0][0].total_cmp(&b.samples[0][0]).then(a.samples[0][1].total_cmp(&b.samples[0][1])));

    for h in homoclinic {
        if h.loops.len() == 2 {
            components.push(LimitComponent::HomoclinicUnion(h));
        } else {
            components.push(LimitComponent::SingleHomoclinic(h));
        }
    }
    components.extend(cycles.into_iter().map(LimitComponent::Cycle));
    components.extend(families.into_iter().map(LimitComponent::ClosedOrbitFamily));
    for &a in &opts.boundary_attractors {
        let (eigenvalues, _) = super::fixed::classify_jacobian(&b.jacobian(a)?);
        let v = b.eval(a)?;
        components.push(LimitComponent::FixedPt(FixedPointInfo {
            location: a,
            eigenvalues,
            kind: FixedKind::Degenerate,
            residual: v[0].hypot(v[1]),
            probe: Some(ProbeOutcome::Stable),
            declared: true,
        }));
    }
    components.extend(opts.degenerate.iter().cloned().map(LimitComponent::DegenerateRegion));
    if components.is_empty() {
        return Err(DynamicsError::NotFound("no limit set component found".into()));
    }
    Ok(Components { components, inflow, warnings, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Builtin, DOUBLE_WELL};
    use crate::geometry::Rect;

    fn corollary_domain() -> Domain {
        Domain::sublevel(DOUBLE_WELL.parse().unwrap(), 1.0, Rect::new([-1.85, -1.62], [1.85, 1.62])).unwrap()
    }

    fn kinds(c: &Components) -> Vec<&'static str> {
        c.components.iter().map(|k| k.name()).collect()
    }

    #[test]
    fn corollary_half_has_one_stable_cycle() {
        let b = Builtin::Corollary { alpha: 0.5 }.field();
        let h: crate::expr::Expr = DOUBLE_WELL.parse().unwrap();
        let c = assemble_components(&b, &corollary_domain(), &ComponentOptions::default()).unwrap();
        let cycles: Vec<&PeriodicOrbit> =
            c.components.iter().filter_map(|k| if let LimitComponent::Cycle(o) = k { Some(o) } else { None }).collect();
        assert_eq!(cycles.len(), 1, "{:?}", kinds(&c));
        assert_eq!(cycles[0].stability, Stability::Stable);
        assert!(cycles[0].samples.iter().all(|p| (h.eval(*p).unwrap() - 0.5).abs() < 1e-5));
        let fixed: Vec<&FixedPointInfo> =
            c.components.iter().filter_map(|k| if let LimitComponent::FixedPt(f) = k { Some(f) } else { None }).collect();
        assert_eq!(fixed.len(), 3);
        assert!(fixed.iter().all(|f| !f.is_stable()));
    }

    #[test]
    fn corollary_zero_has_a_stable_figure_eight() {
        let b = Builtin::Corollary { alpha: 0.0 }.field();
        let c = assemble_components(&b, &corollary_domain(), &ComponentOptions::default()).unwrap();
        let unions: Vec<&HomoclinicStructure> = c
            .components
            .iter()
            .filter_map(|k| if let LimitComponent::HomoclinicUnion(h) = k { Some(h) } else { None })
            .collect();
        assert_eq!(unions.len(), 1, "{:?}", kinds(&c));
        assert!(unions[0].is_stable());
        assert!(!c.components.iter().any(|k| matches!(k, LimitComponent::Cycle(_))), "{:?}", kinds(&c));
    }

    #[test]
    fn corollary_quarter_has_two_stable_points() {
        let b = Builtin::Corollary { alpha: -0.25 }.field();
        let c = assemble_components(&b, &corollary_domain(), &ComponentOptions::default()).unwrap();
        let stable: Vec<Point> = c
            .components
            .iter()
            .filter_map(|k| match k {
                LimitComponent::FixedPt(f) if f.is_stable() => Some(f.location),
                _ => None,
            })
            .collect();
        assert_eq!(stable.len(), 2, "{:?}", kinds(&c));
        for p in stable {
            assert!((p[0].abs() - 1.0).abs() < 1e-6 && p[1].abs() < 1e-6);
        }
        assert!(!c.components.iter().any(|k| matches!(k, LimitComponent::Cycle(_))), "{:?}", kinds(&c));
    }

    #[test]
    fn corollary_negative_tenth_has_two_cycles() {
        let b = Builtin::Corollary { alpha: -0.1 }.field();
        let c = assemble_components(&b, &corollary_domain(), &ComponentOptions::default()).unwrap();
        let cycles: Vec<&PeriodicOrbit> =
            c.components.iter().filter_map(|k| if let LimitComponent::Cycle(o) = k { Some(o) } else { None }).collect();
        assert_eq!(cycles.len(), 2, "{:?}", kinds(&c));
        assert!(cycles.iter().all(|o| o.stability == Stability::Stable));
        assert!(cycles[0].samples[0][0] < 0.0 && cycles[1].samples[0][0] > 0.0);
    }

    #[test]
    fn rotation_fills_the_disk() {
        let b = Builtin::Rotation.field();
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let c = assemble_components(&b, &d, &ComponentOptions::default()).unwrap();
        assert_eq!(kinds(&c), vec!["closed_orbit_family"]);
        let LimitComponent::ClosedOrbitFamily(f) = &c.components[0] else { unreachable!() };
        assert!((f.ell_max - 1.0).abs() < 1e-6 && f.touches_boundary && f.outer == FamilyEnd::Neumann);
    }

    #[test]
    fn prop12_quarter_family_is_the_inner_disk() {
        let b = Builtin::Prop12 { alpha: 0.25 }.field();
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let c = assemble_components(&b, &d, &ComponentOptions::default()).unwrap();
        assert!(!c.inflow.satisfied);
        let fam: Vec<&OrbitFamily> = c
            .components
            .iter()
            .filter_map(|k| if let LimitComponent::ClosedOrbitFamily(f) = k { Some(f) } else { None })
            .collect();
        assert_eq!(fam.len(), 1, "{:?}", kinds(&c));
        assert!(dist(fam[0].center, [0.0, -1.0 / 3.0]) < 1e-8);
        assert!((fam[0].ell_max - 2.0 / 3.0).abs() < 1e-4, "{}", fam[0].ell_max);
        assert_eq!(fam[0].outer, FamilyEnd::Neumann);
    }

    #[test]
    fn prop12_half_uses_the_declared_attractor() {
        let bi = Builtin::Prop12 { alpha: 0.5 };
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let opts = ComponentOptions { boundary_attractors: bi.boundary_attractor().into_iter().collect(), ..Default::default() };
        let c = assemble_components(&bi.field(), &d, &opts).unwrap();
        let stable: Vec<&FixedPointInfo> = c
            .components
            .iter()
            .filter_map(|k| match k {
                LimitComponent::FixedPt(f) if f.is_stable() => Some(f),
                _ => None,
            })
            .collect();
        assert_eq!(stable.len(), 1, "{:?}", kinds(&c));
        assert!(stable[0].declared && dist(stable[0].location, [0.0, -1.0]) < 1e-12);
    }

    #[test]
    fn reversed_orbit_inverts_slopes() {
        let o = PeriodicOrbit {
            samples: vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]],
            period: 2.0,
            stability: Stability::Stable,
            inner_slope: 0.5,
            outer_slope: 0.25,
            section_normal: [0.0, 1.0],
            return_residual: 0.0,
        };
        let r = reverse_orbit(o);
        assert_eq!(r.stability, Stability::Unstable);
        assert_eq!((r.inner_slope, r.outer_slope), (2.0, 4.0));
        assert_eq!(r.samples[0], [-1.0, 0.0]);
    }
}
