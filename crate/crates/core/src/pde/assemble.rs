use serde::{Deserialize, Serialize};

use super::PdeError;
use crate::field::{PlanarField, ScalarField};
use crate::geometry::{BoundaryFace, Grid, Side};
use crate::sparse::{principal_eigenpair, CsrMatrix, EigenOptions, EigenResult};
use crate::Point;

/// Two-point flux discretization of the drift term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Scharfetter–Gummel weights, exact for locally constant drift.
    #[default]
    ExponentialFitting,
    /// First-order donor cell.
    Upwind,
}

/// Angular sector `[from, to]` in radians, measured counterclockwise around a center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub from: f64,
    pub to: f64,
}

impl Sector {
    pub fn contains(&self, angle: f64) -> bool {
        let tau = std::f64::consts::TAU;
        let span = (self.to - self.from).rem_euclid(tau);
        let rel = (angle - self.from).rem_euclid(tau);
        if (self.to - self.from).abs() >= tau {
            return true;
        }
        rel <= span
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    #[default]
    AllNeumann,
    AllDirichlet,
    /// Dirichlet on faces whose midpoint angle about `center` falls in one of
    /// `dirichlet`, Neumann elsewhere.
    Mixed { center: Point, dirichlet: Vec<Sector> },
}

impl BoundarySpec {
    pub fn is_dirichlet(&self, face: &BoundaryFace) -> bool {
        match self {
            BoundarySpec::AllNeumann => false,
            BoundarySpec::AllDirichlet => true,
            BoundarySpec::Mixed { center, dirichlet } => {
                let angle = (face.midpoint[1] - center[1]).atan2(face.midpoint[0] - center[0]);
                dirichlet.iter().any(|s| s.contains(angle))
            }
        }
    }
}

/// Bernoulli function `x / (e^x - 1)`, with its series near zero.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - 0.5 * x + x * x / 12.0
    } else if x > 700.0 {
        x * (-x).exp()
    } else {
        x / x.exp_m1()
    }
}

/// Coupling weight from a cell to its neighbor across a face, for face
/// Péclet number `p = A (b . n) h` with `n` pointing toward the neighbor.
fn face_weight(scheme: Scheme, p: f64) -> f64 {
    match scheme {
        Scheme::ExponentialFitting => bernoulli(-p),
        Scheme::Upwind => 1.0 + p.max(0.0),
    }
}

/// Assembled operator `-Δ - A b·∇ + c` on a grid.
#[derive(Debug, Clone)]
pub struct Discretization<'g> {
    pub grid: &'g Grid,
    pub matrix: CsrMatrix,
    pub drift_rate: f64,
    pub scheme: Scheme,
}

/// Assemble the cell-centered finite-volume matrix.
///
/// Every interior face contributes `w / h^2 (u_P - u_Q)` to row `P`, with
/// `w` from [`face_weight`], so off-diagonals are nonpositive and row sums
/// equal `c`. Dirichlet faces add `2 w / h^2` to the diagonal (ghost value 0
/// at half a cell); Neumann faces add nothing.
pub fn assemble<'g>(
    grid: &'g Grid,
    b: &PlanarField,
    drift_rate: f64,
    c: &ScalarField,
    bc: &BoundarySpec,
    scheme: Scheme,
) -> Result<Discretization<'g>, PdeError> {
    if !drift_rate.is_finite() || drift_rate < 0.0 {
        return Err(PdeError::InvalidDriftRate(drift_rate));
    }
    let n = grid.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(5); n];
    let mut diag = vec![0.0; n];
    for u in 0..n {
        let (i, j) = grid.coords(u);
        let cu = grid.center(u);
        for side in [Side::East, Side::North] {
            let Some(v) = grid.neighbor(i, j, side) else { continue };
            let h = grid.spacing(side);
            let nrm = side.normal();
            let mid = [cu[0] + 0.5 * grid.h1 * nrm[0], cu[1] + 0.5 * grid.h2 * nrm[1]];
            let bf = b.eval(mid)?;
            let p = drift_rate * (bf[0] * nrm[0] + bf[1] * nrm[1]) * h;
            let w_uv = face_weight(scheme, p) / (h * h);
            let w_vu = face_weight(scheme, -p) / (h * h);
            rows[u].push((v, -w_uv));
            diag[u] += w_uv;
            rows[v].push((u, -w_vu));
            diag[v] += w_vu;
        }
        diag[u] += c.eval(cu)?;
    }
    for face in grid.boundary_faces() {
        if !bc.is_dirichlet(face) {
            continue;
        }
        let h = grid.spacing(face.side);
        let nrm = face.side.normal();
        let bf = b.eval(face.midpoint)?;
        let p = drift_rate * (bf[0] * nrm[0] + bf[1] * nrm[1]) * 0.5 * h;
        diag[face.cell] += face_weight(scheme, p) / (0.5 * h * h);
    }
    for (u, row) in rows.iter_mut().enumerate() {
        row.push((u, diag[u]));
    }
    let matrix = CsrMatrix::from_rows(rows)?;
    if let Some((row, col, value)) = matrix.z_violation() {
        return Err(PdeError::NotZMatrix { row, col, value });
    }
    Ok(Discretization { grid, matrix, drift_rate, scheme })
}

/// Principal eigenpair of one assembled problem plus its run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeEigen {
    pub drift_rate: f64,
    pub cells: usize,
    pub grid_n: usize,
    pub scheme: Scheme,
    pub eigen: EigenResult,
}

pub fn principal_eigenvalue(
    grid: &Grid,
    b: &PlanarField,
    drift_rate: f64,
    c: &ScalarField,
    bc: &BoundarySpec,
    scheme: Scheme,
    opts: &EigenOptions,
) -> Result<PdeEigen, PdeError> {
    let disc = assemble(grid, b, drift_rate, c, bc, scheme)?;
    let eigen = principal_eigenpair(&disc.matrix, opts)?;
    Ok(PdeEigen { drift_rate, cells: grid.len(), grid_n: grid.n1, scheme, eigen })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn bernoulli_branches_agree() {
        for x in [-1e-4, -9.9e-5, 1e-5, 9.99e-5, 1.0001e-4] {
            let direct = x / f64::exp_m1(x);
            assert!((bernoulli(x) - direct).abs() < 1e-12, "{x}");
        }
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(-800.0) - 800.0).abs() < 1e-9);
        assert!(bernoulli(800.0) >= 0.0);
        // B(-p) - B(p) = p
        for p in [0.3, 5.0, 40.0] {
            assert!((bernoulli(-p) - bernoulli(p) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_rows_sum_to_potential() {
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let g = Grid::build(&d, 24).unwrap();
        let b = PlanarField::parse("-x2 + x1", "x1*x2 - 1").unwrap();
        for scheme in [Scheme::ExponentialFitting, Scheme::Upwind] {
            let zero = assemble(&g, &PlanarField::zero(), 0.0, &ScalarField::constant(0.0), &BoundarySpec::AllNeumann, scheme)
                .unwrap();
            assert!(zero.matrix.row_sums().iter().all(|s| s.abs() < 1e-9));
            let c = ScalarField::parse("x1^2").unwrap();
            let disc = assemble(&g, &b, 37.0, &c, &BoundarySpec::AllNeumann, scheme).unwrap();
            assert!(disc.matrix.is_z_matrix());
            for (u, s) in disc.matrix.row_sums().iter().enumerate() {
                let cu = g.center(u)[0].powi(2);
                assert!((s - cu).abs() < 1e-8 * disc.matrix.get(u, u).max(1.0));
            }
        }
    }

    #[test]
    fn sector_wraps() {
        let s = Sector { from: 3.0, to: -3.0 };
        assert!(s.contains(std::f64::consts::PI));
        assert!(!s.contains(0.0));
        let t = Sector { from: -0.5, to: 0.5 };
        assert!(t.contains(0.0) && !t.contains(1.0));
    }
}
