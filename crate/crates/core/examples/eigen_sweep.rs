//! Principal eigenvalue of the drift-diffusion operator for growing drift
//! rates on the double-well domain, with both flux schemes.

use driftlimit::expr::Expr;
use driftlimit::field::{Builtin, ScalarField, DOUBLE_WELL};
use driftlimit::geometry::{Domain, Grid, Rect};
use driftlimit::pde::{principal_eigenvalue, BoundarySpec, Scheme};
use driftlimit::sparse::{EigenOptions, Precond};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Domain::sublevel(Expr::parse(DOUBLE_WELL)?, 1.0, Rect::new([-1.85, -1.62], [1.85, 1.62]))?;
    let grid = Grid::build(&domain, 97)?;
    let b = Builtin::Corollary { alpha: 0.5 }.field();
    let c = ScalarField::parse("x1^2")?;
    let opts = EigenOptions { precond: Precond::Ilu0, ..EigenOptions::refined() };
    println!("{} cells", grid.len());
    for a in [0.0, 10.0, 40.0, 160.0] {
        let ef = principal_eigenvalue(&grid, &b, a, &c, &BoundarySpec::AllNeumann, Scheme::ExponentialFitting, &opts)?;
        let up = principal_eigenvalue(&grid, &b, a, &c, &BoundarySpec::AllNeumann, Scheme::Upwind, &opts)?;
        println!(
            "A = {a:>5}: fitted {:.6} (residual {:.1e}, {} iterations), upwind {:.6}",
            ef.eigen.lambda, ef.eigen.residual_norm, ef.eigen.iterations, up.eigen.lambda
        );
    }
    Ok(())
}
