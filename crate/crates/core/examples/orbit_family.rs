//! Reduce the rigid rotation on the unit disk to a 1D problem across its
//! family of circles and compare with the 2D operator at large drift.

use driftlimit::dynamics::{assemble_components, ComponentOptions, LimitComponent};
use driftlimit::field::{Builtin, ScalarField};
use driftlimit::geometry::{Domain, Grid};
use driftlimit::limits::{coarea_weights, family_rayleigh};
use driftlimit::pde::{principal_eigenvalue, BoundarySpec, Scheme};
use driftlimit::sparse::{EigenOptions, Precond};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = Builtin::Rotation.field();
    let disk = Domain::disk([0.0, 0.0], 1.0)?;
    let comps = assemble_components(&b, &disk, &ComponentOptions::default())?;
    let fam = comps
        .components
        .iter()
        .find_map(|k| if let LimitComponent::ClosedOrbitFamily(f) = k { Some(f.clone()) } else { None })
        .ok_or("no family found")?;
    let c = ScalarField::parse("x1^2")?;

    let w = coarea_weights(&b, &c, &fam, 17)?;
    println!("{:>8} {:>10} {:>10} {:>10}", "ell", "kappa", "mu", "gamma");
    for k in (0..w.len()).step_by(2) {
        println!("{:>8.4} {:>10.5} {:>10.5} {:>10.5}", w.ell[k], w.kappa[k], w.mu[k], w.gamma[k]);
    }
    let reduced = family_rayleigh(&c, &b, &fam, 129)?;
    println!("reduced eigenvalue {:.8}", reduced.value);

    let grid = Grid::build(&disk, 97)?;
    let opts = EigenOptions { precond: Precond::Ilu0, ..EigenOptions::refined() };
    for a in [10.0, 100.0, 1000.0] {
        let e = principal_eigenvalue(&grid, &b, a, &c, &BoundarySpec::AllNeumann, Scheme::default(), &opts)?;
        println!("A = {a:>6}: lambda = {:.6}", e.eigen.lambda);
    }
    Ok(())
}
