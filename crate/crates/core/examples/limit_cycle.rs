//! Locate the Van der Pol limit cycle, its period and stability, and the
//! time average of a potential over it in both quadrature forms.

use driftlimit::dynamics::{describe, find_limit_cycle};
use driftlimit::field::{PlanarField, ScalarField};
use driftlimit::limits::orbit_average;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = PlanarField::parse("x2", "(1 - x1^2)*x2 - x1")?;
    let origin = describe(&b, [0.0, 0.0])?;
    println!("origin: {:?}, eigenvalues {:?}", origin.kind, origin.eigenvalues);

    let cycle = find_limit_cycle(&b, [0.5, 0.0], 1e-10)?;
    println!("period {:.10}, {:?}, return-map slopes {:.3e} / {:.3e}", cycle.period, cycle.stability, cycle.inner_slope, cycle.outer_slope);

    let c = ScalarField::parse("x1^2")?;
    let avg = orbit_average(&c, &b, &cycle)?;
    println!("time average of x1^2: {:.10}", avg.value);
    if let Some(arc) = avg.diagnostics.cross_check {
        println!("arc-length form:      {arc:.10}");
    }
    Ok(())
}
