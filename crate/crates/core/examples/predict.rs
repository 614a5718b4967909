//! Classify the limit set of the double-well family for several levels and
//! print the predicted large-drift limit of the principal eigenvalue.

use driftlimit::dynamics::{assemble_components, ComponentOptions};
use driftlimit::expr::Expr;
use driftlimit::field::{Builtin, ScalarField, DOUBLE_WELL};
use driftlimit::geometry::{Domain, Rect};
use driftlimit::limits::{predicted_limit, LimitOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Domain::sublevel(Expr::parse(DOUBLE_WELL)?, 1.0, Rect::new([-1.85, -1.62], [1.85, 1.62]))?;
    let cases = [(0.5, "x1^2"), (0.0, "x1^2 + x2"), (-0.1, "x1^2 + 0.3*x1"), (-0.25, "x1 + x2^2 + 2")];
    for (alpha, c) in cases {
        let b = Builtin::Corollary { alpha }.field();
        let comps = assemble_components(&b, &domain, &ComponentOptions::default())?;
        let c = ScalarField::parse(c)?;
        let p = predicted_limit(&comps.components, &c, &b, &LimitOptions::default())?;
        println!("alpha = {alpha:+.2}");
        for (k, v) in comps.components.iter().zip(&p.components) {
            println!("  {:<20} {:>12.6} {:?}", k.name(), v.value, v.case);
        }
        println!("  predicted {:.6} from {}", p.limit.value, comps.components[p.argmin].name());
    }
    Ok(())
}
