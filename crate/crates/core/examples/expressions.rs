//! Parse a potential and a drift field, evaluate them and their exact
//! derivatives at a point.

use driftlimit::field::{PlanarField, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = ScalarField::parse("x1^2 + 0.3*x2 + sin(x1*x2)")?;
    let b = PlanarField::parse("-x2 + x1*(1 - x1^2 - x2^2)", "x1 + x2*(1 - x1^2 - x2^2)")?;
    let p = [0.4, -0.7];
    println!("c(p)      = {:.12}", c.eval(p)?);
    println!("grad c(p) = {:?}", c.grad(p)?);
    println!("b(p)      = {:?}", b.eval(p)?);
    println!("Db(p)     = {:?}", b.jacobian(p)?);
    match ScalarField::parse("x1 + * x2") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
