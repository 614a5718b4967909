//! Detect the two homoclinic loops of the double-well field at level 0 and
//! report the transit times and attraction of each.

use driftlimit::dynamics::{describe, detect_homoclinic};
use driftlimit::field::Builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = Builtin::Corollary { alpha: 0.0 }.field();
    let saddle = describe(&b, [0.0, 0.0])?;
    println!("saddle eigenvalues {:?}", saddle.eigenvalues);
    let h = detect_homoclinic(&b, &saddle, 1e-4)?;
    for (k, lp) in h.loops.iter().enumerate() {
        let far = lp.samples.iter().fold(0.0f64, |m, p| m.max(p[0].abs()));
        println!(
            "loop {k}: reaches |x1| = {far:.4}, transit time {:.3}, return gap {:.2e}, inside {:?}",
            lp.transit_time, lp.gap, lp.inside
        );
    }
    println!("outside {:?}, stable union: {}", h.outside, h.is_stable());
    Ok(())
}
