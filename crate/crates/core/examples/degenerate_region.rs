//! A radial inflow that vanishes on an inner disk: the limit is the Neumann
//! eigenvalue of `-Δ + c` there. Runs the configured sweep through the
//! command layer without writing files.

use driftlimit::app::{degenerate, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg: RunConfig = serde_json::from_str(
        r#"{
            "field": {
                "b1": "-x1*((x1^2 + x2^2 - 0.09) + abs(x1^2 + x2^2 - 0.09))/2",
                "b2": "-x2*((x1^2 + x2^2 - 0.09) + abs(x1^2 + x2^2 - 0.09))/2"
            },
            "domain": {"kind": "disk", "center": [0, 0], "radius": 1},
            "c": "2 + x1",
            "degenerate": [{"label": "core", "domain": {"kind": "disk", "center": [0, 0], "radius": 0.3}}],
            "a_list": [10, 40, 160],
            "n": 65,
            "gap_tol": 0.05
        }"#,
    )?;
    let r = degenerate(&cfg, None)?;
    for d in &r.degenerate {
        println!("{}: {:?} = {:.6}", d.label, d.case, d.value);
    }
    println!("predicted {:.6}", r.predicted);
    for row in &r.table {
        println!("A = {:>4}: lambda = {:?}, gap = {:?}", row.a, row.lambda, row.gap);
    }
    for v in &r.verdicts {
        println!("{:?} {}: {}", v.status, v.name, v.detail);
    }
    Ok(())
}
