//! Match the Robin coefficient on one homoclinic loop of the double-well
//! field so the eigenfunction takes equal values at both ends.

use driftlimit::dynamics::{describe, detect_homoclinic};
use driftlimit::field::{Builtin, ScalarField};
use driftlimit::pde::robin_match;
use driftlimit::Point;

/// `n` points equispaced in arc length along a polyline, and its length.
fn resample(pts: &[Point], n: usize) -> (Vec<Point>, f64) {
    let mut s = vec![0.0];
    for w in pts.windows(2) {
        s.push(s[s.len() - 1] + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = s[s.len() - 1];
    let mut k = 0;
    let nodes = (0..n)
        .map(|i| {
            let target = total * i as f64 / (n - 1) as f64;
            while k + 2 < s.len() && s[k + 1] < target {
                k += 1;
            }
            let t = ((target - s[k]) / (s[k + 1] - s[k]).max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
            [pts[k][0] + t * (pts[k + 1][0] - pts[k][0]), pts[k][1] + t * (pts[k + 1][1] - pts[k][1])]
        })
        .collect();
    (nodes, total)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = Builtin::Corollary { alpha: 0.0 }.field();
    let saddle = describe(&b, [0.0, 0.0])?;
    let h = detect_homoclinic(&b, &saddle, 1e-4)?;
    let right = h.loops.iter().find(|l| l.samples.iter().any(|p| p[0] > 1.0)).ok_or("no right loop")?;
    let (nodes, len) = resample(&right.samples, 1600);
    let c = ScalarField::parse("x1^2 + x2^2")?;
    let speed: Vec<f64> = nodes.iter().map(|p| b.eval(*p).map(|v| v[0].hypot(v[1]))).collect::<Result<_, _>>()?;
    let cv: Vec<f64> = nodes.iter().map(|p| c.eval(*p)).collect::<Result<_, _>>()?;
    println!("loop length {len:.6}");
    for a in [20.0, 40.0, 80.0] {
        let m = robin_match(a, &speed, &cv, len, 0.1)?;
        println!("A = {a:>4}: alpha = {:.6}, lambda = {:.6}, mismatch {:.1e}", m.alpha, m.lambda, m.mismatch);
    }
    Ok(())
}
