//! Principal eigenpair of a nonsymmetric sparse Z-matrix: a 1D
//! convection-diffusion stencil with a potential well.

use driftlimit::sparse::{principal_eigenpair, CsrMatrix, EigenOptions, Precond};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 400;
    let h = 1.0 / n as f64;
    let drift = 4.0;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        let mut row = Vec::new();
        let mut diag = 10.0 * (x - 0.3).powi(2);
        if i > 0 {
            row.push((i - 1, -1.0 / (h * h)));
            diag += 1.0 / (h * h);
        }
        if i + 1 < n {
            row.push((i + 1, -1.0 / (h * h) - drift / h));
            diag += 1.0 / (h * h) + drift / h;
        }
        row.push((i, diag));
        rows.push(row);
    }
    let l = CsrMatrix::from_rows(rows)?;
    for precond in [Precond::Jacobi, Precond::Ilu0] {
        let opts = EigenOptions { precond, ..EigenOptions::refined() };
        let e = principal_eigenpair(&l, &opts)?;
        println!(
            "{precond:?}: lambda = {:.8} in [{:.8}, {:.8}], residual {:.1e}, {} iterations",
            e.lambda,
            e.lower_bound,
            e.upper_bound,
            e.residual_norm,
            e.iterations
        );
    }
    Ok(())
}
