//! Scalar potentials `c(x)` and planar drift fields `b(x)` built from expressions.

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, ExprError};
use crate::Point;

/// A scalar function of the plane, e.g. the potential `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Expr,
}

impl ScalarField {
    pub fn new(expr: Expr) -> Self {
        ScalarField { expr }
    }

    pub fn parse(src: &str) -> Result<Self, ExprError> {
        Ok(ScalarField::new(Expr::parse(src)?))
    }

    pub fn constant(v: f64) -> Self {
        ScalarField::new(Expr::Const(v))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, p: Point) -> Result<f64, ExprError> {
        self.expr.eval(p)
    }

    pub fn grad(&self, p: Point) -> Result<[f64; 2], ExprError> {
        self.expr.grad(p)
    }

    /// `c + shift`, used for the shift-covariance checks.
    pub fn shifted(&self, shift: f64) -> ScalarField {
        ScalarField::new(Expr::Binary(
            crate::expr::BinOp::Add,
            Box::new(self.expr.clone()),
            Box::new(Expr::Const(shift)),
        ))
    }
}

/// A vector field `b = (b1, b2)` on the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    b1: Expr,
    b2: Expr,
}

impl PlanarField {
    pub fn new(b1: Expr, b2: Expr) -> Self {
        PlanarField { b1, b2 }
    }

    pub fn parse(b1: &str, b2: &str) -> Result<Self, ExprError> {
        Ok(PlanarField::new(Expr::parse(b1)?, Expr::parse(b2)?))
    }

    pub fn components(&self) -> (&Expr, &Expr) {
        (&self.b1, &self.b2)
    }

    pub fn eval(&self, p: Point) -> Result<Point, ExprError> {
        Ok([self.b1.eval(p)?, self.b2.eval(p)?])
    }

    /// Jacobian `Db(p)` as rows `[[db1/dx1, db1/dx2], [db2/dx1, db2/dx2]]`.
    pub fn jacobian(&self, p: Point) -> Result<[[f64; 2]; 2], ExprError> {
        Ok([self.b1.grad(p)?, self.b2.grad(p)?])
    }

    /// Value and Jacobian in one pass.
    pub fn eval_with_jacobian(&self, p: Point) -> Result<(Point, [[f64; 2]; 2]), ExprError> {
        let d1 = self.b1.eval_dual(p)?;
        let d2 = self.b2.eval_dual(p)?;
        Ok(([d1.value, d2.value], [[d1.d1, d1.d2], [d2.d1, d2.d2]]))
    }

    /// `sigma * b`.
    pub fn scaled(&self, sigma: f64) -> PlanarField {
        let mul = |e: &Expr| {
            Expr::Binary(crate::expr::BinOp::Mul, Box::new(Expr::Const(sigma)), Box::new(e.clone()))
        };
        PlanarField::new(mul(&self.b1), mul(&self.b2))
    }

    /// The zero field.
    pub fn zero() -> PlanarField {
        PlanarField::new(Expr::Const(0.0), Expr::Const(0.0))
    }
}

/// Anything the orbit tools can integrate: a planar field with a Jacobian.
pub trait VectorField: Sync {
    fn eval(&self, p: Point) -> Result<Point, ExprError>;
    /// Rows `[[db1/dx1, db1/dx2], [db2/dx1, db2/dx2]]`.
    fn jacobian(&self, p: Point) -> Result<[[f64; 2]; 2], ExprError>;
}

impl VectorField for PlanarField {
    fn eval(&self, p: Point) -> Result<Point, ExprError> {
        PlanarField::eval(self, p)
    }

    fn jacobian(&self, p: Point) -> Result<[[f64; 2]; 2], ExprError> {
        PlanarField::jacobian(self, p)
    }
}

/// Double-well energy `x2^2/2 + x1^4/4 - x1^2/2` used by [`Builtin::Corollary`].
pub const DOUBLE_WELL: &str = "x2^2/2 + x1^4/4 - x1^2/2";

/// Named drift fields with closed-form definitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "lowercase")]
pub enum Builtin {
    /// Rigid rotation `(-x2, x1)`.
    Rotation,
    /// `(1-alpha)(-x2, x1) + alpha(-1, 0)` on the unit disk.
    Prop12 { alpha: f64 },
    /// Hamiltonian rotation of the double well plus relaxation toward its
    /// `alpha` level set: `J grad H - (H - alpha) grad H`.
    Corollary { alpha: f64 },
}

impl Builtin {
    pub fn field(&self) -> PlanarField {
        let (b1, b2) = match *self {
            Builtin::Rotation => ("-x2".to_string(), "x1".to_string()),
            Builtin::Prop12 { alpha } => {
                let k = 1.0 - alpha;
                (format!("-({k:?})*x2 - {alpha:?}"), format!("({k:?})*x1"))
            }
            Builtin::Corollary { alpha } => {
                let rel = format!("(({DOUBLE_WELL}) - ({alpha:?}))");
                (
                    format!("-x2 - {rel}*(x1^3 - x1)"),
                    format!("(x1^3 - x1) - {rel}*x2"),
                )
            }
        };
        PlanarField::parse(&b1, &b2).expect("builtin field expressions are well formed")
    }

    /// Boundary point that attracts the limit set when it is pushed onto the
    /// edge of the disk (`Prop12` with `alpha >= 1/2`); no zero of `b` exists
    /// inside the domain in that regime.
    pub fn boundary_attractor(&self) -> Option<Point> {
        match *self {
            Builtin::Prop12 { alpha } if (0.5..1.0).contains(&alpha) => {
                Some([-(2.0 * alpha - 1.0).sqrt() / alpha, -(1.0 - alpha) / alpha])
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corollary_jacobian_at_saddle() {
        for alpha in [0.1, 0.5, -0.2] {
            let b = Builtin::Corollary { alpha }.field();
            let j = b.jacobian([0.0, 0.0]).unwrap();
            let expect = [[-alpha, -1.0], [-1.0, alpha]];
            for r in 0..2 {
                for c in 0..2 {
                    assert!((j[r][c] - expect[r][c]).abs() < 1e-14, "{j:?}");
                }
            }
        }
    }

    #[test]
    fn corollary_energy_identity() {
        // dH/dt along b equals -(H - alpha)|grad H|^2
        let alpha = 0.3;
        let b = Builtin::Corollary { alpha }.field();
        let h = Expr::parse(DOUBLE_WELL).unwrap();
        for p in [[0.3, -0.7], [1.4, 0.2], [-0.9, 1.1]] {
            let v = b.eval(p).unwrap();
            let g = h.grad(p).unwrap();
            let lhs = v[0] * g[0] + v[1] * g[1];
            let rhs = -(h.eval(p).unwrap() - alpha) * (g[0] * g[0] + g[1] * g[1]);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn prop12_fixed_point() {
        let alpha = 0.25;
        let b = Builtin::Prop12 { alpha }.field();
        let v = b.eval([0.0, -alpha / (1.0 - alpha)]).unwrap();
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        assert_eq!(Builtin::Prop12 { alpha }.boundary_attractor(), None);
        let x = Builtin::Prop12 { alpha: 0.75 }.boundary_attractor().unwrap();
        assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-15);
        assert_eq!(Builtin::Prop12 { alpha: 0.5 }.boundary_attractor(), Some([0.0, -1.0]));
    }
}
