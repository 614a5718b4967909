//! Arithmetic expressions over the plane coordinates `x1`, `x2`.
//!
//! Expressions are parsed once into an immutable tree and evaluated either
//! on plain `f64` or on [`Dual`] numbers, which carry exact first partial
//! derivatives with respect to both coordinates.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          exponent must be constant
//! primary := number | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x1' | 'x2' | 'x' | 'y'
//! func    := 'sin' | 'cos' | 'exp' | 'ln' | 'sqrt' | 'abs' | 'tanh'
//! ```
//!
//! So `-x1^2` is `-(x1^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
}

/// Forward-mode dual number seeded for the two plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Dual { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Dual::new(value, 0.0, 0.0)
    }

    /// Apply a scalar function with derivative `df` at the current value.
    fn chain(self, f: f64, df: f64) -> Self {
        Dual::new(f, df * self.d1, df * self.d2)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + self.value * o.d2,
        )
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.value;
        let q = self.value * inv;
        Dual::new(q, (self.d1 - q * o.d1) * inv, (self.d2 - q * o.d2) * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.d1, -self.d2)
    }
}

/// Number types an [`Expr`] can be evaluated on.
trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn lift(v: f64) -> Self;
    fn real(self) -> f64;
    fn apply(self, f: Func) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn lift(v: f64) -> Self {
        v
    }
    fn real(self) -> f64 {
        self
    }
    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Ln => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
            Func::Tanh => self.tanh(),
        }
    }
    fn powf(self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            self.powi(p as i32)
        } else {
            self.powf(p)
        }
    }
}

impl Scalar for Dual {
    fn lift(v: f64) -> Self {
        Dual::constant(v)
    }
    fn real(self) -> f64 {
        self.value
    }
    fn apply(self, f: Func) -> Self {
        let x = self.value;
        match f {
            Func::Sin => self.chain(x.sin(), x.cos()),
            Func::Cos => self.chain(x.cos(), -x.sin()),
            Func::Exp => {
                let e = x.exp();
                self.chain(e, e)
            }
            Func::Ln => self.chain(x.ln(), 1.0 / x),
            Func::Sqrt => {
                let s = x.sqrt();
                self.chain(s, 0.5 / s)
            }
            Func::Abs => self.chain(x.abs(), if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 }),
            Func::Tanh => {
                let t = x.tanh();
                self.chain(t, 1.0 - t * t)
            }
        }
    }
    fn powf(self, p: f64) -> Self {
        let x = self.value;
        if p == 0.0 {
            return Dual::constant(1.0);
        }
        let (f, df) = if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            let k = p as i32;
            (x.powi(k), p * x.powi(k - 1))
        } else {
            (x.powf(p), p * x.powf(p - 1.0))
        };
        self.chain(f, df)
    }
}

impl Expr {
    /// Parse an expression; see the module docs for the grammar.
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        Parser::new(src).parse_all()
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    /// True when the expression contains no variables.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn eval(&self, p: Point) -> Result<f64, ExprError> {
        let v = self.walk::<f64>(&[p[0], p[1]])?;
        if v.is_nan() {
            return Err(ExprError::Domain(format!("NaN result at ({}, {})", p[0], p[1])));
        }
        Ok(v)
    }

    /// Value and gradient at `p` by forward-mode differentiation.
    pub fn eval_dual(&self, p: Point) -> Result<Dual, ExprError> {
        let d = self.walk(&[Dual::new(p[0], 1.0, 0.0), Dual::new(p[1], 0.0, 1.0)])?;
        if d.value.is_nan() || d.d1.is_nan() || d.d2.is_nan() {
            return Err(ExprError::Domain(format!("NaN result at ({}, {})", p[0], p[1])));
        }
        Ok(d)
    }

    pub fn grad(&self, p: Point) -> Result<[f64; 2], ExprError> {
        let d = self.eval_dual(p)?;
        Ok([d.d1, d.d2])
    }

    fn walk<S: Scalar>(&self, vars: &[S; 2]) -> Result<S, ExprError> {
        Ok(match self {
            Expr::Const(c) => S::lift(*c),
            Expr::Var(Var::X1) => vars[0],
            Expr::Var(Var::X2) => vars[1],
            Expr::Neg(a) => -a.walk(vars)?,
            Expr::Call(f, a) => {
                let x = a.walk(vars)?;
                match f {
                    Func::Ln if x.real() <= 0.0 => {
                        return Err(ExprError::Domain(format!("ln of non-positive value {}", x.real())))
                    }
                    Func::Sqrt if x.real() < 0.0 => {
                        return Err(ExprError::Domain(format!("sqrt of negative value {}", x.real())))
                    }
                    _ => {}
                }
                x.apply(*f)
            }
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.walk(vars)?, b.walk(vars)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                }
            }
            Expr::Pow(a, p) => {
                let x = a.walk(vars)?;
                if x.real() < 0.0 && p.fract() != 0.0 {
                    return Err(ExprError::Domain(format!(
                        "negative base {} with non-integer exponent {}",
                        x.real(),
                        p
                    )));
                }
                x.powf(*p)
            }
        })
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Fully parenthesized rendering that parses back to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::X1) => write!(f, "x1"),
            Expr::Var(Var::X2) => write!(f, "x2"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Pow(a, p) => write!(f, "(({a})^({p:?}))"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0, tok: Tok::End, tok_start: 0 }
    }

    fn syntax(&self, offset: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax { offset, message: message.into() }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        self.advance()?;
        if self.tok == Tok::End {
            return Err(self.syntax(self.tok_start, "empty expression"));
        }
        let e = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.syntax(self.tok_start, format!("unexpected token {:?}", self.tok)));
        }
        Ok(e)
    }

    fn advance(&mut self) -> Result<(), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        self.tok = match c {
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                    let mut k = self.pos + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        self.pos = k;
                    }
                }
                let text = &self.src[start..self.pos];
                let v: f64 = text
                    .parse()
                    .map_err(|_| self.syntax(start, format!("malformed number `{text}`")))?;
                Tok::Num(v)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = self.pos;
                while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            _ => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(self.syntax(self.pos, format!("unexpected character `{ch}`")));
            }
        };
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Tok::Op(op @ ('+' | '-')) = self.tok {
            self.advance()?;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ ('*' | '/')) = self.tok {
            self.advance()?;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.tok {
            Tok::Op('-') => {
                self.advance()?;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.advance()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        self.advance()?;
        let at = self.tok_start;
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(self.syntax(at, "exponent must be a constant"));
        }
        let p = exponent
            .walk::<f64>(&[0.0, 0.0])
            .map_err(|e| self.syntax(at, format!("exponent not evaluable: {e}")))?;
        if !p.is_finite() {
            return Err(self.syntax(at, "exponent is not finite"));
        }
        Ok(Expr::Pow(Box::new(base), p))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let start = self.tok_start;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                self.advance()?;
                match name.as_str() {
                    "x1" | "x" => return Ok(Expr::Var(Var::X1)),
                    "x2" | "y" => return Ok(Expr::Var(Var::X2)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ExprError::UnknownIdent { offset: start, name });
                };
                if self.tok != Tok::LParen {
                    return Err(self.syntax(self.tok_start, format!("expected `(` after `{name}`")));
                }
                self.advance()?;
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::End => Err(self.syntax(start, "unexpected end of input")),
            other => Err(self.syntax(start, format!("unexpected token {other:?}"))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.tok != Tok::RParen {
            return Err(self.syntax(self.tok_start, "expected `)`"));
        }
        self.advance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, p: Point) -> f64 {
        Expr::parse(s).unwrap().eval(p).unwrap()
    }

    #[test]
    fn precedence_and_values() {
        assert_eq!(ev("x1^2 + sin(x2)", [2.0, 0.0]), 4.0);
        assert_eq!(ev("x2^2/2 + x1^4/4 - x1^2/2", [1.0, 0.0]), -0.25);
        assert_eq!(ev("3.5", [9.0, -2.0]), 3.5);
        assert_eq!(ev("exp(0)*x1", [7.0, 1.0]), 7.0);
        assert_eq!(ev("-x1^2", [3.0, 0.0]), -9.0);
        assert_eq!(ev("2^3^2", [0.0, 0.0]), 512.0);
        assert_eq!(ev("2^-1", [0.0, 0.0]), 0.5);
        assert_eq!(ev("1 - 2 - 3", [0.0, 0.0]), -4.0);
        assert_eq!(ev("8 / 4 / 2", [0.0, 0.0]), 1.0);
        assert_eq!(ev("x * y", [2.0, 3.0]), 6.0);
        assert_eq!(ev("1.5e1 + 2E-1", [0.0, 0.0]), 15.2);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(
            Expr::parse("x1 +"),
            Err(ExprError::Syntax { offset: 4, message: "unexpected end of input".into() })
        );
        assert!(matches!(Expr::parse("(x1"), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(Expr::parse("x1 $ 2"), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(Expr::parse(""), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(Expr::parse("x1 x2"), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(Expr::parse("x1^x2"), Err(ExprError::Syntax { offset: 3, .. })));
        assert_eq!(
            Expr::parse("2*foo(x1)"),
            Err(ExprError::UnknownIdent { offset: 2, name: "foo".into() })
        );
        assert!(matches!(Expr::parse("x3"), Err(ExprError::UnknownIdent { offset: 0, .. })));
    }

    #[test]
    fn domain_errors() {
        let e = Expr::parse("ln(x1)").unwrap();
        assert!(matches!(e.eval([-1.0, 0.0]), Err(ExprError::Domain(_))));
        let e = Expr::parse("sqrt(x2)").unwrap();
        assert!(matches!(e.eval([0.0, -1.0]), Err(ExprError::Domain(_))));
        assert!(matches!(e.grad([0.0, -1.0]), Err(ExprError::Domain(_))));
        let e = Expr::parse("x1^0.5").unwrap();
        assert!(matches!(e.eval([-2.0, 0.0]), Err(ExprError::Domain(_))));
        assert_eq!(Expr::parse("x1^3").unwrap().eval([-2.0, 0.0]).unwrap(), -8.0);
    }

    #[test]
    fn gradients() {
        let e = Expr::parse("x1^2+x2").unwrap();
        assert_eq!(e.grad([3.0, 5.0]).unwrap(), [6.0, 1.0]);
        let h = Expr::parse("x2^2/2+x1^4/4-x1^2/2").unwrap();
        assert_eq!(h.grad([1.0, 0.0]).unwrap(), [0.0, 0.0]);
        let e = Expr::parse("abs(x1)*tanh(x2)").unwrap();
        let g = e.grad([-2.0, 0.0]).unwrap();
        assert_eq!(g, [0.0, 2.0]);
    }

    #[test]
    fn display_round_trips() {
        for s in ["-x1^2 + 3*sin(x2)/x1", "2^-1*x", "(x1-x2)^3 - exp(-x1*x2)", "sqrt(abs(x1)) + 1e-5"] {
            let e = Expr::parse(s).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{s} -> {e}");
        }
    }
}
