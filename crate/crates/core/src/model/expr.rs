//! Expression trees over the problem's variable vector.

use std::fmt;
use std::ops;

use serde::{Deserialize, Serialize};

use super::tape::{EvalError, Tape};

/// Smoothing width of the `abs` operator: `abs(a) = sqrt(a^2 + ABS_EPS^2)`.
pub const ABS_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    /// Smooth absolute value.
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Pow => "pow",
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }
}

/// A scalar expression. Variables are referenced by their position in the
/// owning problem's variable vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn exp(self) -> Expr {
        Expr::Unary(UnaryOp::Exp, Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Unary(UnaryOp::Log, Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Unary(UnaryOp::Sqrt, Box::new(self))
    }

    pub fn abs(self) -> Expr {
        Expr::Unary(UnaryOp::Abs, Box::new(self))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Binary(BinaryOp::Pow, Box::new(self), Box::new(exponent))
    }

    pub fn powf(self, exponent: f64) -> Expr {
        self.pow(Expr::Const(exponent))
    }

    /// Sum of a sequence of expressions; the empty sum is `0`.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut iter = terms.into_iter();
        match iter.next() {
            None => Expr::Const(0.0),
            Some(first) => iter.fold(first, |acc, t| acc + t),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) => a.max_var_index(),
            Expr::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_var_index().is_none()
    }

    /// Evaluates the expression at `point`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        Tape::compile(self).value(point)
    }

    /// Exact gradient by a reverse sweep over the compiled tape.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut grad = vec![0.0; point.len()];
        Tape::compile(self).value_and_gradient(point, &mut grad)?;
        Ok(grad)
    }

    /// Renders the expression using `names` for variables.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names: Some(names) }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Expr::Const(_) | Expr::Var(_) => 5,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Unary(_, _) => 5,
            Expr::Binary(op, _, _) => op.precedence(),
        }
    }
}

/// Evaluates `expr` at `point`.
pub fn evaluate(expr: &Expr, point: &[f64]) -> Result<f64, EvalError> {
    expr.evaluate(point)
}

/// Gradient of `expr` at `point`, one entry per variable.
pub fn gradient(expr: &Expr, point: &[f64]) -> Result<Vec<f64>, EvalError> {
    expr.gradient(point)
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: Option<&'a [String]>,
}

impl ExprDisplay<'_> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Const(c) => write!(f, "{}", c),
            Expr::Var(i) => match self.names.and_then(|n| n.get(*i)) {
                Some(name) => f.write_str(name),
                None => write!(f, "v{}", i),
            },
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                // A bare literal after `-` would be read back as a negative constant.
                let wrap = a.precedence() < 3 || matches!(**a, Expr::Const(_));
                self.write_wrapped(a, wrap, f)
            }
            Expr::Unary(op, a) => {
                write!(f, "{}(", op.name())?;
                self.write(a, f)?;
                f.write_str(")")
            }
            Expr::Binary(op, a, b) => {
                let prec = op.precedence();
                let (wrap_left, wrap_right) = if *op == BinaryOp::Pow {
                    (a.precedence() <= prec, b.precedence() < 3)
                } else {
                    (a.precedence() < prec, b.precedence() <= prec)
                };
                self.write_wrapped(a, wrap_left, f)?;
                write!(f, " {} ", op.symbol())?;
                self.write_wrapped(b, wrap_right, f)
            }
        }
    }

    fn write_wrapped(&self, e: &Expr, wrap: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if wrap {
            f.write_str("(")?;
            self.write(e, f)?;
            f.write_str(")")
        } else {
            self.write(e, f)
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        ExprDisplay { expr: self, names: None }.fmt(f)
    }
}

macro_rules! binary_impl {
    ($trait:ident, $method:ident, $op:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::Binary($op, Box::new(self), Box::new(rhs))
            }
        }

        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::Binary($op, Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }

        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::Binary($op, Box::new(Expr::Const(self)), Box::new(rhs))
            }
        }
    };
}

binary_impl!(Add, add, BinaryOp::Add);
binary_impl!(Sub, sub, BinaryOp::Sub);
binary_impl!(Mul, mul, BinaryOp::Mul);
binary_impl!(Div, div, BinaryOp::Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn evaluates_product_of_square() {
        let e = x(0).powf(2.0) * x(1);
        assert_eq!(e.evaluate(&[2.0, 3.0]).unwrap(), 12.0);
        assert_eq!(e.gradient(&[2.0, 3.0]).unwrap(), vec![12.0, 4.0]);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let e = Expr::constant(5.0);
        assert_eq!(e.evaluate(&[1.0, -4.0]).unwrap(), 5.0);
        assert_eq!(e.gradient(&[1.0, -4.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn exp_plus_var_gradient() {
        let e = x(0).exp() + x(1);
        assert_eq!(e.gradient(&[0.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn log_of_zero_is_domain_error() {
        let err = x(0).ln().evaluate(&[0.0]).unwrap_err();
        assert!(matches!(err, EvalError::Domain { op: "log", .. }));
    }

    #[test]
    fn display_minimal_parentheses() {
        let e = (x(0) - 0.6).powf(2.0) + 0.5 * x(1);
        assert_eq!(e.to_string(), "(v0 - 0.6) ^ 2 + 0.5 * v1");
        let nested = x(0) - (x(1) - x(2));
        assert_eq!(nested.to_string(), "v0 - (v1 - v2)");
        assert_eq!((-Expr::constant(3.0)).to_string(), "-(3)");
        assert_eq!(Expr::constant(-3.0).powf(2.0).to_string(), "(-3) ^ 2");
    }
}
