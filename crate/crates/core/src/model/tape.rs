//! Flat evaluation tape with a reverse sweep for exact gradients.

use thiserror::Error;

use super::expr::{BinaryOp, Expr, UnaryOp, ABS_EPS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    /// Operator applied outside its domain; `node` is the tape slot.
    #[error("{op} out of domain at node {node} (argument {arg})")]
    Domain { op: &'static str, node: usize, arg: f64 },
    #[error("non-finite value produced by {op} at node {node}")]
    NonFinite { op: &'static str, node: usize },
    #[error("variable index {index} out of range for point of length {len}")]
    Index { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
    /// `a ^ c` with a constant exponent.
    PowConst(usize, f64),
}

/// Postfix compilation of an [`Expr`]. Operand indices always point to
/// earlier slots, so a forward pass evaluates and a backward pass
/// accumulates adjoints.
#[derive(Debug, Clone)]
pub struct Tape {
    slots: Vec<Slot>,
}

impl Tape {
    pub fn compile(expr: &Expr) -> Tape {
        let mut slots = Vec::with_capacity(expr.node_count());
        push(expr, &mut slots);
        Tape { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn value(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut values = Vec::with_capacity(self.slots.len());
        self.forward(point, &mut values)?;
        Ok(*values.last().expect("tape is never empty"))
    }

    /// Returns the value and adds the gradient into `grad`.
    pub fn value_and_gradient(&self, point: &[f64], grad: &mut [f64]) -> Result<f64, EvalError> {
        let mut values = Vec::with_capacity(self.slots.len());
        let mut adjoints = Vec::with_capacity(self.slots.len());
        self.eval_grad_with(point, 1.0, grad, &mut values, &mut adjoints)
    }

    /// Value and `weight * gradient` accumulated into `grad`, reusing the
    /// caller's scratch buffers.
    pub fn eval_grad_with(
        &self,
        point: &[f64],
        weight: f64,
        grad: &mut [f64],
        values: &mut Vec<f64>,
        adjoints: &mut Vec<f64>,
    ) -> Result<f64, EvalError> {
        self.forward(point, values)?;
        self.reverse(values, weight, grad, adjoints)?;
        Ok(values[values.len() - 1])
    }

    /// Reverse sweep over `values` left by [`Tape::forward`], adding
    /// `weight * gradient` into `grad`.
    pub fn reverse(
        &self,
        values: &[f64],
        weight: f64,
        grad: &mut [f64],
        adjoints: &mut Vec<f64>,
    ) -> Result<(), EvalError> {
        let n = self.slots.len();
        adjoints.clear();
        adjoints.resize(n, 0.0);
        adjoints[n - 1] = weight;
        for k in (0..n).rev() {
            let bar = adjoints[k];
            if bar == 0.0 {
                continue;
            }
            match self.slots[k] {
                Slot::Const(_) => {}
                Slot::Var(i) => grad[i] += bar,
                Slot::Unary(op, a) => {
                    let x = values[a];
                    let d = match op {
                        UnaryOp::Neg => -1.0,
                        UnaryOp::Exp => values[k],
                        UnaryOp::Log => 1.0 / x,
                        UnaryOp::Sqrt => {
                            if values[k] <= 0.0 {
                                return Err(EvalError::Domain { op: "sqrt", node: k, arg: x });
                            }
                            0.5 / values[k]
                        }
                        UnaryOp::Abs => x / values[k],
                    };
                    adjoints[a] += bar * d;
                }
                Slot::Binary(op, a, b) => {
                    let (x, y) = (values[a], values[b]);
                    let (da, db) = match op {
                        BinaryOp::Add => (1.0, 1.0),
                        BinaryOp::Sub => (1.0, -1.0),
                        BinaryOp::Mul => (y, x),
                        BinaryOp::Div => (1.0 / y, -x / (y * y)),
                        BinaryOp::Pow => {
                            if x <= 0.0 {
                                return Err(EvalError::Domain { op: "pow", node: k, arg: x });
                            }
                            (y * x.powf(y - 1.0), values[k] * x.ln())
                        }
                    };
                    adjoints[a] += bar * da;
                    adjoints[b] += bar * db;
                }
                Slot::PowConst(a, c) => {
                    let x = values[a];
                    let d = if c == 0.0 {
                        0.0
                    } else if c == 1.0 {
                        1.0
                    } else if c == 2.0 {
                        2.0 * x
                    } else {
                        if x == 0.0 && c < 1.0 {
                            return Err(EvalError::Domain { op: "pow", node: k, arg: x });
                        }
                        c * powc(x, c - 1.0)
                    };
                    adjoints[a] += bar * d;
                }
            }
        }
        Ok(())
    }

    /// Forward pass; the expression value ends up in the last slot.
    pub fn forward(&self, point: &[f64], values: &mut Vec<f64>) -> Result<(), EvalError> {
        values.clear();
        for (k, slot) in self.slots.iter().enumerate() {
            let v = match *slot {
                Slot::Const(c) => c,
                Slot::Var(i) => *point
                    .get(i)
                    .ok_or(EvalError::Index { index: i, len: point.len() })?,
                Slot::Unary(op, a) => {
                    let x = values[a];
                    match op {
                        UnaryOp::Neg => -x,
                        UnaryOp::Exp => x.exp(),
                        UnaryOp::Log => {
                            if x <= 0.0 {
                                return Err(EvalError::Domain { op: "log", node: k, arg: x });
                            }
                            x.ln()
                        }
                        UnaryOp::Sqrt => {
                            if x < 0.0 {
                                return Err(EvalError::Domain { op: "sqrt", node: k, arg: x });
                            }
                            x.sqrt()
                        }
                        UnaryOp::Abs => (x * x + ABS_EPS * ABS_EPS).sqrt(),
                    }
                }
                Slot::Binary(op, a, b) => {
                    let (x, y) = (values[a], values[b]);
                    match op {
                        BinaryOp::Add => x + y,
                        BinaryOp::Sub => x - y,
                        BinaryOp::Mul => x * y,
                        BinaryOp::Div => {
                            if y == 0.0 {
                                return Err(EvalError::Domain { op: "div", node: k, arg: y });
                            }
                            x / y
                        }
                        BinaryOp::Pow => {
                            if x <= 0.0 {
                                return Err(EvalError::Domain { op: "pow", node: k, arg: x });
                            }
                            x.powf(y)
                        }
                    }
                }
                Slot::PowConst(a, c) => {
                    let x = values[a];
                    if c.fract() != 0.0 && x < 0.0 {
                        return Err(EvalError::Domain { op: "pow", node: k, arg: x });
                    }
                    if c < 0.0 && x == 0.0 {
                        return Err(EvalError::Domain { op: "pow", node: k, arg: x });
                    }
                    powc(x, c)
                }
            };
            if !v.is_finite() {
                let op = match *slot {
                    Slot::Unary(op, _) => op.name(),
                    Slot::Binary(op, _, _) => op.name(),
                    Slot::PowConst(..) => "pow",
                    Slot::Const(_) => "const",
                    Slot::Var(_) => "var",
                };
                return Err(EvalError::NonFinite { op, node: k });
            }
            values.push(v);
        }
        Ok(())
    }
}

fn powc(x: f64, c: f64) -> f64 {
    if c == 2.0 {
        x * x
    } else if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
        x.powi(c as i32)
    } else {
        x.powf(c)
    }
}

fn push(expr: &Expr, slots: &mut Vec<Slot>) -> usize {
    let slot = match expr {
        Expr::Const(c) => Slot::Const(*c),
        Expr::Var(i) => Slot::Var(*i),
        Expr::Unary(op, a) => {
            let a = push(a, slots);
            Slot::Unary(*op, a)
        }
        Expr::Binary(BinaryOp::Pow, a, b) if b.is_constant() => {
            let c = b.evaluate(&[]).unwrap_or(f64::NAN);
            let a = push(a, slots);
            if c.is_finite() {
                Slot::PowConst(a, c)
            } else {
                let b = push(b, slots);
                Slot::Binary(BinaryOp::Pow, a, b)
            }
        }
        Expr::Binary(op, a, b) => {
            let a = push(a, slots);
            let b = push(b, slots);
            Slot::Binary(*op, a, b)
        }
    };
    slots.push(slot);
    slots.len() - 1
}
