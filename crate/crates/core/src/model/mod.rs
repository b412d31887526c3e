//! Problem representation: expressions with exact gradients, the problem
//! container, the relaxation and binary-fixing transforms, and the text
//! format.

mod expr;
mod parse;
mod problem;
mod tape;

pub use expr::{evaluate, gradient, BinaryOp, Expr, ExprDisplay, UnaryOp, ABS_EPS};
pub use parse::{parse_problem, print_problem, ParseError};
pub use problem::{
    fix_and_bound, max_violation, relax, Constraint, MinlpProblem, ModelError, VarKind,
    VariableSpec,
};
pub use tape::{EvalError, Tape};

/// Values for every variable of a problem, continuous block first.
pub type Point = Vec<f64>;
