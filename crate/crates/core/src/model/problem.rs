use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::Expr;
use super::tape::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl VariableSpec {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        VariableSpec { name: name.into(), kind: VarKind::Continuous, lower, upper }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        VariableSpec { name: name.into(), kind: VarKind::Binary, lower: 0.0, upper: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub expr: Expr,
}

impl Constraint {
    pub fn new(name: impl Into<String>, expr: Expr) -> Self {
        Constraint { name: name.into(), expr }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("variable `{0}` has a non-finite bound")]
    NonFiniteBound(String),
    #[error("binary variable `{0}` declared after the continuous block")]
    BinaryOrder(String),
    #[error("binary variable `{0}` must have bounds [0,1]")]
    BinaryBounds(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("problem has no variables")]
    Empty,
    #[error("expression `{context}` references variable {index} but only {count} exist")]
    VariableIndex { context: String, index: usize, count: usize },
    #[error("index {index} is not in the binary block (m = {count})")]
    NotBinary { index: usize, count: usize },
    #[error("interval [{lower}, {upper}] for binary {index} is empty or outside [0,1]")]
    Bound { index: usize, lower: f64, upper: f64 },
    #[error("point has length {got}, problem has {expected} variables")]
    PointLength { got: usize, expected: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A minimization problem over `n` continuous variables followed by `m`
/// binaries. Equalities read `h(v) = 0`, inequalities `g(v) <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinlpProblem {
    variables: Vec<VariableSpec>,
    objective: Expr,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
}

impl MinlpProblem {
    pub fn new(
        variables: Vec<VariableSpec>,
        objective: Expr,
        equalities: Vec<Constraint>,
        inequalities: Vec<Constraint>,
    ) -> Result<Self, ModelError> {
        let problem = MinlpProblem { variables, objective, equalities, inequalities };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.variables.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        let mut in_binary_block = false;
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateName(v.name.clone()));
            }
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(ModelError::NonFiniteBound(v.name.clone()));
            }
            if v.lower > v.upper {
                return Err(ModelError::InvertedBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            match v.kind {
                VarKind::Binary => {
                    if v.lower != 0.0 || v.upper != 1.0 {
                        return Err(ModelError::BinaryBounds(v.name.clone()));
                    }
                    in_binary_block = true;
                }
                VarKind::Continuous if in_binary_block => {
                    return Err(ModelError::BinaryOrder(v.name.clone()));
                }
                VarKind::Continuous => {}
            }
        }
        let count = self.variables.len();
        let exprs = std::iter::once(("objective", &self.objective)).chain(
            self.equalities
                .iter()
                .chain(&self.inequalities)
                .map(|c| (c.name.as_str(), &c.expr)),
        );
        for (context, e) in exprs {
            if let Some(index) = e.max_var_index() {
                if index >= count {
                    return Err(ModelError::VariableIndex {
                        context: context.to_string(),
                        index,
                        count,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Number of binary variables `m`.
    pub fn num_binary(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Number of variables in the continuous block `n`.
    pub fn num_continuous(&self) -> usize {
        self.num_vars() - self.num_binary()
    }

    /// Position of binary `k` in the variable vector.
    pub fn binary_position(&self, k: usize) -> usize {
        self.num_continuous() + k
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.upper).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.variables.iter().map(|v| 0.5 * (v.lower + v.upper)).collect()
    }

    pub fn clip(&self, point: &[f64]) -> Vec<f64> {
        self.variables
            .iter()
            .zip(point)
            .map(|(v, &x)| x.clamp(v.lower, v.upper))
            .collect()
    }

    /// Copy of this problem with a different objective.
    pub fn with_objective(&self, objective: Expr) -> Result<Self, ModelError> {
        MinlpProblem::new(
            self.variables.clone(),
            objective,
            self.equalities.clone(),
            self.inequalities.clone(),
        )
    }

    /// Retypes variable `position` as continuous with the given bounds.
    pub(crate) fn set_continuous_bounds(&mut self, position: usize, lower: f64, upper: f64) {
        let v = &mut self.variables[position];
        v.kind = VarKind::Continuous;
        v.lower = lower;
        v.upper = upper;
    }

    fn check_len(&self, point: &[f64]) -> Result<(), ModelError> {
        if point.len() != self.num_vars() {
            return Err(ModelError::PointLength { got: point.len(), expected: self.num_vars() });
        }
        Ok(())
    }

    pub fn objective_value(&self, point: &[f64]) -> Result<f64, ModelError> {
        self.check_len(point)?;
        Ok(self.objective.evaluate(point)?)
    }
}

/// Relaxation: every binary becomes continuous on `[0,1]`.
pub fn relax(prob: &MinlpProblem) -> MinlpProblem {
    let mut out = prob.clone();
    for v in &mut out.variables {
        if v.kind == VarKind::Binary {
            v.kind = VarKind::Continuous;
            v.lower = 0.0;
            v.upper = 1.0;
        }
    }
    out
}

/// Pins the listed binaries (`fixed`, by binary-block index) or restricts
/// them to intervals (`boxes`); every other binary is relaxed to `[0,1]`.
pub fn fix_and_bound(
    prob: &MinlpProblem,
    fixed: &BTreeMap<usize, f64>,
    boxes: &BTreeMap<usize, (f64, f64)>,
) -> Result<MinlpProblem, ModelError> {
    let m = prob.num_binary();
    let n = prob.num_continuous();
    let check = |index: usize, lower: f64, upper: f64| -> Result<(), ModelError> {
        if index >= m {
            return Err(ModelError::NotBinary { index, count: m });
        }
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(ModelError::Bound { index, lower, upper });
        }
        Ok(())
    };
    for (&k, &value) in fixed {
        check(k, value, value)?;
    }
    for (&k, &(lower, upper)) in boxes {
        check(k, lower, upper)?;
    }
    let mut out = relax(prob);
    for (&k, &(lower, upper)) in boxes {
        out.set_continuous_bounds(n + k, lower, upper);
    }
    for (&k, &value) in fixed {
        out.set_continuous_bounds(n + k, value, value);
    }
    Ok(out)
}

/// Largest violation over equalities `|h|`, inequalities `max(0, g)` and
/// variable bounds; zero exactly at feasible points.
pub fn max_violation(prob: &MinlpProblem, point: &[f64]) -> Result<f64, ModelError> {
    prob.check_len(point)?;
    let mut worst = 0.0f64;
    for c in &prob.equalities {
        worst = worst.max(c.expr.evaluate(point)?.abs());
    }
    for c in &prob.inequalities {
        worst = worst.max(c.expr.evaluate(point)?);
    }
    for (v, &x) in prob.variables.iter().zip(point) {
        worst = worst.max(v.lower - x).max(x - v.upper);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MinlpProblem {
        let x = Expr::var(0);
        let y1 = Expr::var(1);
        let y2 = Expr::var(2);
        MinlpProblem::new(
            vec![
                VariableSpec::continuous("x", -1.0, 3.0),
                VariableSpec::binary("y1"),
                VariableSpec::binary("y2"),
            ],
            x.clone() * x.clone() + y1.clone() + y2.clone(),
            vec![Constraint::new("h", x.clone() - 1.0)],
            vec![Constraint::new("g", x - y1 - y2)],
        )
        .unwrap()
    }

    #[test]
    fn relax_retypes_binaries() {
        let p = sample();
        let r = relax(&p);
        assert_eq!(r.num_binary(), 0);
        assert_eq!(r.num_continuous(), 3);
        assert_eq!(r.variables()[2].lower, 0.0);
        assert_eq!(r.variables()[2].upper, 1.0);
        assert_eq!(relax(&r), r);
    }

    #[test]
    fn relax_without_binaries_is_identity() {
        let p = MinlpProblem::new(
            vec![VariableSpec::continuous("x", 0.0, 1.0)],
            Expr::var(0),
            vec![],
            vec![],
        )
        .unwrap();
        assert_eq!(relax(&p), p);
    }

    #[test]
    fn fix_and_bound_pins_and_boxes() {
        let p = sample();
        let fixed = BTreeMap::from([(0, 1.0)]);
        let r = fix_and_bound(&p, &fixed, &BTreeMap::new()).unwrap();
        assert_eq!((r.variables()[1].lower, r.variables()[1].upper), (1.0, 1.0));
        assert_eq!((r.variables()[2].lower, r.variables()[2].upper), (0.0, 1.0));

        let boxes = BTreeMap::from([(1, (0.55, 1.0))]);
        let r = fix_and_bound(&p, &BTreeMap::new(), &boxes).unwrap();
        assert_eq!((r.variables()[2].lower, r.variables()[2].upper), (0.55, 1.0));

        assert_eq!(fix_and_bound(&p, &BTreeMap::new(), &BTreeMap::new()).unwrap(), relax(&p));
    }

    #[test]
    fn fix_and_bound_errors() {
        let p = sample();
        let bad_index = BTreeMap::from([(2, 1.0)]);
        assert!(matches!(
            fix_and_bound(&p, &bad_index, &BTreeMap::new()),
            Err(ModelError::NotBinary { index: 2, count: 2 })
        ));
        let inverted = BTreeMap::from([(0, (0.8, 0.2))]);
        assert!(matches!(
            fix_and_bound(&p, &BTreeMap::new(), &inverted),
            Err(ModelError::Bound { .. })
        ));
    }

    #[test]
    fn violation_cases() {
        let p = sample();
        assert_eq!(max_violation(&p, &[1.0, 1.0, 0.0]).unwrap(), 0.0);
        // h = x - 1 at x = 3; g = 3 - 1 - 1 = 1
        assert_eq!(max_violation(&p, &[3.0, 1.0, 1.0]).unwrap(), 2.0);
        let only_g = MinlpProblem::new(
            vec![VariableSpec::continuous("x", 0.0, 1.0)],
            Expr::var(0),
            vec![],
            vec![Constraint::new("g", Expr::var(0) - 1.0)],
        )
        .unwrap();
        assert_eq!(max_violation(&only_g, &[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_models() {
        let dup = MinlpProblem::new(
            vec![VariableSpec::continuous("x", 0.0, 1.0), VariableSpec::binary("x")],
            Expr::var(0),
            vec![],
            vec![],
        );
        assert!(matches!(dup, Err(ModelError::DuplicateName(_))));
        let out_of_range = MinlpProblem::new(
            vec![VariableSpec::continuous("x", 0.0, 1.0)],
            Expr::var(3),
            vec![],
            vec![],
        );
        assert!(matches!(out_of_range, Err(ModelError::VariableIndex { index: 3, .. })));
        let order = MinlpProblem::new(
            vec![VariableSpec::binary("y"), VariableSpec::continuous("x", 0.0, 1.0)],
            Expr::var(0),
            vec![],
            vec![],
        );
        assert!(matches!(order, Err(ModelError::BinaryOrder(_))));
    }
}
