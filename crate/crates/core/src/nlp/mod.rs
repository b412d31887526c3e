//! Local NLP solves for continuous problems.
//!
//! Callers hand over a problem whose binaries have already been fixed or
//! relaxed. The default solver is [`AugmentedLagrangian`]; anything that
//! implements [`NlpSolver`] can stand in for it.

mod auglag;
mod boxqn;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{fix_and_bound, MinlpProblem, ModelError};

pub use auglag::AugmentedLagrangian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    Optimize,
    /// Any point within the feasibility tolerance is accepted.
    FeasibilityOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlpOptions {
    pub feasibility_tolerance: f64,
    pub optimality_tolerance: f64,
    /// Cap on quasi-Newton iterations per inner solve.
    pub max_iterations: usize,
    pub objective_mode: ObjectiveMode,
}

impl Default for NlpOptions {
    fn default() -> Self {
        NlpOptions {
            feasibility_tolerance: 1e-7,
            optimality_tolerance: 1e-6,
            max_iterations: 500,
            objective_mode: ObjectiveMode::Optimize,
        }
    }
}

impl NlpOptions {
    pub fn feasibility_only(mut self) -> Self {
        self.objective_mode = ObjectiveMode::FeasibilityOnly;
        self
    }

    pub fn validate(&self) -> Result<(), NlpError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.feasibility_tolerance) || !positive(self.optimality_tolerance) {
            return Err(NlpError::Options("tolerances must be positive and finite".into()));
        }
        if self.max_iterations == 0 {
            return Err(NlpError::Options("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NlpStatus {
    Optimal,
    Feasible,
    Infeasible,
    IterationLimit,
}

impl NlpStatus {
    /// `Optimal` or `Feasible`.
    pub fn is_success(self) -> bool {
        matches!(self, NlpStatus::Optimal | NlpStatus::Feasible)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlpResult {
    pub status: NlpStatus,
    pub point: Vec<f64>,
    /// Objective of the problem as given, evaluated at `point`.
    pub objective: f64,
    pub violation: f64,
    pub iterations: usize,
    /// Projected-gradient norm of the merit at the last inner solve.
    pub stationarity: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlpError {
    #[error("problem still has {0} binary variables; fix or relax them first")]
    BinaryVariables(usize),
    #[error("start point has length {got}, problem has {expected} variables")]
    StartLength { got: usize, expected: usize },
    #[error("invalid options: {0}")]
    Options(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub trait NlpSolver {
    fn solve(
        &mut self,
        prob: &MinlpProblem,
        start: &[f64],
        opts: &NlpOptions,
    ) -> Result<NlpResult, NlpError>;
}

impl<S: NlpSolver + ?Sized> NlpSolver for &mut S {
    fn solve(
        &mut self,
        prob: &MinlpProblem,
        start: &[f64],
        opts: &NlpOptions,
    ) -> Result<NlpResult, NlpError> {
        (**self).solve(prob, start, opts)
    }
}

pub fn solve_nlp(
    prob: &MinlpProblem,
    start: &[f64],
    opts: &NlpOptions,
) -> Result<NlpResult, NlpError> {
    AugmentedLagrangian::default().solve(prob, start, opts)
}

/// Rounds every binary within `epsilon_int` of 0 or 1, fixes it there and
/// re-solves the remaining continuous problem from `point`.
pub fn polish_round<S: NlpSolver + ?Sized>(
    solver: &mut S,
    prob: &MinlpProblem,
    point: &[f64],
    epsilon_int: f64,
    opts: &NlpOptions,
) -> Result<NlpResult, NlpError> {
    if point.len() != prob.num_vars() {
        return Err(NlpError::StartLength { got: point.len(), expected: prob.num_vars() });
    }
    let n = prob.num_continuous();
    let mut fixed = BTreeMap::new();
    for k in 0..prob.num_binary() {
        let v = point[n + k];
        let r = v.round();
        if (v - r).abs() <= epsilon_int && (r == 0.0 || r == 1.0) {
            fixed.insert(k, r);
        }
    }
    let sub = fix_and_bound(prob, &fixed, &BTreeMap::new())?;
    solver.solve(&sub, point, opts)
}

/// `|after - before| / max(1, |before|)`.
pub fn relative_change(before: f64, after: f64) -> f64 {
    (after - before).abs() / before.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{max_violation, parse_problem};

    fn solve_text(src: &str, start: &[f64]) -> NlpResult {
        let p = parse_problem(src).unwrap();
        solve_nlp(&p, start, &NlpOptions::default()).unwrap()
    }

    #[test]
    fn bounded_quadratic() {
        let r = solve_text("var x cont [0,2]\nmin (x-1)^2", &[0.0]);
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.point[0] - 1.0).abs() < 1e-6);
        assert!(r.objective.abs() < 1e-10);
    }

    #[test]
    fn equality_constrained_symmetric() {
        let r = solve_text(
            "var x cont [-5,5]\nvar y cont [-5,5]\nmin x^2 + y^2\nst c: x + y - 1 = 0",
            &[3.0, -2.0],
        );
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.point[0] - 0.5).abs() < 1e-6 && (r.point[1] - 0.5).abs() < 1e-6);
        assert!((r.objective - 0.5).abs() < 1e-6);
        assert!(r.violation <= 1e-7);
        assert!(r.stationarity <= 1e-6);
    }

    #[test]
    fn empty_feasible_set_is_infeasible() {
        let r = solve_text("var x cont [0,1]\nmin x\nst c: -x + 2 <= 0", &[0.5]);
        assert_eq!(r.status, NlpStatus::Infeasible);
    }

    #[test]
    fn feasibility_mode_stops_at_feasible_start() {
        let p = parse_problem("var x cont [0,4]\nmin x\nst c: x - 3 <= 0").unwrap();
        let opts = NlpOptions::default().feasibility_only();
        let r = solve_nlp(&p, &[1.0], &opts).unwrap();
        assert_eq!(r.status, NlpStatus::Feasible);
        assert_eq!(r.point, vec![1.0]);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn feasibility_mode_reaches_circle() {
        let p = parse_problem("var x cont [-2,2]\nvar y cont [-2,2]\nmin 0\nst c: x^2 + y^2 - 1 = 0")
            .unwrap();
        let opts = NlpOptions::default().feasibility_only();
        let r = solve_nlp(&p, &[0.2, 0.1], &opts).unwrap();
        assert_eq!(r.status, NlpStatus::Feasible);
        assert!(r.violation <= 1e-7);
    }

    #[test]
    fn active_inequality_with_bounds() {
        // min (x-2)^2 + (y-2)^2 s.t. x + y <= 1: optimum (0.5, 0.5), f = 4.5.
        let r = solve_text(
            "var x cont [-3,3]\nvar y cont [-3,3]\nmin (x-2)^2 + (y-2)^2\nst c: x + y <= 1",
            &[-3.0, 3.0],
        );
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.objective - 4.5).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn binaries_rejected() {
        let p = parse_problem("var y bin\nmin y").unwrap();
        assert!(matches!(
            solve_nlp(&p, &[0.5], &NlpOptions::default()),
            Err(NlpError::BinaryVariables(1))
        ));
    }

    #[test]
    fn start_is_clipped() {
        let r = solve_text("var x cont [0,2]\nmin (x-1)^2", &[10.0]);
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.point[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn all_fixed_is_evaluated() {
        let r = solve_text("var x cont [1,1]\nmin x\nst c: x - 2 <= 0", &[0.0]);
        assert_eq!(r.status, NlpStatus::Optimal);
        assert_eq!(r.point, vec![1.0]);
    }

    #[test]
    fn domain_error_reported_as_infeasible() {
        let r = solve_text("var x cont [-1,-0.5]\nmin log(x)", &[-0.7]);
        assert_eq!(r.status, NlpStatus::Infeasible);
        assert!(r.message.is_some());
    }

    #[test]
    fn violation_matches_model() {
        let p = parse_problem(
            "var x cont [-2,2]\nvar y cont [-2,2]\nmin x*y\nst a: x^2 + y^2 - 1 = 0\nst b: x - y <= 0.3",
        )
        .unwrap();
        let r = solve_nlp(&p, &[1.5, -1.0], &NlpOptions::default()).unwrap();
        assert!((r.violation - max_violation(&p, &r.point).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn deterministic() {
        let src = "var x cont [-2,2]\nvar y cont [-2,2]\nmin x^4 - x*y + y^2\nst a: x + y - 0.5 = 0";
        let a = solve_text(src, &[1.0, 1.0]);
        let b = solve_text(src, &[1.0, 1.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn polish_rounds_near_integral_binaries() {
        let p = parse_problem("var x cont [0,2]\nvar y bin\nvar z bin\nmin (x - y)^2 + z\nst c: x - 2*y <= 0")
            .unwrap();
        let r = polish_round(
            &mut AugmentedLagrangian::default(),
            &p,
            &[0.999999, 0.999999, 0.0],
            1e-5,
            &NlpOptions::default(),
        )
        .unwrap();
        assert_eq!(r.status, NlpStatus::Optimal);
        assert_eq!(&r.point[1..], &[1.0, 0.0]);
        assert!(r.objective.abs() < 1e-10);
    }

    #[test]
    fn polish_of_integral_point_is_fixed_point() {
        let p = parse_problem("var x cont [0,2]\nvar y bin\nmin (x - 1.5)^2 + y").unwrap();
        let r = polish_round(&mut AugmentedLagrangian::default(), &p, &[1.5, 1.0], 1e-5, &NlpOptions::default())
            .unwrap();
        assert!((r.objective - 1.0).abs() <= 1e-6);
        assert_eq!(relative_change(1.0, r.objective), (r.objective - 1.0).abs());
    }

    #[test]
    fn polish_reports_infeasible_rounding() {
        let p = parse_problem("var x cont [0,1]\nvar y bin\nmin x\nst c: x + y >= 1.5").unwrap();
        let r = polish_round(&mut AugmentedLagrangian::default(), &p, &[0.5, 0.999999], 1e-5, &NlpOptions::default());
        // x + 1 >= 1.5 is attainable, so rounding y up keeps feasibility.
        assert_eq!(r.unwrap().status, NlpStatus::Optimal);
        let r = polish_round(&mut AugmentedLagrangian::default(), &p, &[1.0, 0.000001], 1e-5, &NlpOptions::default())
            .unwrap();
        assert_eq!(r.status, NlpStatus::Infeasible);
    }
}
