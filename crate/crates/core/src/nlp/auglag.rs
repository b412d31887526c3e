use crate::model::{max_violation, EvalError, MinlpProblem, Tape};

use super::boxqn::{self, BoxExit, BoxObjective};
use super::{NlpError, NlpOptions, NlpResult, NlpSolver, NlpStatus, ObjectiveMode};

/// Powell-Hestenes-Rockafellar augmented Lagrangian with a projected BFGS
/// inner solver. Bounds stay in the inner problem; equalities and
/// inequalities are priced into the merit.
#[derive(Debug, Clone)]
pub struct AugmentedLagrangian {
    pub initial_penalty: f64,
    pub penalty_factor: f64,
    pub penalty_cap: f64,
    pub multiplier_cap: f64,
    pub max_outer_iterations: usize,
    /// Consecutive non-improving outer passes at the penalty cap before
    /// the problem is declared infeasible.
    pub stall_limit: usize,
}

impl Default for AugmentedLagrangian {
    fn default() -> Self {
        AugmentedLagrangian {
            initial_penalty: 10.0,
            penalty_factor: 10.0,
            penalty_cap: 1e10,
            multiplier_cap: 1e8,
            max_outer_iterations: 100,
            stall_limit: 3,
        }
    }
}

pub(crate) struct Compiled {
    objective: Option<Tape>,
    equalities: Vec<Tape>,
    inequalities: Vec<Tape>,
}

impl Compiled {
    pub(crate) fn new(prob: &MinlpProblem, mode: ObjectiveMode) -> Compiled {
        let objective = match mode {
            ObjectiveMode::Optimize if !prob.objective().is_constant() => {
                Some(Tape::compile(prob.objective()))
            }
            _ => None,
        };
        Compiled {
            objective,
            equalities: prob.equalities().iter().map(|c| Tape::compile(&c.expr)).collect(),
            inequalities: prob.inequalities().iter().map(|c| Tape::compile(&c.expr)).collect(),
        }
    }
}

struct Merit<'a> {
    compiled: &'a Compiled,
    lambda: &'a [f64],
    mu: &'a [f64],
    rho: f64,
    stop_below: Option<f64>,
    values: Vec<f64>,
    adjoints: Vec<f64>,
}

impl Merit<'_> {
    fn try_eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64, EvalError> {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        if let Some(tape) = &self.compiled.objective {
            total += tape.eval_grad_with(x, 1.0, grad, &mut self.values, &mut self.adjoints)?;
        }
        for (k, tape) in self.compiled.equalities.iter().enumerate() {
            tape.forward(x, &mut self.values)?;
            let h = self.values[self.values.len() - 1];
            total += self.lambda[k] * h + 0.5 * self.rho * h * h;
            tape.reverse(&self.values, self.lambda[k] + self.rho * h, grad, &mut self.adjoints)?;
        }
        for (k, tape) in self.compiled.inequalities.iter().enumerate() {
            tape.forward(x, &mut self.values)?;
            let g = self.values[self.values.len() - 1];
            let mu = self.mu[k];
            let shifted = mu + self.rho * g;
            if shifted > 0.0 {
                total += (shifted * shifted - mu * mu) / (2.0 * self.rho);
                tape.reverse(&self.values, shifted, grad, &mut self.adjoints)?;
            } else {
                total -= mu * mu / (2.0 * self.rho);
            }
        }
        Ok(total)
    }
}

impl BoxObjective for Merit<'_> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        self.try_eval(x, grad).ok()
    }

    fn should_stop(&mut self, x: &[f64]) -> bool {
        match self.stop_below {
            Some(tol) => {
                constraint_violation(self.compiled, x, &mut self.values).is_ok_and(|v| v <= tol)
            }
            None => false,
        }
    }
}

/// Violation of the general constraints (bounds are enforced by the
/// inner solver).
fn constraint_violation(c: &Compiled, x: &[f64], values: &mut Vec<f64>) -> Result<f64, EvalError> {
    let mut worst = 0.0f64;
    for tape in &c.equalities {
        tape.forward(x, values)?;
        worst = worst.max(values[values.len() - 1].abs());
    }
    for tape in &c.inequalities {
        tape.forward(x, values)?;
        worst = worst.max(values[values.len() - 1]);
    }
    Ok(worst)
}

impl AugmentedLagrangian {
    pub fn solve(
        &self,
        prob: &MinlpProblem,
        start: &[f64],
        opts: &NlpOptions,
    ) -> Result<NlpResult, NlpError> {
        opts.validate()?;
        if prob.num_binary() > 0 {
            return Err(NlpError::BinaryVariables(prob.num_binary()));
        }
        if start.len() != prob.num_vars() {
            return Err(NlpError::StartLength { got: start.len(), expected: prob.num_vars() });
        }
        let mode = opts.objective_mode;
        let compiled = Compiled::new(prob, mode);
        let lower = prob.lower_bounds();
        let upper = prob.upper_bounds();
        let mut x = prob.clip(start);
        let mut values = Vec::new();
        let feasible_status = match mode {
            ObjectiveMode::Optimize => NlpStatus::Optimal,
            ObjectiveMode::FeasibilityOnly => NlpStatus::Feasible,
        };

        let initial = match constraint_violation(&compiled, &x, &mut values) {
            Ok(v) => v,
            Err(e) => {
                return Ok(self.finish(prob, x, NlpStatus::Infeasible, 0, f64::NAN, Some(e.to_string())))
            }
        };
        let has_free = lower.iter().zip(&upper).any(|(l, u)| l < u);
        if initial <= opts.feasibility_tolerance
            && (mode == ObjectiveMode::FeasibilityOnly || !has_free && compiled.objective.is_none())
        {
            return Ok(self.finish(prob, x, feasible_status, 0, 0.0, None));
        }
        if !has_free {
            let status = if initial <= opts.feasibility_tolerance {
                feasible_status
            } else {
                NlpStatus::Infeasible
            };
            return Ok(self.finish(prob, x, status, 0, 0.0, None));
        }

        let mut lambda = vec![0.0; compiled.equalities.len()];
        let mut mu = vec![0.0; compiled.inequalities.len()];
        let mut rho = self.initial_penalty;
        let mut previous = initial;
        let mut best = f64::INFINITY;
        let mut stalls = 0usize;
        let mut iterations = 0usize;
        let mut last_pg = f64::INFINITY;
        let mut inner_tol = opts.optimality_tolerance;

        for _ in 0..self.max_outer_iterations {
            let stop_below = match mode {
                ObjectiveMode::FeasibilityOnly => Some(opts.feasibility_tolerance),
                ObjectiveMode::Optimize => None,
            };
            let mut merit = Merit {
                compiled: &compiled,
                lambda: &lambda,
                mu: &mu,
                rho,
                stop_below,
                values: Vec::new(),
                adjoints: Vec::new(),
            };
            let inner = boxqn::minimize(
                &mut merit,
                &mut x,
                &lower,
                &upper,
                inner_tol,
                opts.max_iterations,
            );
            iterations += inner.iterations;
            last_pg = inner.projected_gradient;
            if inner.exit == BoxExit::Undefined {
                let msg = "model undefined at the current iterate".to_string();
                return Ok(self.finish(prob, x, NlpStatus::Infeasible, iterations, last_pg, Some(msg)));
            }
            let violation = match constraint_violation(&compiled, &x, &mut values) {
                Ok(v) => v,
                Err(e) => {
                    return Ok(self.finish(prob, x, NlpStatus::Infeasible, iterations, last_pg, Some(e.to_string())))
                }
            };
            if violation <= opts.feasibility_tolerance
                && (mode == ObjectiveMode::FeasibilityOnly || inner.projected_gradient <= opts.optimality_tolerance)
            {
                return Ok(self.finish(prob, x, feasible_status, iterations, last_pg, None));
            }

            // Multiplier step, projected onto the safeguard box.
            let cap = self.multiplier_cap;
            for (k, tape) in compiled.equalities.iter().enumerate() {
                if tape.forward(&x, &mut values).is_ok() {
                    let h = values[values.len() - 1];
                    lambda[k] = (lambda[k] + rho * h).clamp(-cap, cap);
                }
            }
            for (k, tape) in compiled.inequalities.iter().enumerate() {
                if tape.forward(&x, &mut values).is_ok() {
                    let g = values[values.len() - 1];
                    mu[k] = (mu[k] + rho * g).clamp(0.0, cap);
                }
            }

            if violation > opts.feasibility_tolerance {
                // Projected gradients near a bound are capped by the gap.
                inner_tol = inner_tol.min(0.1 * violation).max(1e-14);
            }
            if violation > 0.25 * previous {
                rho = (rho * self.penalty_factor).min(self.penalty_cap);
            }
            previous = violation;
            if rho >= self.penalty_cap && violation > opts.feasibility_tolerance {
                if violation >= 0.99 * best {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                if stalls >= self.stall_limit {
                    let msg = format!("violation stalled at {violation:.3e}");
                    return Ok(self.finish(prob, x, NlpStatus::Infeasible, iterations, last_pg, Some(msg)));
                }
            }
            best = best.min(violation);
        }
        Ok(self.finish(prob, x, NlpStatus::IterationLimit, iterations, last_pg, None))
    }

    fn finish(
        &self,
        prob: &MinlpProblem,
        point: Vec<f64>,
        status: NlpStatus,
        iterations: usize,
        stationarity: f64,
        message: Option<String>,
    ) -> NlpResult {
        let objective = prob.objective_value(&point).unwrap_or(f64::NAN);
        let violation = max_violation(prob, &point).unwrap_or(f64::INFINITY);
        NlpResult { status, point, objective, violation, iterations, stationarity, message }
    }
}

impl NlpSolver for AugmentedLagrangian {
    fn solve(
        &mut self,
        prob: &MinlpProblem,
        start: &[f64],
        opts: &NlpOptions,
    ) -> Result<NlpResult, NlpError> {
        AugmentedLagrangian::solve(self, prob, start, opts)
    }
}
