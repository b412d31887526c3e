use serde::{Deserialize, Serialize};

/// Last solution accepted along the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub point: Vec<f64>,
    pub t: f64,
    /// `None` for feasibility solves.
    pub objective: Option<f64>,
}

/// Adaptive step-length automaton.
///
/// `t_values[nu]` is the parameter of the solve about to run and
/// `dt_values[nu - 1]` the step length that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyState {
    pub nu: usize,
    pub t_values: Vec<f64>,
    pub dt_values: Vec<f64>,
    pub last_converged: Option<Snapshot>,
    pub n_max: usize,
    pub dt_min: f64,
}

impl HomotopyState {
    /// Fresh path: `t = 0` accepted, first attempt straight at `t = 1`.
    pub fn new(n_max: usize, dt_min: f64) -> Self {
        Self::resume(0.0, 1.0, n_max, dt_min)
    }

    /// Path that has reached `t0`, next attempt at `t0 + dt0`.
    pub fn resume(t0: f64, dt0: f64, n_max: usize, dt_min: f64) -> Self {
        HomotopyState {
            nu: 1,
            t_values: vec![t0, (t0 + dt0).min(1.0)],
            dt_values: vec![dt0],
            last_converged: None,
            n_max,
            dt_min,
        }
    }

    pub fn current_t(&self) -> f64 {
        self.t_values[self.nu]
    }

    pub fn last_dt(&self) -> f64 {
        self.dt_values[self.dt_values.len() - 1]
    }

    pub fn last_success_t(&self) -> f64 {
        self.last_converged.as_ref().map_or(self.t_values[0], |s| s.t)
    }

    pub fn is_stalled(&self) -> bool {
        self.nu >= self.n_max || self.last_dt() <= self.dt_min
    }

    /// Keep the step after an accepted solve, or double it when the two
    /// most recent steps were equal. Returns `(dt, t_next)`.
    pub fn next_on_success(&mut self) -> (f64, f64) {
        let prev = self.dt_values[self.nu - 1];
        let dt = if self.nu == 1 || prev != self.dt_values[self.nu - 2] {
            prev
        } else {
            2.0 * prev
        };
        let t_next = (self.current_t() + dt).min(1.0);
        self.push_step(dt, t_next);
        (dt, t_next)
    }

    /// Halve the step and retry from the last accepted parameter.
    /// Returns `(dt, t_next)`.
    pub fn next_on_failure(&mut self) -> (f64, f64) {
        let dt = self.dt_values[self.nu - 1] / 2.0;
        let t_next = (self.last_success_t() + dt).min(1.0);
        self.push_step(dt, t_next);
        (dt, t_next)
    }

    /// Records an externally chosen step (schedule replay).
    pub fn push_step(&mut self, dt: f64, t_next: f64) {
        self.dt_values.truncate(self.nu);
        self.t_values.truncate(self.nu + 1);
        self.dt_values.push(dt);
        self.t_values.push(t_next);
        self.nu += 1;
    }
}
