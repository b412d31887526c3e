//! Bound-constrained quasi-Newton minimization.
//!
//! A projected BFGS method: the inverse-Hessian approximation acts on the
//! variables that are not held at a bound by their gradient, and the step
//! is a projected Armijo backtracking search along the resulting direction.

/// Objective callback: writes the gradient and returns the value, or `None`
/// when the point lies outside the model's domain.
pub(crate) trait BoxObjective {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64>;

    /// Polled at every accepted iterate; returning `true` ends the search.
    fn should_stop(&mut self, _x: &[f64]) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoxExit {
    Converged,
    /// No further decrease representable in floating point.
    Stalled,
    IterationLimit,
    EarlyStop,
    /// The starting point could not be evaluated.
    Undefined,
}

#[derive(Debug, Clone)]
pub(crate) struct BoxResult {
    pub exit: BoxExit,
    pub projected_gradient: f64,
    pub iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

pub(crate) fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        if lower[i] == upper[i] {
            continue;
        }
        let moved = (x[i] - g[i]).clamp(lower[i], upper[i]);
        worst = worst.max((moved - x[i]).abs());
    }
    worst
}

pub(crate) fn minimize<F: BoxObjective>(
    objective: &mut F,
    x: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> BoxResult {
    let n = x.len();
    for i in 0..n {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
    let mut g = vec![0.0; n];
    let mut fx = match objective.eval(x, &mut g) {
        Some(v) => v,
        None => {
            return BoxResult {
                exit: BoxExit::Undefined,
                projected_gradient: f64::INFINITY,
                iterations: 0,
            }
        }
    };

    // Dense inverse-Hessian approximation, row-major.
    let mut h = identity(n);
    let mut scaled = false;
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut free = vec![false; n];
    let mut s = vec![0.0; n];
    let mut yv = vec![0.0; n];
    let mut hy = vec![0.0; n];
    let mut flat_steps = 0usize;

    for it in 0..max_iterations {
        let pg = projected_gradient_norm(x, &g, lower, upper);
        if objective.should_stop(x) {
            return BoxResult { exit: BoxExit::EarlyStop, projected_gradient: pg, iterations: it };
        }
        if pg <= tolerance {
            return BoxResult { exit: BoxExit::Converged, projected_gradient: pg, iterations: it };
        }

        for i in 0..n {
            let fixed = lower[i] == upper[i];
            let held_low = x[i] <= lower[i] && g[i] > 0.0;
            let held_high = x[i] >= upper[i] && g[i] < 0.0;
            free[i] = !(fixed || held_low || held_high);
        }
        direction(&h, &g, &free, &mut d);
        let mut slope: f64 = (0..n).map(|i| g[i] * d[i]).sum();
        if !(slope < 0.0) {
            h = identity(n);
            scaled = false;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
            slope = (0..n).map(|i| g[i] * d[i]).sum();
            if !(slope < 0.0) {
                return BoxResult { exit: BoxExit::Stalled, projected_gradient: pg, iterations: it };
            }
        }

        let mut alpha = if scaled {
            1.0
        } else {
            let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (1.0 / dmax).min(1.0)
        };
        let accepted = loop {
            for i in 0..n {
                trial[i] = (x[i] + alpha * d[i]).clamp(lower[i], upper[i]);
            }
            g_trial.iter_mut().for_each(|v| *v = 0.0);
            if let Some(ft) = objective.eval(&trial, &mut g_trial) {
                let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                if ft <= fx + ARMIJO * decrease.min(0.0) && ft.is_finite() {
                    break Some(ft);
                }
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some(f_new) = accepted else {
            if scaled {
                // Retry once from a steepest-descent model before giving up.
                h = identity(n);
                scaled = false;
                continue;
            }
            return BoxResult { exit: BoxExit::Stalled, projected_gradient: pg, iterations: it };
        };

        let mut sy = 0.0;
        let mut yy = 0.0;
        let mut ss = 0.0;
        for i in 0..n {
            if free[i] {
                s[i] = trial[i] - x[i];
                yv[i] = g_trial[i] - g[i];
            } else {
                s[i] = 0.0;
                yv[i] = 0.0;
            }
            sy += s[i] * yv[i];
            yy += yv[i] * yv[i];
            ss += s[i] * s[i];
        }
        let step_norm = (0..n).fold(0.0f64, |a, i| a.max((trial[i] - x[i]).abs()));
        let x_norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if (fx - f_new).abs() <= 1e-15 * (1.0 + fx.abs()) && step_norm <= 1e-13 * (1.0 + x_norm) {
            flat_steps += 1;
        } else {
            flat_steps = 0;
        }
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_trial);
        fx = f_new;
        if flat_steps >= 3 {
            let pg = projected_gradient_norm(x, &g, lower, upper);
            return BoxResult { exit: BoxExit::Stalled, projected_gradient: pg, iterations: it + 1 };
        }

        if sy > 1e-12 * (ss * yy).sqrt() && sy > 0.0 {
            if !scaled {
                let gamma = sy / yy;
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = if i == j { gamma } else { 0.0 };
                    }
                }
                scaled = true;
            }
            bfgs_update(&mut h, &s, &yv, sy, &mut hy);
        }
    }
    let pg = projected_gradient_norm(x, &g, lower, upper);
    let exit = if pg <= tolerance { BoxExit::Converged } else { BoxExit::IterationLimit };
    BoxResult { exit, projected_gradient: pg, iterations: max_iterations }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn direction(h: &[f64], g: &[f64], free: &[bool], d: &mut [f64]) {
    let n = g.len();
    for i in 0..n {
        d[i] = 0.0;
        if !free[i] {
            continue;
        }
        let row = &h[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for j in 0..n {
            if free[j] {
                acc += row[j] * g[j];
            }
        }
        d[i] = -acc;
    }
}

/// Inverse BFGS update `H <- (I - r s y') H (I - r y s') + r s s'`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, hy: &mut [f64]) {
    let n = s.len();
    let r = 1.0 / sy;
    for i in 0..n {
        hy[i] = (0..n).map(|j| h[i * n + j] * y[j]).sum();
    }
    let yhy: f64 = (0..n).map(|i| y[i] * hy[i]).sum();
    let coef = (1.0 + r * yhy) * r;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
