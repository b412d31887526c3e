use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{fix_and_bound, MinlpProblem};
use crate::nlp::{AugmentedLagrangian, NlpOptions, NlpSolver, NlpStatus};

use super::BenchError;

/// Largest binary block the oracle will enumerate.
pub const MAX_ORACLE_BINARIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub assignment: Vec<u8>,
    pub status: NlpStatus,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub objective: Option<f64>,
    pub assignment: Option<Vec<u8>>,
    pub point: Option<Vec<f64>>,
    pub assignments: Vec<AssignmentResult>,
    pub nlp_solves: usize,
}

/// Van der Corput radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

fn nth_prime(k: usize) -> u64 {
    let mut count = 0;
    let mut candidate = 1u64;
    loop {
        candidate += 1;
        if (2..candidate).take_while(|d| d * d <= candidate).all(|d| !candidate.is_multiple_of(d)) {
            if count == k {
                return candidate;
            }
            count += 1;
        }
    }
}

/// `count` starts on a Halton pattern scaled to the variable box.
pub fn halton_starts(prob: &MinlpProblem, count: usize) -> Vec<Vec<f64>> {
    let primes: Vec<u64> = (0..prob.num_vars()).map(nth_prime).collect();
    (0..count)
        .map(|k| {
            prob.variables()
                .iter()
                .zip(&primes)
                .map(|(v, &p)| v.lower + (v.upper - v.lower) * radical_inverse(k as u64 + 1, p))
                .collect()
        })
        .collect()
}

/// Enumerates every binary assignment and keeps the best multistart
/// optimum.
pub fn brute_force_solve(
    prob: &MinlpProblem,
    multistarts: usize,
    opts: &NlpOptions,
) -> Result<OracleResult, BenchError> {
    brute_force_solve_with(&mut AugmentedLagrangian::default(), prob, multistarts, opts)
}

pub fn brute_force_solve_with<S: NlpSolver + ?Sized>(
    solver: &mut S,
    prob: &MinlpProblem,
    multistarts: usize,
    opts: &NlpOptions,
) -> Result<OracleResult, BenchError> {
    let m = prob.num_binary();
    if m > MAX_ORACLE_BINARIES {
        return Err(BenchError::TooManyBinaries { count: m, limit: MAX_ORACLE_BINARIES });
    }
    let opts = NlpOptions { objective_mode: crate::nlp::ObjectiveMode::Optimize, ..opts.clone() };
    let starts = halton_starts(prob, multistarts.max(1));
    let mut out = OracleResult { objective: None, assignment: None, point: None, assignments: Vec::new(), nlp_solves: 0 };
    for code in 0..(1u32 << m) {
        let assignment: Vec<u8> = (0..m).map(|k| ((code >> k) & 1) as u8).collect();
        let fixed: BTreeMap<usize, f64> = assignment.iter().enumerate().map(|(k, &b)| (k, b as f64)).collect();
        let sub = fix_and_bound(prob, &fixed, &BTreeMap::new())?;
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut status = NlpStatus::Infeasible;
        for start in &starts {
            let r = solver.solve(&sub, start, &opts)?;
            out.nlp_solves += 1;
            if r.status != NlpStatus::Optimal {
                if status != NlpStatus::Optimal && r.status == NlpStatus::IterationLimit {
                    status = NlpStatus::IterationLimit;
                }
                continue;
            }
            status = NlpStatus::Optimal;
            if best.as_ref().is_none_or(|(f, _)| r.objective < *f) {
                best = Some((r.objective, r.point));
            }
        }
        let objective = best.as_ref().map(|b| b.0);
        if let Some((f, point)) = best {
            if out.objective.is_none_or(|g| f < g) {
                out.objective = Some(f);
                out.assignment = Some(assignment.clone());
                out.point = Some(point);
            }
        }
        out.assignments.push(AssignmentResult { assignment, status, objective });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;

    #[test]
    fn worked_instance() {
        let prob = parse_problem("var x cont [0,1]\nvar y bin\nmin (x - 0.6)^2 + 0.5*y\nst c: x - y <= 0").unwrap();
        let r = brute_force_solve(&prob, 5, &NlpOptions::default()).unwrap();
        assert!((r.objective.unwrap() - 0.36).abs() < 1e-6);
        assert_eq!(r.assignment, Some(vec![0]));
        assert_eq!(r.assignments.len(), 2);
        assert!((r.assignments[1].objective.unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn no_binaries_is_one_assignment() {
        let prob = parse_problem("var x cont [0,2]\nmin (x - 1)^2").unwrap();
        let r = brute_force_solve(&prob, 1, &NlpOptions::default()).unwrap();
        assert_eq!(r.nlp_solves, 1);
        assert_eq!(r.assignment, Some(vec![]));
    }

    #[test]
    fn all_infeasible() {
        let prob = parse_problem("var y bin\nmin y\nst a: y - 0.5 = 0").unwrap();
        let r = brute_force_solve(&prob, 3, &NlpOptions::default()).unwrap();
        assert_eq!(r.objective, None);
        assert!(r.assignments.iter().all(|a| a.status == NlpStatus::Infeasible));
    }

    #[test]
    fn guard() {
        let vars: String = (0..17).map(|i| format!("var y{i} bin\n")).collect();
        let prob = parse_problem(&format!("{vars}min y0")).unwrap();
        assert!(matches!(
            brute_force_solve(&prob, 1, &NlpOptions::default()),
            Err(BenchError::TooManyBinaries { count: 17, .. })
        ));
    }

    #[test]
    fn halton_pattern() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((0..5).map(nth_prime).collect::<Vec<_>>(), vec![2, 3, 5, 7, 11]);
    }
}
