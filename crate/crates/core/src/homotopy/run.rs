use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::MinlpProblem;
use crate::nlp::{NlpOptions, NlpResult, NlpSolver, NlpStatus};

use super::history::{NodeHistory, ScheduleEntry};
use super::steps::{HomotopyState, Snapshot};
use super::{build_nlpfx, build_subproblem, HomotopyAnchor, HomotopyError, PathVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyConfig {
    /// Step counter bound; the path stalls once it is reached.
    pub n_max: usize,
    pub dt_min: f64,
    /// Largest parent-value gap for reusing an earlier schedule.
    pub delta: f64,
    pub nlp: NlpOptions,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig { n_max: 50, dt_min: 0.01, delta: 0.1, nlp: NlpOptions::default() }
    }
}

impl HomotopyConfig {
    /// Settings for re-running a stalled path during post-check.
    pub fn refinement(&self) -> Self {
        HomotopyConfig { n_max: 1000, dt_min: 1e-15, ..self.clone() }
    }
}

/// Where a path begins: the accepted point at `t0` and the first step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStart {
    pub point: Vec<f64>,
    pub t0: f64,
    pub dt0: f64,
    pub objective: Option<f64>,
}

impl PathStart {
    pub fn from_parent(point: Vec<f64>, objective: f64) -> Self {
        PathStart { point, t0: 0.0, dt0: 1.0, objective: Some(objective) }
    }
}

/// One NLP solve issued along the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub t: f64,
    pub status: NlpStatus,
    pub objective: Option<f64>,
    /// The closing optimality solve of a feasibility path.
    pub closing: bool,
}

/// Last accepted solution of a stalled path and the step that was due next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallRecord {
    pub snapshot: Snapshot,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Solved(NlpResult),
    /// An intermediate optimum already exceeded the upper bound.
    BoundPruned { t: f64, objective: f64 },
    Stalled(StallRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyOutcome {
    pub kind: OutcomeKind,
    pub nlp_solve_count: usize,
    pub trace: Vec<StepTrace>,
    /// Accepted steps in order, ending at `t = 1` when solved.
    pub schedule: Vec<ScheduleEntry>,
    /// Node whose schedule was replayed, if any.
    pub matched: Option<usize>,
}

enum Step {
    Accepted,
    Rejected,
    Done(OutcomeKind),
}

struct Path<'a, S: ?Sized> {
    solver: &'a mut S,
    prob: &'a MinlpProblem,
    fixed: &'a BTreeMap<usize, f64>,
    anchor: &'a HomotopyAnchor,
    variant: PathVariant,
    f_ub: f64,
    nlp: &'a NlpOptions,
    state: HomotopyState,
    solves: usize,
    trace: Vec<StepTrace>,
    schedule: Vec<ScheduleEntry>,
}

impl<S: NlpSolver + ?Sized> Path<'_, S> {
    fn solve(&mut self, problem: &MinlpProblem, mode_opts: NlpOptions, start: &[f64]) -> Result<NlpResult, HomotopyError> {
        self.solves += 1;
        Ok(self.solver.solve(problem, start, &mode_opts)?)
    }

    fn stall(&self) -> OutcomeKind {
        let snapshot = self.state.last_converged.clone().expect("path always has an accepted point");
        OutcomeKind::Stalled(StallRecord { snapshot, dt: self.state.last_dt() })
    }

    fn attempt(&mut self) -> Result<Step, HomotopyError> {
        let t = self.state.current_t();
        let sub = build_subproblem(self.variant, self.prob, self.fixed, self.anchor, t)?;
        let opts = NlpOptions { objective_mode: sub.mode, ..self.nlp.clone() };
        let start = self.state.last_converged.as_ref().expect("accepted point").point.clone();
        let r = self.solve(&sub.problem, opts, &start)?;
        let optimized = self.variant == PathVariant::BoundTightening;
        let objective = (optimized && r.status == NlpStatus::Optimal).then_some(r.objective);
        self.trace.push(StepTrace { t, status: r.status, objective, closing: false });
        if !r.status.is_success() {
            return Ok(Step::Rejected);
        }
        let dt = t - self.state.last_success_t();
        if t == 1.0 {
            self.schedule.push(ScheduleEntry { t, dt });
            if !optimized {
                return self.close(r.point);
            }
            return Ok(Step::Done(OutcomeKind::Solved(r)));
        }
        if let Some(f) = objective {
            if f > self.f_ub {
                return Ok(Step::Done(OutcomeKind::BoundPruned { t, objective: f }));
            }
        }
        self.schedule.push(ScheduleEntry { t, dt });
        self.state.last_converged = Some(Snapshot { point: r.point, t, objective });
        Ok(Step::Accepted)
    }

    /// Optimality solve once a feasibility path has reached `t = 1`.
    fn close(&mut self, point: Vec<f64>) -> Result<Step, HomotopyError> {
        let sub = build_nlpfx(self.prob, self.fixed, self.anchor, 1.0)?;
        let opts = NlpOptions { objective_mode: sub.mode, ..self.nlp.clone() };
        let r = self.solve(&sub.problem, opts, &point)?;
        let objective = (r.status == NlpStatus::Optimal).then_some(r.objective);
        self.trace.push(StepTrace { t: 1.0, status: r.status, objective, closing: true });
        if r.status == NlpStatus::Optimal {
            Ok(Step::Done(OutcomeKind::Solved(r)))
        } else {
            self.schedule.pop();
            Ok(Step::Done(self.stall()))
        }
    }
}

/// Walks a child node's path from its parent's solution.
///
/// `fixed` holds the binaries fixed above the anchor; the anchor itself is
/// driven by the path. A close enough completed path in `history` is
/// replayed first; the adaptive automaton takes over on the first rejected
/// replay step or when the replayed schedule runs out.
#[allow(clippy::too_many_arguments)]
pub fn run_homotopy<S: NlpSolver + ?Sized>(
    solver: &mut S,
    prob: &MinlpProblem,
    fixed: &BTreeMap<usize, f64>,
    anchor: &HomotopyAnchor,
    variant: PathVariant,
    f_ub: f64,
    config: &HomotopyConfig,
    history: &NodeHistory,
    start: &PathStart,
) -> Result<HomotopyOutcome, HomotopyError> {
    if !(0.0..=1.0).contains(&start.t0) {
        return Err(HomotopyError::Range(start.t0));
    }
    let mut state = HomotopyState::resume(start.t0, start.dt0, config.n_max, config.dt_min);
    let objective = match variant {
        PathVariant::BoundTightening => start.objective,
        PathVariant::Feasibility => None,
    };
    state.last_converged = Some(Snapshot { point: start.point.clone(), t: start.t0, objective });
    let mut path = Path {
        solver,
        prob,
        fixed,
        anchor,
        variant,
        f_ub,
        nlp: &config.nlp,
        state,
        solves: 0,
        trace: Vec::new(),
        schedule: Vec::new(),
    };

    let matched = history.find_match(anchor, config.delta);
    let finish = |path: Path<'_, S>, kind: OutcomeKind| HomotopyOutcome {
        kind,
        nlp_solve_count: path.solves,
        trace: path.trace,
        schedule: path.schedule,
        matched: matched.map(|m| m.0),
    };

    if let Some((_, recorded)) = matched {
        let pending: Vec<f64> = recorded.iter().map(|e| e.t).filter(|&t| t > start.t0).collect();
        if let Some(&first) = pending.first() {
            path.state.t_values[1] = first;
            path.state.dt_values[0] = first - start.t0;
            for (i, &t) in pending.iter().enumerate() {
                match path.attempt()? {
                    Step::Done(kind) => return Ok(finish(path, kind)),
                    Step::Accepted => match pending.get(i + 1) {
                        Some(&next) => path.state.push_step(next - t, next),
                        None => {
                            path.state.next_on_success();
                            break;
                        }
                    },
                    Step::Rejected => {
                        let from = path.state.last_success_t();
                        let dt = (t - from) / 2.0;
                        path.state.push_step(dt, (from + dt).min(1.0));
                        break;
                    }
                }
            }
        }
    }

    loop {
        if path.state.is_stalled() {
            let kind = path.stall();
            return Ok(finish(path, kind));
        }
        match path.attempt()? {
            Step::Done(kind) => return Ok(finish(path, kind)),
            Step::Accepted => {
                path.state.next_on_success();
            }
            Step::Rejected => {
                path.state.next_on_failure();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;
    use crate::nlp::{NlpError, ObjectiveMode};

    /// Decides success from the path parameter, read back from the anchor's
    /// lower bound (anchor binary 0 at position 1, parent 0.5, target 1).
    /// Intermediate objectives are `10 * t`.
    struct Scripted {
        ok: Box<dyn Fn(f64) -> bool>,
        close_ok: bool,
        calls: Vec<f64>,
    }

    impl Scripted {
        fn new(ok: impl Fn(f64) -> bool + 'static) -> Self {
            Scripted { ok: Box::new(ok), close_ok: true, calls: Vec::new() }
        }
    }

    impl NlpSolver for Scripted {
        fn solve(&mut self, prob: &MinlpProblem, start: &[f64], opts: &NlpOptions) -> Result<NlpResult, NlpError> {
            let v = &prob.variables()[1];
            let t = (v.lower - 0.5) / 0.5;
            let closing = opts.objective_mode == ObjectiveMode::Optimize
                && v.lower == v.upper
                && !prob.objective().is_constant()
                && self.calls.last() == Some(&1.0);
            self.calls.push(t);
            let success = if closing { self.close_ok } else { (self.ok)(t) };
            let status = match (success, opts.objective_mode) {
                (false, _) => NlpStatus::Infeasible,
                (true, ObjectiveMode::Optimize) => NlpStatus::Optimal,
                (true, ObjectiveMode::FeasibilityOnly) => NlpStatus::Feasible,
            };
            let mut point = start.to_vec();
            point[1] = v.lower;
            Ok(NlpResult {
                status,
                point,
                objective: 10.0 * t,
                violation: 0.0,
                iterations: 1,
                stationarity: 0.0,
                message: None,
            })
        }
    }

    fn problem() -> MinlpProblem {
        parse_problem("var x cont [0,1]\nvar y bin\nmin x + y").unwrap()
    }

    fn run(
        solver: &mut Scripted,
        variant: PathVariant,
        f_ub: f64,
        history: &NodeHistory,
        start: Option<PathStart>,
    ) -> HomotopyOutcome {
        let anchor = HomotopyAnchor::new(0, 0.5, 1.0).unwrap();
        let start = start.unwrap_or_else(|| PathStart::from_parent(vec![0.2, 0.5], 0.0));
        let out = run_homotopy(
            solver,
            &problem(),
            &BTreeMap::new(),
            &anchor,
            variant,
            f_ub,
            &HomotopyConfig::default(),
            history,
            &start,
        )
        .unwrap();
        assert_eq!(out.nlp_solve_count, solver.calls.len());
        assert_eq!(out.trace.len(), solver.calls.len());
        out
    }

    #[test]
    fn direct_success() {
        let mut s = Scripted::new(|_| true);
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &NodeHistory::new(), None);
        assert!(matches!(out.kind, OutcomeKind::Solved(_)));
        assert_eq!(out.nlp_solve_count, 1);

        let mut s = Scripted::new(|_| true);
        let out = run(&mut s, PathVariant::Feasibility, f64::INFINITY, &NodeHistory::new(), None);
        assert!(matches!(out.kind, OutcomeKind::Solved(_)));
        assert_eq!(out.nlp_solve_count, 2);
        assert!(out.trace[1].closing);
    }

    fn fail_first_direct() -> Scripted {
        let count = std::cell::Cell::new(0);
        Scripted::new(move |t| {
            count.set(count.get() + 1);
            t < 1.0 || count.get() > 1
        })
    }

    #[test]
    fn one_retreat_then_success() {
        let mut s = fail_first_direct();
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &NodeHistory::new(), None);
        assert_eq!(s.calls, vec![1.0, 0.5, 1.0]);
        assert!(matches!(out.kind, OutcomeKind::Solved(_)));
        assert_eq!(
            out.schedule,
            vec![ScheduleEntry { t: 0.5, dt: 0.5 }, ScheduleEntry { t: 1.0, dt: 0.5 }]
        );
    }

    #[test]
    fn feasibility_path_adds_closing_solve() {
        let mut s = fail_first_direct();
        let out = run(&mut s, PathVariant::Feasibility, f64::INFINITY, &NodeHistory::new(), None);
        assert_eq!(s.calls, vec![1.0, 0.5, 1.0, 1.0]);
        assert!(matches!(out.kind, OutcomeKind::Solved(_)));
    }

    #[test]
    fn intermediate_objective_above_bound_prunes() {
        let mut s = fail_first_direct();
        let out = run(&mut s, PathVariant::BoundTightening, 4.0, &NodeHistory::new(), None);
        assert_eq!(out.kind, OutcomeKind::BoundPruned { t: 0.5, objective: 5.0 });
        assert_eq!(out.nlp_solve_count, 2);

        // Never triggered on the feasibility path.
        let mut s = fail_first_direct();
        let out = run(&mut s, PathVariant::Feasibility, 4.0, &NodeHistory::new(), None);
        assert!(matches!(out.kind, OutcomeKind::Solved(_)));
    }

    #[test]
    fn stalls_when_step_too_small() {
        let mut s = Scripted::new(|t| t == 0.0);
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &NodeHistory::new(), None);
        assert_eq!(s.calls, vec![1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625]);
        let OutcomeKind::Stalled(rec) = out.kind else { panic!("expected stall") };
        assert_eq!(rec.snapshot.t, 0.0);
        assert_eq!(rec.snapshot.objective, Some(0.0));
        assert_eq!(rec.snapshot.point, vec![0.2, 0.5]);
        assert_eq!(rec.dt, 0.0078125);
    }

    #[test]
    fn stall_keeps_last_accepted_point() {
        let mut s = Scripted::new(|t| t <= 0.25);
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &NodeHistory::new(), None);
        let OutcomeKind::Stalled(rec) = out.kind else { panic!("expected stall") };
        assert_eq!(rec.snapshot.t, 0.25);
        assert_eq!(rec.snapshot.objective, Some(2.5));
        assert_eq!(rec.snapshot.point[1], 0.625);
        assert!(rec.dt <= 0.01);
    }

    #[test]
    fn failed_closing_solve_stalls_feasibility_path() {
        let mut s = fail_first_direct();
        s.close_ok = false;
        let out = run(&mut s, PathVariant::Feasibility, f64::INFINITY, &NodeHistory::new(), None);
        let OutcomeKind::Stalled(rec) = out.kind else { panic!("expected stall") };
        assert_eq!(rec.snapshot.t, 0.5);
        assert_eq!(rec.snapshot.objective, None);
        assert_eq!(out.schedule, vec![ScheduleEntry { t: 0.5, dt: 0.5 }]);
    }

    fn history_with(schedule: Vec<ScheduleEntry>) -> NodeHistory {
        let mut h = NodeHistory::new();
        h.record(7, HomotopyAnchor::new(0, 0.52, 1.0).unwrap(), schedule);
        h
    }

    #[test]
    fn replays_matched_schedule() {
        let h = history_with(vec![
            ScheduleEntry { t: 0.25, dt: 0.25 },
            ScheduleEntry { t: 0.5, dt: 0.25 },
            ScheduleEntry { t: 1.0, dt: 0.5 },
        ]);
        let mut s = Scripted::new(|_| true);
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &h, None);
        assert_eq!(s.calls, vec![0.25, 0.5, 1.0]);
        assert_eq!(out.matched, Some(7));
        let ts: Vec<f64> = out.schedule.iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn replay_failure_halves_and_continues_adaptively() {
        let h = history_with(vec![
            ScheduleEntry { t: 0.25, dt: 0.25 },
            ScheduleEntry { t: 0.5, dt: 0.25 },
            ScheduleEntry { t: 1.0, dt: 0.5 },
        ]);
        let mut s = Scripted::new(|t| t != 0.5);
        run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &h, None);
        // 0.5 fails: retreat to 0.25 + 0.125; then keep 0.125 (differs
        // from the previous 0.25) and step to 0.5 again, which fails.
        assert_eq!(&s.calls[..4], &[0.25, 0.5, 0.375, 0.5]);
    }

    #[test]
    fn distant_history_is_ignored() {
        let mut h = NodeHistory::new();
        h.record(7, HomotopyAnchor::new(0, 0.9, 1.0).unwrap(), vec![ScheduleEntry { t: 1.0, dt: 1.0 }]);
        let mut s = fail_first_direct();
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &h, None);
        assert_eq!(out.matched, None);
        assert_eq!(s.calls, vec![1.0, 0.5, 1.0]);
    }

    #[test]
    fn resumes_from_intermediate_parameter() {
        let start = PathStart { point: vec![0.2, 0.75], t0: 0.5, dt0: 0.25, objective: Some(5.0) };
        let mut s = Scripted::new(|_| true);
        let out = run(&mut s, PathVariant::BoundTightening, f64::INFINITY, &NodeHistory::new(), Some(start));
        assert_eq!(s.calls, vec![0.75, 1.0]);
        assert!(matches!(out.kind, OutcomeKind::Solved(_)));
    }
}
