//! Second look at nodes whose homotopy path stalled.
//!
//! A bound-tightening record whose last optimum already exceeds the final
//! upper bound is dropped without solving. Every other record is re-run
//! from its last accepted point with a far larger step budget; a path that
//! now reaches `t = 1` is fed back into branch and bound.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bnb::{BnbError, Node, NodeOutcome, Phase, Search};
use crate::homotopy::{
    run_homotopy, HomotopyConfig, HomotopyError, HomotopyOutcome, NodeHistory, OutcomeKind, PathStart, PathVariant,
};
use crate::model::MinlpProblem;
use crate::nlp::NlpSolver;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleRecord {
    pub node: Node,
    pub last_point: Vec<f64>,
    /// Objective at `last_point`; absent for feasibility paths.
    pub last_objective: Option<f64>,
    pub t_v1: f64,
    pub dt_v2: f64,
    pub variant: PathVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PostDecision {
    Skip,
    Refine,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PostcheckStats {
    pub t_post_seconds: f64,
    pub n_inf_post: usize,
    pub n_nlp_post: usize,
    pub skipped: usize,
    pub refined: usize,
}

pub fn post_check(rec: &InfeasibleRecord, f_ub: f64) -> PostDecision {
    match (rec.variant, rec.last_objective) {
        (PathVariant::BoundTightening, Some(f)) if f > f_ub => PostDecision::Skip,
        _ => PostDecision::Refine,
    }
}

/// Re-runs the record's path from its last accepted point with the
/// refinement budget of `config`.
pub fn refine<S: NlpSolver + ?Sized>(
    solver: &mut S,
    prob: &MinlpProblem,
    rec: &InfeasibleRecord,
    f_ub: f64,
    config: &HomotopyConfig,
    history: &NodeHistory,
) -> Result<HomotopyOutcome, HomotopyError> {
    let anchor = rec.node.anchor.expect("only child nodes are recorded");
    let start = PathStart {
        point: rec.last_point.clone(),
        t0: rec.t_v1,
        dt0: rec.dt_v2,
        objective: rec.last_objective,
    };
    run_homotopy(solver, prob, &rec.node.fixed, &anchor, rec.variant, f_ub, &config.refinement(), history, &start)
}

/// Drains the set-aside records in ascending node id, re-entering the
/// search whenever a refined node needs branching.
pub fn run_postcheck_loop<S: NlpSolver + ?Sized>(search: &mut Search<'_, S>) -> Result<PostcheckStats, BnbError> {
    let started = Instant::now();
    let nlp_before = search.n_nlp;
    let mut stats = PostcheckStats::default();
    search.phase = Phase::Post;
    while !search.records.is_empty() {
        if started.elapsed().as_secs_f64() >= search.opts.post_time_limit_seconds {
            search.limit_hit = true;
            stats.n_inf_post += search.records.len();
            search.records.clear();
            break;
        }
        let pos = (0..search.records.len())
            .min_by_key(|&i| search.records[i].node.id)
            .expect("records not empty");
        let rec = search.records.remove(pos);
        let f_ub = search.f_ub();
        if post_check(&rec, f_ub) == PostDecision::Skip {
            stats.skipped += 1;
            search.push_trace(&rec.node, NodeOutcome::Skipped, rec.last_objective, 0, Vec::new());
            continue;
        }
        stats.refined += 1;
        let outcome = refine(&mut *search.solver, search.prob, &rec, f_ub, &search.opts.homotopy, &search.history)?;
        search.n_nlp += outcome.nlp_solve_count;
        let path: Vec<f64> = outcome.trace.iter().map(|s| s.t).collect();
        match outcome.kind {
            OutcomeKind::Solved(r) => {
                let anchor = rec.node.anchor.expect("only child nodes are recorded");
                search.history.record(rec.node.id, anchor, outcome.schedule);
                search.accept_solution(&rec.node, r, outcome.nlp_solve_count, path)?;
                search.run_queue()?;
                if search.limit_hit {
                    stats.n_inf_post += search.records.len();
                    search.records.clear();
                    break;
                }
            }
            OutcomeKind::BoundPruned { objective, .. } => {
                search.push_trace(&rec.node, NodeOutcome::PathPruned, Some(objective), outcome.nlp_solve_count, path);
            }
            OutcomeKind::Stalled(stall) => {
                stats.n_inf_post += 1;
                search.push_trace(&rec.node, NodeOutcome::Stalled, stall.snapshot.objective, outcome.nlp_solve_count, path);
            }
        }
    }
    stats.n_nlp_post = search.n_nlp - nlp_before;
    stats.t_post_seconds = started.elapsed().as_secs_f64();
    Ok(stats)
}
