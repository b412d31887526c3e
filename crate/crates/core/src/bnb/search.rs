use std::collections::BTreeMap;
use std::time::Instant;

use crate::homotopy::{run_homotopy, NodeHistory, OutcomeKind, PathStart};
use crate::model::{fix_and_bound, relax, MinlpProblem};
use crate::nlp::{polish_round, relative_change, AugmentedLagrangian, NlpOptions, NlpResult, NlpSolver, NlpStatus, ObjectiveMode};
use crate::postcheck::{run_postcheck_loop, InfeasibleRecord, PostcheckStats};

use super::{
    branch, is_integral, record_infeasible, select_branch_var, should_prune, Algorithm, BnbError, BnbOptions,
    Incumbent, Node, NodeOutcome, NodeQueue, NodeTrace, ParentSolution, Phase, SolveReport, SolveStatus,
};

/// Mutable state of one branch-and-bound run.
pub struct Search<'a, S: NlpSolver + ?Sized> {
    pub(crate) prob: &'a MinlpProblem,
    pub(crate) algorithm: Algorithm,
    pub(crate) opts: &'a BnbOptions,
    pub(crate) solver: &'a mut S,
    pub(crate) queue: NodeQueue,
    pub(crate) incumbent: Option<Incumbent>,
    pub(crate) history: NodeHistory,
    /// Nodes whose path stalled, awaiting post-check.
    pub(crate) records: Vec<InfeasibleRecord>,
    pub(crate) n_node: usize,
    pub(crate) n_inf: usize,
    pub(crate) n_nlp: usize,
    pub(crate) limit_hit: bool,
    pub(crate) phase: Phase,
    next_id: usize,
    polish_changes: Vec<f64>,
    trace: Vec<NodeTrace>,
    started: Instant,
}

impl<'a, S: NlpSolver + ?Sized> Search<'a, S> {
    pub fn new(solver: &'a mut S, prob: &'a MinlpProblem, algorithm: Algorithm, opts: &'a BnbOptions) -> Self {
        Search {
            prob,
            algorithm,
            opts,
            solver,
            queue: NodeQueue::new(),
            incumbent: None,
            history: NodeHistory::new(),
            records: Vec::new(),
            n_node: 0,
            n_inf: 0,
            n_nlp: 0,
            limit_hit: false,
            phase: Phase::Main,
            next_id: 1,
            polish_changes: Vec::new(),
            trace: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Current upper bound: incumbent objective, else the cutoff, else `inf`.
    pub fn f_ub(&self) -> f64 {
        match &self.incumbent {
            Some(inc) => inc.objective,
            None => self.opts.cutoff.unwrap_or(f64::INFINITY),
        }
    }

    pub fn incumbent(&self) -> Option<&Incumbent> {
        self.incumbent.as_ref()
    }

    fn nlp_opts(&self) -> NlpOptions {
        NlpOptions { objective_mode: ObjectiveMode::Optimize, ..self.opts.homotopy.nlp.clone() }
    }

    /// Solves the relaxation from `start` and acts on the result.
    pub fn solve_root(&mut self, start: &[f64]) -> Result<(), BnbError> {
        let root = Node::root(self.prob.num_binary());
        let relaxed = relax(self.prob);
        let opts = self.nlp_opts();
        let r = self.solver.solve(&relaxed, start, &opts)?;
        self.n_nlp += 1;
        self.n_node += 1;
        if r.status != NlpStatus::Optimal {
            return Err(BnbError::RootFailure { status: r.status, message: r.message });
        }
        self.accept_solution(&root, r, 1, vec![1.0])
    }

    /// Processes queued nodes until the queue empties or a limit is hit.
    pub fn run_queue(&mut self) -> Result<(), BnbError> {
        while let Some(node) = self.queue.pop() {
            let elapsed = self.started.elapsed().as_secs_f64();
            if self.n_node >= self.opts.node_limit || elapsed >= self.opts.time_limit_seconds {
                self.queue.push(node);
                self.limit_hit = true;
                return Ok(());
            }
            self.n_node += 1;
            self.evaluate(node)?;
        }
        Ok(())
    }

    fn evaluate(&mut self, node: Node) -> Result<(), BnbError> {
        let parent = node.parent_solution.clone().expect("child nodes carry their parent solution");
        let anchor = node.anchor.expect("child nodes carry an anchor");
        let Some(variant) = self.algorithm.variant() else {
            let sub = fix_and_bound(self.prob, &node.fixed, &BTreeMap::new())?;
            let opts = self.nlp_opts();
            let r = self.solver.solve(&sub, &parent.point, &opts)?;
            self.n_nlp += 1;
            if r.status == NlpStatus::Optimal {
                return self.accept_solution(&node, r, 1, vec![1.0]);
            }
            self.n_inf += 1;
            self.push_trace(&node, NodeOutcome::Infeasible, None, 1, vec![1.0]);
            return Ok(());
        };

        let f_ub = self.f_ub();
        let start = PathStart::from_parent(parent.point, parent.objective);
        let outcome = run_homotopy(
            &mut *self.solver,
            self.prob,
            &node.fixed,
            &anchor,
            variant,
            f_ub,
            &self.opts.homotopy,
            &self.history,
            &start,
        )?;
        self.n_nlp += outcome.nlp_solve_count;
        let path: Vec<f64> = outcome.trace.iter().map(|s| s.t).collect();
        match outcome.kind {
            OutcomeKind::Solved(r) => {
                self.history.record(node.id, anchor, outcome.schedule);
                self.accept_solution(&node, r, outcome.nlp_solve_count, path)?;
            }
            OutcomeKind::BoundPruned { objective, .. } => {
                self.push_trace(&node, NodeOutcome::PathPruned, Some(objective), outcome.nlp_solve_count, path);
            }
            OutcomeKind::Stalled(stall) => {
                self.n_inf += 1;
                self.records.push(record_infeasible(&node, &stall, variant));
                self.push_trace(&node, NodeOutcome::Stalled, stall.snapshot.objective, outcome.nlp_solve_count, path);
            }
        }
        Ok(())
    }

    /// Prunes, records an incumbent or branches on a solved node.
    pub(crate) fn accept_solution(
        &mut self,
        node: &Node,
        r: NlpResult,
        mut nlp_solves: usize,
        path: Vec<f64>,
    ) -> Result<(), BnbError> {
        let f_ub = self.f_ub();
        let n = self.prob.num_continuous();
        let objective = r.objective;
        if should_prune(objective, f_ub) {
            self.push_trace(node, NodeOutcome::PrunedByBound, Some(objective), nlp_solves, path);
            return Ok(());
        }
        let ys = &r.point[n..];
        if is_integral(ys, self.opts.int_tol) {
            let exact = ys.iter().all(|&v| v == 0.0 || v == 1.0);
            let (mut point, mut value) = (r.point, objective);
            if self.opts.polish && !exact {
                let opts = self.nlp_opts();
                let polished = polish_round(&mut *self.solver, self.prob, &point, self.opts.int_tol, &opts)?;
                self.n_nlp += 1;
                nlp_solves += 1;
                if polished.status == NlpStatus::Optimal {
                    self.polish_changes.push(relative_change(value, polished.objective));
                    if polished.objective < f_ub {
                        point = polished.point;
                        value = polished.objective;
                    }
                }
            }
            self.incumbent = Some(Incumbent { point, objective: value, found_at_node: node.id });
            self.push_trace(node, NodeOutcome::Incumbent, Some(value), nlp_solves, path);
            return Ok(());
        }
        let index = select_branch_var(ys, self.opts.int_tol)?;
        let parent_value = ys[index];
        let parent = ParentSolution { point: r.point, objective };
        let (zero, one) = branch(node, index, parent, parent_value, self.next_id)?;
        self.next_id += 2;
        self.queue.push(zero);
        self.queue.push(one);
        self.push_trace(node, NodeOutcome::Branched { index }, Some(objective), nlp_solves, path);
        Ok(())
    }

    pub(crate) fn push_trace(
        &mut self,
        node: &Node,
        outcome: NodeOutcome,
        objective: Option<f64>,
        nlp_solves: usize,
        path: Vec<f64>,
    ) {
        if !self.opts.record_trace {
            return;
        }
        self.trace.push(NodeTrace {
            id: node.id,
            parent: node.parent,
            depth: node.depth,
            anchor: node.anchor.map(|a| (a.branch_index, a.target)),
            phase: self.phase,
            outcome,
            objective,
            nlp_solves,
            path,
        });
    }

    fn finish(self, post: PostcheckStats) -> SolveReport {
        let status = if self.limit_hit {
            SolveStatus::Limit
        } else if self.incumbent.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        };
        let lower_bound = if self.limit_hit { self.queue.min_key() } else { None };
        SolveReport {
            algorithm: self.algorithm,
            status,
            objective: self.incumbent.as_ref().map(|i| i.objective),
            point: self.incumbent.as_ref().map(|i| i.point.clone()),
            found_at_node: self.incumbent.as_ref().map(|i| i.found_at_node),
            n_node: self.n_node,
            n_inf: self.n_inf,
            n_nlp: self.n_nlp,
            n_nlp_post: post.n_nlp_post,
            n_inf_post: post.n_inf_post,
            t_post_seconds: post.t_post_seconds,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            lower_bound,
            polish_changes: self.polish_changes,
            trace: self.opts.record_trace.then_some(self.trace),
        }
    }
}

/// Solves `prob` with a caller-supplied NLP solver.
pub fn solve_minlp_with<S: NlpSolver + ?Sized>(
    solver: &mut S,
    prob: &MinlpProblem,
    algorithm: Algorithm,
    start: &[f64],
    opts: &BnbOptions,
) -> Result<SolveReport, BnbError> {
    opts.validate()?;
    if start.len() != prob.num_vars() {
        return Err(BnbError::StartLength { got: start.len(), expected: prob.num_vars() });
    }
    let mut search = Search::new(solver, prob, algorithm, opts);
    search.solve_root(start)?;
    search.run_queue()?;
    let post = if algorithm.variant().is_some() && opts.postcheck && !search.limit_hit {
        run_postcheck_loop(&mut search)?
    } else {
        PostcheckStats { n_inf_post: search.records.len(), ..PostcheckStats::default() }
    };
    Ok(search.finish(post))
}

/// Solves `prob` with the default augmented-Lagrangian NLP solver.
pub fn solve_minlp(
    prob: &MinlpProblem,
    algorithm: Algorithm,
    start: &[f64],
    opts: &BnbOptions,
) -> Result<SolveReport, BnbError> {
    solve_minlp_with(&mut AugmentedLagrangian::default(), prob, algorithm, start, opts)
}
