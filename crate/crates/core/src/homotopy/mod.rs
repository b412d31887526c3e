//! Continuation from a parent node's relaxed optimum to a child node's
//! branching decision.
//!
//! The branched binary follows `(1 - t) * parent + t * target` as `t` moves
//! from 0 to 1. Two path variants exist: [`PathVariant::Feasibility`]
//! pins the binary at that value and only looks for feasible points, and
//! [`PathVariant::BoundTightening`] keeps the original objective while
//! squeezing the binary's interval toward its target.

mod history;
mod run;
mod steps;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{fix_and_bound, Expr, MinlpProblem, ModelError};
use crate::nlp::{NlpError, ObjectiveMode};

pub use history::{NodeHistory, ScheduleEntry};
pub use run::{run_homotopy, HomotopyConfig, HomotopyOutcome, OutcomeKind, PathStart, StallRecord, StepTrace};
pub use steps::{HomotopyState, Snapshot};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomotopyError {
    #[error("homotopy parameter {0} is outside [0,1]")]
    Range(f64),
    #[error("anchor parent value {0} is not strictly between 0 and 1")]
    ParentValue(f64),
    #[error("anchor target {0} is not 0 or 1")]
    Target(f64),
    #[error("fixed-vector slot {slot} out of range for length {len}")]
    Slot { slot: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nlp(#[from] NlpError),
}

/// The binary a child node was branched on, where its parent left it and
/// where the child needs it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyAnchor {
    /// Index within the binary block.
    pub branch_index: usize,
    pub parent_value: f64,
    pub target: f64,
}

impl HomotopyAnchor {
    pub fn new(branch_index: usize, parent_value: f64, target: f64) -> Result<Self, HomotopyError> {
        if !(parent_value > 0.0 && parent_value < 1.0) {
            return Err(HomotopyError::ParentValue(parent_value));
        }
        if target != 0.0 && target != 1.0 {
            return Err(HomotopyError::Target(target));
        }
        Ok(HomotopyAnchor { branch_index, parent_value, target })
    }

    /// Interval allowed for the anchor binary under bound tightening.
    pub fn tightened_box(&self, t: f64) -> Result<(f64, f64), HomotopyError> {
        let v = homotopy_value(self, t)?;
        Ok(if self.target == 1.0 { (v, 1.0) } else { (0.0, v) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathVariant {
    /// Pin the anchor and solve feasibility problems along the path, then
    /// optimize once at the end.
    Feasibility,
    /// Shrink the anchor's interval with the original objective kept.
    BoundTightening,
}

/// A continuous problem plus the mode it should be solved in.
#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub problem: MinlpProblem,
    pub mode: ObjectiveMode,
}

fn check_t(t: f64) -> Result<(), HomotopyError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(HomotopyError::Range(t))
    }
}

pub fn homotopy_value(anchor: &HomotopyAnchor, t: f64) -> Result<f64, HomotopyError> {
    check_t(t)?;
    if t == 1.0 {
        return Ok(anchor.target);
    }
    Ok((1.0 - t) * anchor.parent_value + t * anchor.target)
}

/// Replaces entry `slot` of a fixed-binary vector with the homotopy value.
pub fn fixed_vector(
    y_fixed: &[f64],
    slot: usize,
    anchor: &HomotopyAnchor,
    t: f64,
) -> Result<Vec<f64>, HomotopyError> {
    if slot >= y_fixed.len() {
        return Err(HomotopyError::Slot { slot, len: y_fixed.len() });
    }
    let mut out = y_fixed.to_vec();
    out[slot] = homotopy_value(anchor, t)?;
    Ok(out)
}

fn pinned(
    fixed: &BTreeMap<usize, f64>,
    anchor: &HomotopyAnchor,
    t: f64,
) -> Result<BTreeMap<usize, f64>, HomotopyError> {
    let mut out = fixed.clone();
    out.insert(anchor.branch_index, homotopy_value(anchor, t)?);
    Ok(out)
}

/// Ancestor fixings plus the anchor pinned at its homotopy value; the
/// remaining binaries are relaxed and the original objective is kept.
pub fn build_nlpfx(
    prob: &MinlpProblem,
    fixed: &BTreeMap<usize, f64>,
    anchor: &HomotopyAnchor,
    t: f64,
) -> Result<Subproblem, HomotopyError> {
    let problem = fix_and_bound(prob, &pinned(fixed, anchor, t)?, &BTreeMap::new())?;
    Ok(Subproblem { problem, mode: ObjectiveMode::Optimize })
}

/// As [`build_nlpfx`] with a constant objective, solved for feasibility.
pub fn build_nlpfp(
    prob: &MinlpProblem,
    fixed: &BTreeMap<usize, f64>,
    anchor: &HomotopyAnchor,
    t: f64,
) -> Result<Subproblem, HomotopyError> {
    let pinned_prob = fix_and_bound(prob, &pinned(fixed, anchor, t)?, &BTreeMap::new())?;
    let problem = pinned_prob.with_objective(Expr::constant(0.0))?;
    Ok(Subproblem { problem, mode: ObjectiveMode::FeasibilityOnly })
}

/// Ancestor fixings plus the anchor restricted to its tightened interval.
pub fn build_nlprb(
    prob: &MinlpProblem,
    fixed: &BTreeMap<usize, f64>,
    anchor: &HomotopyAnchor,
    t: f64,
) -> Result<Subproblem, HomotopyError> {
    let mut fixed = fixed.clone();
    fixed.remove(&anchor.branch_index);
    let problem = if t == 1.0 {
        fixed.insert(anchor.branch_index, anchor.target);
        fix_and_bound(prob, &fixed, &BTreeMap::new())?
    } else {
        let mut boxes = BTreeMap::new();
        boxes.insert(anchor.branch_index, anchor.tightened_box(t)?);
        fix_and_bound(prob, &fixed, &boxes)?
    };
    Ok(Subproblem { problem, mode: ObjectiveMode::Optimize })
}

/// Builder for one point on the path of the given variant.
pub fn build_subproblem(
    variant: PathVariant,
    prob: &MinlpProblem,
    fixed: &BTreeMap<usize, f64>,
    anchor: &HomotopyAnchor,
    t: f64,
) -> Result<Subproblem, HomotopyError> {
    match variant {
        PathVariant::Feasibility => build_nlpfp(prob, fixed, anchor, t),
        PathVariant::BoundTightening => build_nlprb(prob, fixed, anchor, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_problem, VarKind};

    fn anchor(parent: f64, target: f64) -> HomotopyAnchor {
        HomotopyAnchor::new(1, parent, target).unwrap()
    }

    #[test]
    fn value_examples() {
        assert_eq!(homotopy_value(&anchor(0.4, 1.0), 0.5).unwrap(), 0.7);
        assert_eq!(homotopy_value(&anchor(0.4, 1.0), 0.0).unwrap(), 0.4);
        assert_eq!(homotopy_value(&anchor(0.4, 0.0), 1.0).unwrap(), 0.0);
        assert!(matches!(homotopy_value(&anchor(0.4, 0.0), 1.5), Err(HomotopyError::Range(_))));
        assert!(matches!(homotopy_value(&anchor(0.4, 0.0), -0.1), Err(HomotopyError::Range(_))));
    }

    #[test]
    fn fixed_vector_examples() {
        let a = anchor(0.6, 0.0);
        assert_eq!(fixed_vector(&[1.0, 0.0], 1, &a, 0.5).unwrap(), vec![1.0, 0.3]);
        assert_eq!(fixed_vector(&[1.0, 0.0], 1, &a, 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(fixed_vector(&[1.0, 0.0], 1, &a, 0.0).unwrap(), vec![1.0, 0.6]);
        assert!(fixed_vector(&[1.0], 1, &a, 0.0).is_err());
    }

    #[test]
    fn anchor_validation() {
        assert!(HomotopyAnchor::new(0, 0.0, 1.0).is_err());
        assert!(HomotopyAnchor::new(0, 1.0, 1.0).is_err());
        assert!(HomotopyAnchor::new(0, 0.5, 0.5).is_err());
    }

    #[test]
    fn bound_tightening_boxes() {
        assert_eq!(anchor(0.4, 1.0).tightened_box(0.25).unwrap(), (0.55, 1.0));
        assert_eq!(anchor(0.4, 0.0).tightened_box(0.5).unwrap(), (0.0, 0.2));
        assert_eq!(anchor(0.4, 0.0).tightened_box(1.0).unwrap(), (0.0, 0.0));
    }

    fn sample() -> MinlpProblem {
        parse_problem(
            "var x cont [0,3]\nvar a bin\nvar b bin\nvar c bin\nmin (x - 1)^2 + a + b + c\nst g: x - a - b - c <= 0",
        )
        .unwrap()
    }

    #[test]
    fn builders_pin_relax_and_box() {
        let prob = sample();
        let mut fixed = BTreeMap::new();
        fixed.insert(0, 1.0);
        fixed.insert(1, 0.0);
        let a = anchor(0.6, 0.0);

        let fx = build_nlpfx(&prob, &fixed, &a, 0.5).unwrap();
        let v = fx.problem.variables();
        assert_eq!((v[1].lower, v[1].upper), (1.0, 1.0));
        assert_eq!((v[2].lower, v[2].upper), (0.3, 0.3));
        assert_eq!((v[3].lower, v[3].upper), (0.0, 1.0));
        assert!(v.iter().all(|s| s.kind == VarKind::Continuous));
        assert_eq!(fx.mode, ObjectiveMode::Optimize);
        assert_eq!(fx.problem.objective(), prob.objective());

        let fp = build_nlpfp(&prob, &fixed, &a, 0.5).unwrap();
        assert!(fp.problem.objective().is_constant());
        assert_eq!(fp.mode, ObjectiveMode::FeasibilityOnly);

        let rb = build_nlprb(&prob, &fixed, &a, 0.5).unwrap();
        let v = rb.problem.variables();
        assert_eq!((v[2].lower, v[2].upper), (0.0, 0.3));
        assert_eq!(rb.problem.objective(), prob.objective());
    }

    #[test]
    fn endpoint_equivalence() {
        let prob = sample();
        let mut fixed = BTreeMap::new();
        fixed.insert(1, 0.0);
        let a = anchor(0.6, 0.0);
        let rb = build_nlprb(&prob, &fixed, &a, 1.0).unwrap();
        let fx = build_nlpfx(&prob, &fixed, &a, 1.0).unwrap();
        assert_eq!(rb.problem, fx.problem);
        let direct = fix_and_bound(&prob, &fixed, &BTreeMap::new()).unwrap();
        assert_eq!(fx.problem, direct);
    }
}
