//! Best-first branch and bound over the binary block.
//!
//! Child nodes are solved either directly (plain branch and bound) or by
//! walking a homotopy path from the parent's relaxed optimum. Paths that
//! stall are set aside and revisited by [`crate::postcheck`] once the main
//! search has drained its queue.

mod queue;
mod report;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homotopy::{HomotopyAnchor, HomotopyConfig, HomotopyError, PathVariant, StallRecord};
use crate::model::ModelError;
use crate::nlp::{NlpError, NlpStatus};
use crate::postcheck::InfeasibleRecord;

pub use queue::NodeQueue;
pub use report::{Incumbent, NodeOutcome, NodeTrace, Phase, SolveReport, SolveStatus};
pub use search::{solve_minlp, solve_minlp_with, Search};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BnbError {
    #[error("root relaxation failed ({status:?}){}", .message.as_deref().map(|m| format!(": {m}")).unwrap_or_default())]
    RootFailure { status: NlpStatus, message: Option<String> },
    #[error("no fractional binary to branch on")]
    NoFractional,
    #[error("start point has length {got}, problem has {expected} variables")]
    StartLength { got: usize, expected: usize },
    #[error("invalid option: {0}")]
    Options(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nlp(#[from] NlpError),
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "bb")]
    Bb,
    #[serde(rename = "hcbb-fp")]
    HcbbFp,
    #[serde(rename = "hcbb-rb")]
    HcbbRb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bb, Algorithm::HcbbFp, Algorithm::HcbbRb];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Bb => "bb",
            Algorithm::HcbbFp => "hcbb-fp",
            Algorithm::HcbbRb => "hcbb-rb",
        }
    }

    /// Path variant used for child nodes, `None` for plain branch and bound.
    pub fn variant(self) -> Option<PathVariant> {
        match self {
            Algorithm::Bb => None,
            Algorithm::HcbbFp => Some(PathVariant::Feasibility),
            Algorithm::HcbbRb => Some(PathVariant::BoundTightening),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = BnbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bb" => Ok(Algorithm::Bb),
            "hcbb-fp" | "fp" => Ok(Algorithm::HcbbFp),
            "hcbb-rb" | "rb" => Ok(Algorithm::HcbbRb),
            other => Err(BnbError::Options(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    pub int_tol: f64,
    pub homotopy: HomotopyConfig,
    pub node_limit: usize,
    pub time_limit_seconds: f64,
    /// Wall-clock budget of the post-check pass.
    pub post_time_limit_seconds: f64,
    /// Upper bound assumed before any incumbent exists.
    pub cutoff: Option<f64>,
    /// Re-solve near-integral incumbents with their binaries rounded.
    pub polish: bool,
    pub postcheck: bool,
    pub record_trace: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            int_tol: 1e-5,
            homotopy: HomotopyConfig::default(),
            node_limit: 10_000,
            time_limit_seconds: 3600.0,
            post_time_limit_seconds: 3600.0,
            cutoff: None,
            polish: true,
            postcheck: true,
            record_trace: false,
        }
    }
}

impl BnbOptions {
    pub fn validate(&self) -> Result<(), BnbError> {
        if !(self.int_tol > 0.0 && self.int_tol < 0.5) {
            return Err(BnbError::Options("int_tol must lie in (0, 0.5)".into()));
        }
        let h = &self.homotopy;
        if h.n_max < 2 {
            return Err(BnbError::Options("max steps must exceed 1".into()));
        }
        if !(h.dt_min > 0.0 && h.dt_min < 1.0) {
            return Err(BnbError::Options("dt_min must lie in (0, 1)".into()));
        }
        if !(h.delta >= 0.0) {
            return Err(BnbError::Options("delta must be non-negative".into()));
        }
        if !(self.time_limit_seconds >= 0.0) || !(self.post_time_limit_seconds >= 0.0) {
            return Err(BnbError::Options("time limits must be non-negative".into()));
        }
        h.nlp.validate()?;
        Ok(())
    }
}

/// The parent's relaxed optimum, used as warm start and queue key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSolution {
    pub point: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Fixed binaries (binary-block index to 0 or 1), anchor included.
    pub fixed: BTreeMap<usize, f64>,
    pub relaxed: BTreeSet<usize>,
    pub anchor: Option<HomotopyAnchor>,
    pub parent_solution: Option<ParentSolution>,
}

impl Node {
    pub fn root(num_binary: usize) -> Node {
        Node {
            id: 0,
            parent: None,
            depth: 0,
            fixed: BTreeMap::new(),
            relaxed: (0..num_binary).collect(),
            anchor: None,
            parent_solution: None,
        }
    }

    /// Best-first key: the parent's objective, `-inf` at the root.
    pub fn key(&self) -> f64 {
        self.parent_solution.as_ref().map_or(f64::NEG_INFINITY, |p| p.objective)
    }
}

fn fractional_distance(v: f64) -> f64 {
    (v - v.round()).abs()
}

/// Fractional entry closest to one half, lowest index on ties.
pub fn select_branch_var(values: &[f64], epsilon_int: f64) -> Result<usize, BnbError> {
    const TIE: f64 = 1e-12;
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if fractional_distance(v) <= epsilon_int {
            continue;
        }
        let d = (v - 0.5).abs();
        if best.is_none_or(|(_, b)| d < b - TIE) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(BnbError::NoFractional)
}

pub fn is_integral(values: &[f64], epsilon_int: f64) -> bool {
    values.iter().all(|&v| fractional_distance(v) <= epsilon_int && (-0.5..1.5).contains(&v))
}

pub fn should_prune(node_objective: f64, f_ub: f64) -> bool {
    node_objective >= f_ub
}

/// Children fixing binary `index` at 0 and at 1, in that order, with ids
/// `first_id` and `first_id + 1`.
pub fn branch(
    node: &Node,
    index: usize,
    parent: ParentSolution,
    parent_value: f64,
    first_id: usize,
) -> Result<(Node, Node), BnbError> {
    let child = |target: f64, id: usize| -> Result<Node, BnbError> {
        let mut fixed = node.fixed.clone();
        fixed.insert(index, target);
        let mut relaxed = node.relaxed.clone();
        relaxed.remove(&index);
        Ok(Node {
            id,
            parent: Some(node.id),
            depth: node.depth + 1,
            fixed,
            relaxed,
            anchor: Some(HomotopyAnchor::new(index, parent_value, target)?),
            parent_solution: Some(parent.clone()),
        })
    };
    Ok((child(0.0, first_id)?, child(1.0, first_id + 1)?))
}

/// Set-aside entry for a node whose path stalled.
pub fn record_infeasible(node: &Node, stall: &StallRecord, variant: PathVariant) -> InfeasibleRecord {
    InfeasibleRecord {
        node: node.clone(),
        last_point: stall.snapshot.point.clone(),
        last_objective: stall.snapshot.objective,
        t_v1: stall.snapshot.t,
        dt_v2: stall.dt,
        variant,
    }
}
