use serde::{Deserialize, Serialize};

use super::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub point: Vec<f64>,
    pub objective: f64,
    pub found_at_node: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Search completed with an incumbent.
    Optimal,
    /// Search completed without any integer-feasible point.
    Infeasible,
    /// A node or time limit stopped the search.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Main,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeOutcome {
    Branched { index: usize },
    Incumbent,
    PrunedByBound,
    /// A path step's optimum already exceeded the upper bound.
    PathPruned,
    Infeasible,
    Stalled,
    /// Post-check discarded the node without solving.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// `(binary index, target)` of the branching decision creating the node.
    pub anchor: Option<(usize, f64)>,
    pub phase: Phase,
    pub outcome: NodeOutcome,
    pub objective: Option<f64>,
    pub nlp_solves: usize,
    /// Path parameters of every solve issued for the node.
    pub path: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub point: Option<Vec<f64>>,
    pub found_at_node: Option<usize>,
    pub n_node: usize,
    pub n_inf: usize,
    pub n_nlp: usize,
    /// Solves issued during the post-check pass (included in `n_nlp`).
    pub n_nlp_post: usize,
    pub n_inf_post: usize,
    pub t_post_seconds: f64,
    pub wall_seconds: f64,
    /// Smallest open key when a limit stopped the search.
    pub lower_bound: Option<f64>,
    /// Relative objective change of each rounding re-solve.
    pub polish_changes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<NodeTrace>>,
}

impl SolveReport {
    pub fn incumbent(&self) -> Option<Incumbent> {
        Some(Incumbent {
            point: self.point.clone()?,
            objective: self.objective?,
            found_at_node: self.found_at_node?,
        })
    }
}
