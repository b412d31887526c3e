use serde::{Deserialize, Serialize};

use super::HomotopyAnchor;

/// One accepted solve on a completed path: the parameter reached and the
/// step that reached it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub t: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CompletedPath {
    node_id: usize,
    anchor: HomotopyAnchor,
    schedule: Vec<ScheduleEntry>,
}

/// Step schedules of nodes whose path reached `t = 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeHistory {
    paths: Vec<CompletedPath>,
}

impl NodeHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Ignored unless the schedule ends at `t = 1`.
    pub fn record(&mut self, node_id: usize, anchor: HomotopyAnchor, schedule: Vec<ScheduleEntry>) {
        if schedule.last().is_some_and(|e| e.t == 1.0) {
            self.paths.push(CompletedPath { node_id, anchor, schedule });
        }
    }

    /// Closest earlier path on the same binary with the same target whose
    /// starting value differs by less than `delta`. Ties go to the
    /// earliest recorded path.
    pub fn find_match(&self, anchor: &HomotopyAnchor, delta: f64) -> Option<(usize, &[ScheduleEntry])> {
        let mut best: Option<(f64, &CompletedPath)> = None;
        for p in &self.paths {
            if p.anchor.branch_index != anchor.branch_index || p.anchor.target != anchor.target {
                continue;
            }
            let gap = (p.anchor.parent_value - anchor.parent_value).abs();
            if gap >= delta {
                continue;
            }
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, p));
            }
        }
        best.map(|(_, p)| (p.node_id, p.schedule.as_slice()))
    }
}
