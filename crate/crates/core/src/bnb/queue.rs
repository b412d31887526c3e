use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Node;

struct Entry(Node);

impl Entry {
    fn rank(&self) -> (f64, usize) {
        (self.0.key(), self.0.id)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest (key, id).
    fn cmp(&self, other: &Self) -> Ordering {
        let (ka, ia) = self.rank();
        let (kb, ib) = other.rank();
        kb.total_cmp(&ka).then(ib.cmp(&ia))
    }
}

/// Active nodes, smallest parent objective first, then lowest id.
#[derive(Default)]
pub struct NodeQueue {
    heap: BinaryHeap<Entry>,
}

impl NodeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: Node) {
        self.heap.push(Entry(node));
    }

    pub fn pop(&mut self) -> Option<Node> {
        self.heap.pop().map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Smallest key among active nodes.
    pub fn min_key(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.key())
    }
}

impl std::fmt::Debug for NodeQueue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NodeQueue").field("len", &self.len()).finish()
    }
}
