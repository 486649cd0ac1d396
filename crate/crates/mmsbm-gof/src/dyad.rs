//! Indexing of ordered off-diagonal node pairs.
//!
//! Every table, membership realization, and design matrix in this crate is
//! indexed over the r = D(D-1) ordered dyads (i, j), i != j, in lexicographic
//! order with the diagonal skipped. Keeping the mapping in one place makes the
//! layouts of all downstream vectors interchangeable.

use serde::{Deserialize, Serialize};

/// Lexicographic enumeration of the ordered dyads of a `D`-node network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadIndex {
    d: usize,
}

impl DyadIndex {
    pub fn new(d: usize) -> Self {
        assert!(d >= 2, "a network needs at least two nodes");
        DyadIndex { d }
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    /// Number of ordered off-diagonal dyads, r = D(D-1).
    pub fn count(&self) -> usize {
        self.d * (self.d - 1)
    }

    /// Flat index of the ordered pair (i, j), 0-based, i != j.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.d && j < self.d);
        i * (self.d - 1) + if j > i { j - 1 } else { j }
    }

    /// Inverse of [`DyadIndex::index`].
    pub fn pair(&self, idx: usize) -> (usize, usize) {
        debug_assert!(idx < self.count());
        let i = idx / (self.d - 1);
        let o = idx % (self.d - 1);
        let j = if o >= i { o + 1 } else { o };
        (i, j)
    }

    /// All dyads in flat-index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.count()).map(move |idx| self.pair(idx))
    }
}
