//! Per-realization design matrices and their sufficient statistics.
//!
//! A membership realization assigns every ordered dyad a (sender block,
//! receiver block) class. The design matrix A has 2K rows (K sender rows,
//! then K receiver rows); the column of a dyad in class (k, l) is the
//! indicator of sender row k plus the indicator of receiver row l. A is
//! stored by class assignment rather than densely: the class structure is
//! what every downstream algorithm consumes. Diagonal cells are excluded so
//! fibers stay finite.

use serde::{Deserialize, Serialize};

use crate::dyad::DyadIndex;
use crate::error::{Error, Result};
use crate::mmsbm::MembershipRealization;

/// The 2K x r design matrix of one membership realization, stored by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    k: usize,
    dyads: DyadIndex,
    /// (sender block, receiver block) per dyad, 0-based.
    class_of: Vec<(usize, usize)>,
    /// Dyad indices per class, indexed by k * K + l; empty classes stay
    /// empty so row indexing is stable across realizations.
    members: Vec<Vec<usize>>,
}

impl DesignMatrix {
    pub fn block_count(&self) -> usize {
        self.k
    }

    pub fn dyads(&self) -> DyadIndex {
        self.dyads
    }

    pub fn table_len(&self) -> usize {
        self.dyads.count()
    }

    /// The (sender, receiver) class of one dyad.
    pub fn class(&self, dyad: usize) -> (usize, usize) {
        self.class_of[dyad]
    }

    pub fn class_of(&self) -> &[(usize, usize)] {
        &self.class_of
    }

    /// Dyads of class (k, l), lexicographically ordered.
    pub fn class_members(&self, send: usize, recv: usize) -> &[usize] {
        &self.members[send * self.k + recv]
    }

    /// Classes with at least one dyad, in (send, recv) lexicographic order.
    pub fn nonempty_classes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in 0..self.k {
            for r in 0..self.k {
                if !self.members[s * self.k + r].is_empty() {
                    out.push((s, r));
                }
            }
        }
        out
    }

    /// Dense 2K x r form: K sender rows followed by K receiver rows.
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let r = self.table_len();
        let mut dense = vec![vec![0i64; r]; 2 * self.k];
        for (d, &(s, rv)) in self.class_of.iter().enumerate() {
            dense[s][d] = 1;
            dense[self.k + rv][d] = 1;
        }
        dense
    }

    /// Dense CSV emission for diffing against external toric software.
    pub fn to_dense_csv(&self) -> String {
        let mut out = String::new();
        for row in self.to_dense() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sender and receiver block margins of a table: the sufficient statistic
/// A u of the log-linear form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuffStat {
    pub sender: Vec<u64>,
    pub receiver: Vec<u64>,
}

impl SuffStat {
    pub fn total(&self) -> u64 {
        self.sender.iter().sum()
    }
}

/// Build the design matrix of one membership realization.
pub fn build_design(real: &MembershipRealization, k: usize) -> Result<DesignMatrix> {
    if k == 0 {
        return Err(Error::Domain("block count must be at least 1".into()));
    }
    let dyads = real.dyads();
    let mut class_of = Vec::with_capacity(dyads.count());
    let mut members = vec![Vec::new(); k * k];
    for d in 0..dyads.count() {
        let (s, r) = real.class(d);
        if s >= k || r >= k {
            return Err(Error::Domain(format!(
                "dyad {d} has class ({s},{r}) outside 0..{k}"
            )));
        }
        class_of.push((s, r));
        members[s * k + r].push(d);
    }
    Ok(DesignMatrix {
        k,
        dyads,
        class_of,
        members,
    })
}

/// The margins A u of a dyad-indexed table.
pub fn sufficient_statistic(a: &DesignMatrix, table: &[u32]) -> Result<SuffStat> {
    if table.len() != a.table_len() {
        return Err(Error::Shape(format!(
            "table has {} cells, design matrix expects {}",
            table.len(),
            a.table_len()
        )));
    }
    let mut sender = vec![0u64; a.block_count()];
    let mut receiver = vec![0u64; a.block_count()];
    for (d, &v) in table.iter().enumerate() {
        let (s, r) = a.class(d);
        sender[s] += v as u64;
        receiver[r] += v as u64;
    }
    Ok(SuffStat { sender, receiver })
}
