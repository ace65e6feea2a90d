//! Temporal personalized PageRank.
//!
//! A walk from `v` continues with probability `alpha` along a transition row
//! that favours recent interactions (the k-th most recent neighbor gets weight
//! proportional to `beta^k`) and otherwise restarts at `v`. Each node keeps
//! only its `k_s` highest-scoring targets.

mod oracle;
mod push;
mod row;
mod snapshot;
mod store;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Seq};

pub use oracle::{agreement, tppr_dense_oracle, Agreement, DenseOracle, OracleInit, OracleRun};
pub use push::{push_estimate, GraphRows, RowSource};
pub use row::{transition_row, TransitionRow};
pub use snapshot::TpprSnapshot;
pub use store::{TpprStore, UpdateStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpprConfig {
    /// Continuation probability; restart mass is `1 - alpha`.
    pub alpha: f64,
    /// Recency decay base.
    pub beta: f64,
    pub k_s: usize,
    /// L1 change at which the dense oracle stops.
    pub convergence_eps: f64,
    /// Iteration cap for the dense oracle.
    pub max_iters: usize,
    /// Residual threshold of the sparse forward push.
    pub push_eps: f64,
    /// Keep the owner's own score among its top entries.
    pub include_self: bool,
    /// Vectors computed this many update batches ago are recomputed on read.
    /// Zero disables age-based refresh (only neighbors of touched nodes refresh).
    pub stale_batches: u64,
    /// Largest graph the dense oracle accepts.
    pub oracle_cap: usize,
}

impl Default for TpprConfig {
    fn default() -> Self {
        TpprConfig {
            alpha: 0.5,
            beta: 0.5,
            k_s: 20,
            convergence_eps: 1e-6,
            max_iters: 1000,
            push_eps: 1e-5,
            include_self: true,
            stale_batches: 1,
            oracle_cap: 2000,
        }
    }
}

impl TpprConfig {
    pub fn new(alpha: f64, beta: f64, k_s: usize) -> Self {
        TpprConfig {
            alpha,
            beta,
            k_s,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.95) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 0.95], got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.k_s == 0 {
            return Err(Error::Config("k_s must be at least 1".into()));
        }
        if !(self.convergence_eps > 0.0) || !(self.push_eps > 0.0) {
            return Err(Error::Config(
                "convergence and push thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Top-`k_s` slice of one node's T-PPR vector, stored sorted by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct TpprVector {
    pub owner: NodeId,
    entries: Vec<(NodeId, f64)>,
    pub as_of_seq: Seq,
}

impl TpprVector {
    /// Keeps the `k` highest scores of `full` (ties by node id ascending).
    pub fn from_scores(
        owner: NodeId,
        mut full: Vec<(NodeId, f64)>,
        k: usize,
        include_self: bool,
        as_of_seq: Seq,
    ) -> Self {
        full.retain(|&(n, s)| s > 0.0 && (include_self || n != owner));
        select_top(&mut full, k);
        full.sort_unstable_by_key(|&(n, _)| n);
        TpprVector {
            owner,
            entries: full,
            as_of_seq,
        }
    }

    pub fn empty(owner: NodeId) -> Self {
        TpprVector {
            owner,
            entries: Vec::new(),
            as_of_seq: 0,
        }
    }

    /// Entries sorted by node id.
    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score(&self, n: NodeId) -> Option<f64> {
        self.entries
            .binary_search_by_key(&n, |&(m, _)| m)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|&(_, s)| s).sum()
    }

    pub fn max_score(&self) -> f64 {
        self.entries.iter().map(|&(_, s)| s).fold(0.0, f64::max)
    }

    /// Entries by descending score, ties by node id ascending.
    pub fn top_k_nodes(&self) -> Vec<(NodeId, f64)> {
        let mut v = self.entries.clone();
        v.sort_by(rank_order);
        v
    }

    /// The `k` best entries of this vector.
    pub fn truncated(&self, k: usize) -> TpprVector {
        if self.entries.len() <= k {
            return self.clone();
        }
        let mut v = self.entries.clone();
        select_top(&mut v, k);
        v.sort_unstable_by_key(|&(n, _)| n);
        TpprVector {
            owner: self.owner,
            entries: v,
            as_of_seq: self.as_of_seq,
        }
    }
}

/// Descending score, ascending node id.
pub(crate) fn rank_order(a: &(NodeId, f64), b: &(NodeId, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn select_top(v: &mut Vec<(NodeId, f64)>, k: usize) {
    if v.len() > k {
        if k > 0 {
            v.select_nth_unstable_by(k - 1, rank_order);
        }
        v.truncate(k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_of(entries: &[(u32, f64)], k: usize) -> TpprVector {
        TpprVector::from_scores(
            NodeId(0),
            entries.iter().map(|&(n, s)| (NodeId(n), s)).collect(),
            k,
            true,
            0,
        )
    }

    #[test]
    fn top_k_sorted_desc() {
        let v = vec_of(&[(1, 0.3), (2, 0.5)], 5);
        assert_eq!(v.top_k_nodes(), vec![(NodeId(2), 0.5), (NodeId(1), 0.3)]);
        assert!(vec_of(&[], 3).top_k_nodes().is_empty());
    }

    #[test]
    fn ties_prefer_smaller_id() {
        let v = vec_of(&[(3, 0.2), (1, 0.2)], 1);
        assert_eq!(v.top_k_nodes(), vec![(NodeId(1), 0.2)]);
    }

    #[test]
    fn truncation_matches_direct_selection() {
        let raw: Vec<(u32, f64)> = (0..50)
            .map(|i| (i, ((i * 37) % 11) as f64 / 10.0))
            .collect();
        let big = vec_of(&raw, 30);
        for k in [1, 5, 10, 30] {
            assert_eq!(big.truncated(k).entries(), vec_of(&raw, k).entries());
        }
    }

    #[test]
    fn self_entry_can_be_excluded() {
        let v = TpprVector::from_scores(
            NodeId(0),
            vec![(NodeId(0), 0.5), (NodeId(1), 0.1)],
            5,
            false,
            0,
        );
        assert_eq!(v.entries(), &[(NodeId(1), 0.1)]);
    }

    #[test]
    fn config_bounds() {
        assert!(TpprConfig::new(0.5, 0.5, 10).validate().is_ok());
        assert!(TpprConfig::new(1.0, 0.5, 10).validate().is_err());
        assert!(TpprConfig::new(0.5, 0.0, 10).validate().is_err());
        assert!(TpprConfig::new(0.5, 1.0, 10).validate().is_ok());
        assert!(TpprConfig::new(0.5, 0.5, 0).validate().is_err());
    }
}
