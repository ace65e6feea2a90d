//! Dense fixed-point iteration, used to check the sparse store.

use crate::error::{Error, Result};
use crate::graph::{Cutoff, NodeId, TemporalGraph};
use crate::tppr::{rank_order, transition_row, TpprConfig, TpprVector, TransitionRow};

/// Starting vector of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleInit {
    /// The restart indicator of the source.
    Restart,
    /// All ones.
    Ones,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub vector: Vec<f64>,
    /// L1 change of each iteration.
    pub deltas: Vec<f64>,
}

/// All transition rows of a graph snapshot, iterated densely.
pub struct DenseOracle {
    rows: Vec<TransitionRow>,
    alpha: f64,
    eps: f64,
    max_iters: usize,
}

impl DenseOracle {
    pub fn new(g: &TemporalGraph, cutoff: Cutoff, cfg: &TpprConfig) -> Result<Self> {
        cfg.validate()?;
        let n = g.num_nodes();
        if n > cfg.oracle_cap {
            return Err(Error::OracleCap {
                nodes: n,
                cap: cfg.oracle_cap,
            });
        }
        let rows = (0..n as u32)
            .map(|v| transition_row(g, NodeId(v), cutoff, cfg.beta))
            .collect();
        Ok(DenseOracle {
            rows,
            alpha: cfg.alpha,
            eps: cfg.convergence_eps,
            max_iters: cfg.max_iters,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.len()
    }

    /// Iterates `pi <- alpha * pi P + (1 - alpha) r_v` to convergence.
    pub fn solve(&self, v: NodeId, init: OracleInit) -> OracleRun {
        let n = self.rows.len().max(v.index() + 1);
        let restart = 1.0 - self.alpha;
        let mut pi = match init {
            OracleInit::Restart => {
                let mut p = vec![0.0; n];
                p[v.index()] = 1.0;
                p
            }
            OracleInit::Ones => vec![1.0; n],
        };
        let mut next = vec![0.0; n];
        let mut deltas = Vec::new();
        for _ in 0..self.max_iters {
            next.fill(0.0);
            for (w, row) in self.rows.iter().enumerate() {
                let mass = self.alpha * pi[w];
                if mass == 0.0 {
                    continue;
                }
                for &(u, p) in &row.probs {
                    next[u.index()] += mass * p;
                }
            }
            next[v.index()] += restart;
            let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            deltas.push(delta);
            if delta < self.eps {
                break;
            }
        }
        OracleRun { vector: pi, deltas }
    }
}

/// Converged T-PPR vector of `v` over every node of `g`.
pub fn tppr_dense_oracle(
    g: &TemporalGraph,
    v: NodeId,
    cutoff: Cutoff,
    cfg: &TpprConfig,
) -> Result<Vec<f64>> {
    Ok(DenseOracle::new(g, cutoff, cfg)?
        .solve(v, OracleInit::Restart)
        .vector)
}

/// How closely a stored top-k vector tracks the exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    /// Largest `|stored - exact|` over the stored support.
    pub max_entry_error: f64,
    /// Largest gap between the i-th best stored and i-th best exact score.
    pub max_rank_error: f64,
    /// Stored nodes outside the exact top-k whose exact score is not tied
    /// (within `tol`) with the exact k-th score.
    pub set_mismatches: usize,
}

impl Agreement {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_entry_error < tol && self.max_rank_error < tol && self.set_mismatches == 0
    }
}

/// Compares a stored vector against the exact vector `exact` of its owner.
pub fn agreement(
    stored: &TpprVector,
    exact: &[f64],
    k: usize,
    include_self: bool,
    tol: f64,
) -> Agreement {
    let mut ranked: Vec<(NodeId, f64)> = exact
        .iter()
        .enumerate()
        .filter(|&(n, &s)| s > 0.0 && (include_self || n != stored.owner.index()))
        .map(|(n, &s)| (NodeId(n as u32), s))
        .collect();
    ranked.sort_by(rank_order);
    ranked.truncate(k);
    let kth = ranked.last().map(|&(_, s)| s).unwrap_or(0.0);
    let got = stored.top_k_nodes();
    let exact_at = |n: NodeId| exact.get(n.index()).copied().unwrap_or(0.0);
    let max_entry_error = got
        .iter()
        .map(|&(n, s)| (s - exact_at(n)).abs())
        .fold(0.0, f64::max);
    let max_rank_error = (0..k.max(got.len()))
        .map(|i| {
            let a = got.get(i).map(|e| e.1).unwrap_or(0.0);
            let b = ranked.get(i).map(|e| e.1).unwrap_or(0.0);
            (a - b).abs()
        })
        .fold(0.0, f64::max);
    let set_mismatches = got
        .iter()
        .filter(|&&(n, _)| !ranked.iter().any(|&(m, _)| m == n) && exact_at(n) < kth - tol)
        .count();
    Agreement {
        max_entry_error,
        max_rank_error,
        set_mismatches,
    }
}
