//! Sparse forward push.
//!
//! Maintains an estimate `p` and a residual `r` with the invariant
//! `pi_v = p + sum_w r[w] * pi_w`. Pushing `w` settles `(1 - alpha) r[w]` into
//! `p[w]` and spreads `alpha r[w]` over `w`'s transition row. Nodes are pushed
//! while their residual is at least `eps`, so the L1 error of `p` is bounded by
//! the residual mass left behind.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::sync::Arc;

use crate::graph::{Cutoff, NodeId, TemporalGraph};
use crate::tppr::{transition_row, TransitionRow};

/// Supplies transition rows to the push.
pub trait RowSource {
    fn row(&self, v: NodeId) -> Arc<TransitionRow>;
}

/// Rows built directly from a graph, uncached.
pub struct GraphRows<'a> {
    pub graph: &'a TemporalGraph,
    pub cutoff: Cutoff,
    pub beta: f64,
}

impl RowSource for GraphRows<'_> {
    fn row(&self, v: NodeId) -> Arc<TransitionRow> {
        Arc::new(transition_row(self.graph, v, self.cutoff, self.beta))
    }
}

/// Dense per-thread work arrays, reset through the touched list after use.
#[derive(Default)]
struct Scratch {
    estimate: Vec<f64>,
    residual: Vec<f64>,
    queued: Vec<bool>,
    touched: Vec<u32>,
}

impl Scratch {
    fn grow(&mut self, n: usize) {
        if n > self.estimate.len() {
            self.estimate.resize(n, 0.0);
            self.residual.resize(n, 0.0);
            self.queued.resize(n, false);
        }
    }

    fn touch(&mut self, i: usize) {
        self.grow(i + 1);
        if self.estimate[i] == 0.0 && self.residual[i] == 0.0 && !self.queued[i] {
            self.touched.push(i as u32);
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// Approximate T-PPR vector of `source` as `(node, score)` sorted by node id,
/// together with the residual mass left unsettled.
pub fn push_estimate(
    rows: &impl RowSource,
    source: NodeId,
    alpha: f64,
    eps: f64,
) -> (Vec<(NodeId, f64)>, f64) {
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let s = &mut *guard;
        let mut queue = VecDeque::new();
        let src = source.index();
        s.touch(src);
        s.residual[src] = 1.0;
        s.queued[src] = true;
        queue.push_back(source);
        while let Some(w) = queue.pop_front() {
            let wi = w.index();
            s.queued[wi] = false;
            let r = s.residual[wi];
            if r < eps {
                continue;
            }
            s.residual[wi] = 0.0;
            s.estimate[wi] += (1.0 - alpha) * r;
            let row = rows.row(w);
            let mass = alpha * r;
            for &(u, p) in &row.probs {
                let ui = u.index();
                s.touch(ui);
                s.residual[ui] += mass * p;
                if !s.queued[ui] && s.residual[ui] >= eps {
                    s.queued[ui] = true;
                    queue.push_back(u);
                }
            }
        }
        let mut residual = 0.0;
        let mut out: Vec<(NodeId, f64)> = Vec::with_capacity(s.touched.len());
        s.touched.sort_unstable();
        for &i in &s.touched {
            let i = i as usize;
            residual += s.residual[i];
            if s.estimate[i] > 0.0 {
                out.push((NodeId(i as u32), s.estimate[i]));
            }
            s.estimate[i] = 0.0;
            s.residual[i] = 0.0;
            s.queued[i] = false;
        }
        s.touched.clear();
        (out, residual)
    })
}
