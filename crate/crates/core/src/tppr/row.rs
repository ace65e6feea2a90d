use crate::graph::{Cutoff, NodeId, TemporalGraph};

/// Outgoing transition probabilities of one node, one entry per distinct
/// partner, sorted by partner id.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub owner: NodeId,
    pub probs: Vec<(NodeId, f64)>,
}

impl TransitionRow {
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().map(|&(_, p)| p).sum()
    }
}

/// Builds `v`'s row over the neighbors visible under `cutoff`.
///
/// The k-th most recent event (1-indexed, ties on timestamp broken by seq)
/// gets `beta^k / sum_{z=1..N} beta^z`; repeated partners are summed.
pub fn transition_row(g: &TemporalGraph, v: NodeId, cutoff: Cutoff, beta: f64) -> TransitionRow {
    let visible = g.neighbors(v, cutoff);
    let n = visible.len();
    if n == 0 {
        return TransitionRow {
            owner: v,
            probs: Vec::new(),
        };
    }
    let mut weighted: Vec<(NodeId, f64)> = Vec::with_capacity(n);
    if beta >= 1.0 {
        let w = 1.0 / n as f64;
        weighted.extend(visible.iter().rev().map(|e| (e.node, w)));
    } else {
        // beta^k / (beta (1 - beta^N) / (1 - beta)) = beta^(k-1) (1 - beta) / (1 - beta^N)
        let scale = (1.0 - beta) / (1.0 - beta.powi(n.min(i32::MAX as usize) as i32));
        let mut pow = 1.0;
        for e in visible.iter().rev() {
            let p = pow * scale;
            if p == 0.0 {
                break;
            }
            weighted.push((e.node, p));
            pow *= beta;
        }
    }
    // stable sort keeps recency order inside each partner's run
    weighted.sort_by_key(|&(node, _)| node);
    let mut probs: Vec<(NodeId, f64)> = Vec::with_capacity(weighted.len());
    for (node, p) in weighted {
        match probs.last_mut() {
            Some((last, acc)) if *last == node => *acc += p,
            _ => probs.push((node, p)),
        }
    }
    TransitionRow { owner: v, probs }
}
