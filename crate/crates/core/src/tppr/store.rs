//! Per-node top-k T-PPR vectors maintained under the event stream.
//!
//! `update` folds newly ingested events into the store: the endpoints' rows
//! are invalidated and their vectors recomputed, and their direct neighbors
//! (whose walks step into the changed rows) are flagged stale. Every other
//! vector ages by one batch. Reads recompute a vector that is flagged, or
//! older than `stale_batches` batches, before returning it.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;

use crate::error::Result;
use crate::graph::{Cutoff, NodeId, Seq, TemporalGraph};
use crate::tppr::{
    push_estimate, transition_row, RowSource, TpprConfig, TpprSnapshot, TpprVector, TransitionRow,
};

#[derive(Debug, Clone)]
struct Slot {
    vector: Arc<TpprVector>,
    epoch: u64,
    stale: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub events: usize,
    pub touched: usize,
    pub flagged: usize,
}

pub struct TpprStore {
    cfg: TpprConfig,
    frontier: Seq,
    epoch: u64,
    slots: RwLock<HashMap<NodeId, Slot>>,
    /// Row cache indexed by node; entries of touched nodes are reset on update.
    rows: Vec<OnceLock<Arc<TransitionRow>>>,
    empty_row: Arc<TransitionRow>,
}

struct CachedRows<'a> {
    store: &'a TpprStore,
    graph: &'a TemporalGraph,
}

impl RowSource for CachedRows<'_> {
    fn row(&self, v: NodeId) -> Arc<TransitionRow> {
        match self.store.rows.get(v.index()) {
            Some(cell) => cell
                .get_or_init(|| {
                    Arc::new(transition_row(
                        self.graph,
                        v,
                        Cutoff::ALL,
                        self.store.cfg.beta,
                    ))
                })
                .clone(),
            None => self.store.empty_row.clone(),
        }
    }
}

impl TpprStore {
    pub fn new(cfg: TpprConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(TpprStore {
            cfg,
            frontier: 0,
            epoch: 0,
            slots: RwLock::new(HashMap::new()),
            rows: Vec::new(),
            empty_row: Arc::new(TransitionRow {
                owner: NodeId(u32::MAX),
                probs: Vec::new(),
            }),
        })
    }

    /// Store built from every event already in `g`.
    pub fn build(cfg: TpprConfig, g: &TemporalGraph) -> Result<Self> {
        let mut s = TpprStore::new(cfg)?;
        s.update(g);
        Ok(s)
    }

    /// Store positioned after every event of `g` with nothing computed yet;
    /// each vector is computed on first read.
    pub fn assume_current(cfg: TpprConfig, g: &TemporalGraph) -> Result<Self> {
        let mut s = TpprStore::new(cfg)?;
        s.frontier = g.num_events() as Seq;
        s.epoch = 1;
        s.rows.resize_with(g.num_nodes(), OnceLock::new);
        Ok(s)
    }

    pub fn config(&self) -> &TpprConfig {
        &self.cfg
    }

    /// Number of events incorporated.
    pub fn frontier(&self) -> Seq {
        self.frontier
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Folds events `[frontier, g.num_events())` into the store.
    pub fn update(&mut self, g: &TemporalGraph) -> UpdateStats {
        let end = g.num_events() as Seq;
        if end <= self.frontier {
            return UpdateStats::default();
        }
        let mut touched: Vec<NodeId> = (self.frontier..end)
            .flat_map(|s| {
                let e = g.event(s);
                [e.source, e.destination]
            })
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let events = (end - self.frontier) as usize;
        self.frontier = end;
        self.epoch += 1;

        self.rows.resize_with(g.num_nodes(), OnceLock::new);
        for v in &touched {
            self.rows[v.index()] = OnceLock::new();
        }
        let mut flagged = 0;
        {
            let slots = self.slots.get_mut();
            for &v in &touched {
                for e in g.neighbor_list(v) {
                    if touched.binary_search(&e.node).is_ok() {
                        continue;
                    }
                    if let Some(s) = slots.get_mut(&e.node) {
                        if !s.stale {
                            s.stale = true;
                            flagged += 1;
                        }
                    }
                }
            }
        }
        for &v in &touched {
            let vec = self.compute(g, v);
            self.slots.get_mut().insert(
                v,
                Slot {
                    vector: Arc::new(vec),
                    epoch: self.epoch,
                    stale: false,
                },
            );
        }
        UpdateStats {
            events,
            touched: touched.len(),
            flagged,
        }
    }

    fn is_fresh(&self, slot: &Slot) -> bool {
        !slot.stale
            && (self.cfg.stale_batches == 0 || self.epoch - slot.epoch < self.cfg.stale_batches)
    }

    fn compute(&self, g: &TemporalGraph, v: NodeId) -> TpprVector {
        let rows = CachedRows {
            store: self,
            graph: g,
        };
        let (full, _residual) = push_estimate(&rows, v, self.cfg.alpha, self.cfg.push_eps);
        TpprVector::from_scores(v, full, self.cfg.k_s, self.cfg.include_self, self.frontier)
    }

    /// Current top-k vector of `v`, refreshed if stale. `g` must be the graph
    /// the store was last updated with.
    pub fn vector(&self, g: &TemporalGraph, v: NodeId) -> Arc<TpprVector> {
        if let Some(slot) = self.slots.read().get(&v) {
            if self.is_fresh(slot) {
                return slot.vector.clone();
            }
        }
        let vec = Arc::new(self.compute(g, v));
        self.slots.write().insert(
            v,
            Slot {
                vector: vec.clone(),
                epoch: self.epoch,
                stale: false,
            },
        );
        vec
    }

    /// Recomputes every vector that a read would refresh.
    pub fn refresh_all(&self, g: &TemporalGraph) {
        for v in g.observed_nodes() {
            self.vector(g, v);
        }
    }

    /// Fresh vectors of every observed node.
    pub fn snapshot(&self, g: &TemporalGraph) -> TpprSnapshot {
        let mut snap = TpprSnapshot::default();
        for v in g.observed_nodes() {
            snap.insert(v, self.vector(g, v).top_k_nodes());
        }
        snap
    }

    /// Store seeded from a snapshot taken at `frontier`.
    pub fn from_snapshot(cfg: TpprConfig, snapshot: &TpprSnapshot, frontier: Seq) -> Result<Self> {
        let mut s = TpprStore::new(cfg)?;
        s.frontier = frontier;
        s.epoch = 1;
        let slots = s.slots.get_mut();
        for (&owner, entries) in snapshot.iter() {
            let vec = TpprVector::from_scores(owner, entries.clone(), cfg.k_s, true, frontier);
            slots.insert(
                owner,
                Slot {
                    vector: Arc::new(vec),
                    epoch: 1,
                    stale: false,
                },
            );
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Event;
    use crate::tppr::tppr_dense_oracle;

    #[test]
    fn first_edge_matches_two_node_oracle() {
        let mut g = TemporalGraph::new(0, 1);
        let mut store = TpprStore::new(TpprConfig::new(0.5, 0.5, 5)).unwrap();
        g.ingest(Event::new(0, 1, 1.0)).unwrap();
        store.update(&g);
        let cfg = TpprConfig {
            convergence_eps: 1e-14,
            ..TpprConfig::new(0.5, 0.5, 5)
        };
        for v in [NodeId(0), NodeId(1)] {
            let vec = store.vector(&g, v);
            assert_eq!(vec.len(), 2);
            let exact = tppr_dense_oracle(&g, v, Cutoff::ALL, &cfg).unwrap();
            for &(n, s) in vec.entries() {
                assert!((exact[n.index()] - s).abs() < 1e-4);
            }
            assert!((vec.score(v).unwrap() - 0.5 / 0.75).abs() < 1e-4);
        }
    }

    #[test]
    fn no_new_events_is_identity() {
        let mut g = TemporalGraph::new(0, 1);
        g.ingest(Event::new(0, 1, 1.0)).unwrap();
        let mut store = TpprStore::build(TpprConfig::default(), &g).unwrap();
        let before = (store.frontier(), store.epoch(), store.snapshot(&g));
        assert_eq!(store.update(&g), UpdateStats::default());
        assert_eq!(
            (store.frontier(), store.epoch(), store.snapshot(&g)),
            before
        );
    }

    #[test]
    fn neighbors_of_touched_nodes_are_flagged() {
        let mut g = TemporalGraph::new(0, 1);
        g.ingest(Event::new(0, 1, 1.0)).unwrap();
        g.ingest(Event::new(2, 1, 2.0)).unwrap();
        let cfg = TpprConfig {
            stale_batches: 0,
            ..TpprConfig::default()
        };
        let mut store = TpprStore::build(cfg, &g).unwrap();
        store.refresh_all(&g);
        g.ingest(Event::new(1, 3, 3.0)).unwrap();
        let stats = store.update(&g);
        assert_eq!(stats.touched, 2);
        // 0 and 2 are neighbors of 1
        assert_eq!(stats.flagged, 2);
    }
}
