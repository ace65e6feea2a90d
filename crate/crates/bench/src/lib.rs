//! Shared fixtures for the criterion benches.

use eagle_core::dense::MlpParams;
use eagle_core::graph::{generate_synthetic, SyntheticConfig};
use eagle_core::scorers::EagleConfig;
use eagle_core::tppr::{TpprStore, TpprVector};
use eagle_core::{NodeId, TemporalGraph};

pub struct Fixture {
    pub graph: TemporalGraph,
    pub eagle: EagleConfig,
    pub params: MlpParams,
    pub store: TpprStore,
}

/// Synthetic graph with a lazily filled T-PPR store and a random time model.
pub fn fixture(nodes: usize, events: usize) -> Fixture {
    let graph = generate_synthetic(&SyntheticConfig {
        nodes,
        events,
        ..Default::default()
    })
    .expect("valid synthetic config");
    let eagle = EagleConfig::default();
    let d_in = 2 * (graph.d_x() + graph.d_e());
    let params = MlpParams::init(d_in, 128, 1, 7);
    let store = TpprStore::assume_current(eagle.tppr_config(), &graph).expect("valid tppr config");
    Fixture {
        graph,
        eagle,
        params,
        store,
    }
}

impl Fixture {
    /// Last event's source and `n` destinations drawn from the event log.
    pub fn query(&self, n: usize) -> (NodeId, Vec<NodeId>) {
        let last = self.graph.num_events() as u64 - 1;
        let v = self.graph.event(last).source;
        let step = (last / n.max(1) as u64).max(1);
        let cands = (0..n as u64)
            .map(|i| self.graph.event((i * step) % last).destination)
            .collect();
        (v, cands)
    }

    pub fn vector(&self, v: NodeId) -> std::sync::Arc<TpprVector> {
        self.store.vector(&self.graph, v)
    }
}
