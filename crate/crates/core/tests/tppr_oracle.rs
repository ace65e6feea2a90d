use eagle_core::graph::{Cutoff, Event, NodeId, TemporalGraph};
use eagle_core::tppr::{agreement, DenseOracle, OracleInit, TpprConfig, TpprStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_events(seed: u64, nodes: u32, events: usize) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    (0..events)
        .map(|_| {
            if rng.random_bool(0.7) {
                t += rng.random_range(0..3) as f64;
            }
            let a = rng.random_range(0..nodes);
            let mut b = rng.random_range(0..nodes);
            if b == a {
                b = (b + 1) % nodes;
            }
            Event::new(a, b, t)
        })
        .collect()
}

#[test]
fn store_tracks_oracle_across_batches() {
    for (i, (alpha, beta)) in [(0.3, 0.5), (0.9, 0.9), (0.5, 1.0), (0.9, 0.5)]
        .into_iter()
        .enumerate()
    {
        let cfg = TpprConfig::new(alpha, beta, 10);
        let exact_cfg = TpprConfig {
            convergence_eps: 1e-12,
            max_iters: 10_000,
            ..cfg
        };
        let events = random_events(i as u64, 60, 400);
        let mut g = TemporalGraph::new(0, 1);
        let mut store = TpprStore::new(cfg).unwrap();
        for chunk in events.chunks(97) {
            for e in chunk {
                g.ingest(e.clone()).unwrap();
            }
            store.update(&g);
            let oracle = DenseOracle::new(&g, Cutoff::ALL, &exact_cfg).unwrap();
            let mut worst = 0.0f64;
            for v in g.observed_nodes().collect::<Vec<_>>() {
                let exact = oracle.solve(v, OracleInit::Restart).vector;
                let a = agreement(&store.vector(&g, v), &exact, cfg.k_s, true, 1e-4);
                worst = worst.max(a.max_entry_error).max(a.max_rank_error);
                assert!(a.holds(1e-4), "alpha={alpha} beta={beta} node={v}: {a:?}");
            }
            eprintln!(
                "alpha={alpha} beta={beta} events={} worst={worst:e}",
                g.num_events()
            );
        }
        let _ = NodeId(0);
    }
}
