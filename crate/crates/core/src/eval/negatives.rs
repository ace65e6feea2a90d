use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Seq, TemporalGraph};
use crate::seeds;

/// Up to `count` distinct replacement destinations for the event at `seq`,
/// drawn without replacement from the pool visible at `seq`, never `exclude`.
/// The draw depends only on `(stream_seed, seq)`.
pub fn sample_test_negatives(
    g: &TemporalGraph,
    seq: Seq,
    exclude: NodeId,
    count: usize,
    stream_seed: u64,
) -> Vec<NodeId> {
    let pool = g.pool_prefix(seq);
    let skip = pool.iter().position(|&(v, _)| v == exclude);
    let available = pool.len() - skip.is_some() as usize;
    let take = count.min(available);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[stream_seed, seq]));
    index::sample(&mut rng, available, take)
        .into_iter()
        .map(|i| match skip {
            Some(s) if i >= s => pool[i + 1].0,
            _ => pool[i].0,
        })
        .collect()
}

/// One uniform replacement destination for the event at `seq`.
pub fn sample_train_negative(
    g: &TemporalGraph,
    seq: Seq,
    exclude: NodeId,
    rng: &mut impl Rng,
) -> Result<NodeId> {
    let pool = g.pool_prefix(seq);
    if pool.len() < 2 {
        return Err(Error::Empty(format!(
            "negative pool at seq {seq} has {} candidate(s)",
            pool.len()
        )));
    }
    match pool.iter().position(|&(v, _)| v == exclude) {
        Some(s) => {
            let i = rng.random_range(0..pool.len() - 1);
            Ok(pool[if i >= s { i + 1 } else { i }].0)
        }
        None => Ok(pool[rng.random_range(0..pool.len())].0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Event;

    fn star(dsts: u32) -> TemporalGraph {
        let mut g = TemporalGraph::new(0, 1);
        for d in 0..dsts {
            g.ingest(Event::new(1000, d, d as f64)).unwrap();
        }
        g
    }

    #[test]
    fn forced_draw_takes_the_rest() {
        let g = star(100);
        let seq = 99;
        let mut negs = sample_test_negatives(&g, seq, NodeId(42), 99, 7);
        negs.sort();
        let expected: Vec<NodeId> = (0..100).filter(|&d| d != 42).map(NodeId).collect();
        assert_eq!(negs, expected);
    }

    #[test]
    fn seeded_and_exclusive() {
        let g = star(500);
        let a = sample_test_negatives(&g, 499, NodeId(3), 99, 1);
        assert_eq!(a, sample_test_negatives(&g, 499, NodeId(3), 99, 1));
        assert_ne!(a, sample_test_negatives(&g, 499, NodeId(3), 99, 2));
        assert!(!a.contains(&NodeId(3)));
        let mut d = a.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 99);
        // the pool at seq 10 holds destinations 0..=10 only
        assert!(sample_test_negatives(&g, 10, NodeId(3), 99, 1)
            .iter()
            .all(|v| v.0 <= 10));
    }

    #[test]
    fn train_negative_draws() {
        let g = star(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(
                sample_train_negative(&g, 1, NodeId(0), &mut rng).unwrap(),
                NodeId(1)
            );
        }
        assert!(sample_train_negative(&g, 0, NodeId(0), &mut rng).is_err());
    }
}
