//! Seeded generator for recency-biased bipartite interaction streams.
//!
//! Sources interact with destinations grouped into communities. Each source
//! has a current community that drifts over time; with probability
//! `recency_bias` a new event repeats one of the source's last three partners,
//! otherwise the partner is drawn uniformly from the source's current
//! community. Destinations carry a one-hot community feature and every edge
//! carries the one-hot community of its destination, so a source's recent
//! neighborhood describes its current preference while its old neighborhood
//! describes a stale one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Event, NodeId, RolePool, TemporalGraph};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub nodes: usize,
    pub events: usize,
    /// Probability of repeating one of the source's last three partners.
    pub recency_bias: f64,
    pub communities: usize,
    /// Per-event probability that the acting source switches community.
    pub drift: f64,
    /// Fraction of nodes acting as sources; the rest are destinations.
    pub source_fraction: f64,
    /// Mean of the exponential inter-event gap.
    pub mean_gap: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            nodes: 1000,
            events: 10_000,
            recency_bias: 0.5,
            communities: 8,
            drift: 0.05,
            source_fraction: 0.5,
            mean_gap: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let n_src = self.num_sources();
        if n_src == 0 || n_src >= self.nodes {
            return Err(Error::Config(format!(
                "synthetic graph needs at least one source and one destination (nodes={}, source_fraction={})",
                self.nodes, self.source_fraction
            )));
        }
        if self.communities == 0 || self.communities > self.nodes - n_src {
            return Err(Error::Config(format!(
                "communities must be in 1..={} ",
                self.nodes - n_src
            )));
        }
        for (name, p) in [("recency_bias", self.recency_bias), ("drift", self.drift)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0,1], got {p}")));
            }
        }
        if !(self.mean_gap > 0.0) {
            return Err(Error::Config("mean_gap must be positive".into()));
        }
        Ok(())
    }

    pub fn num_sources(&self) -> usize {
        (self.nodes as f64 * self.source_fraction).round() as usize
    }

    pub fn community_of_destination(&self, d: NodeId) -> usize {
        (d.index() - self.num_sources()) % self.communities
    }
}

/// Builds the graph described by `cfg`. Identical configs yield identical logs.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<TemporalGraph> {
    cfg.validate()?;
    let n_src = cfg.num_sources();
    let n_dst = cfg.nodes - n_src;
    let c = cfg.communities;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::stream(cfg.seed, seeds::SYNTHETIC));

    let mut g = TemporalGraph::new(c, c).with_role_pool(RolePool::Bipartite);
    g.ensure_node(NodeId(cfg.nodes as u32 - 1));
    let mut onehot = vec![0.0; c];
    for d in 0..n_dst {
        let node = NodeId((n_src + d) as u32);
        onehot.fill(0.0);
        onehot[d % c] = 1.0;
        g.set_node_features(node, &onehot)?;
    }

    // community members, as destination offsets
    let members: Vec<Vec<usize>> = (0..c)
        .map(|k| (0..n_dst).filter(|d| d % c == k).collect())
        .collect();
    let mut current: Vec<usize> = (0..n_src).map(|_| rng.random_range(0..c)).collect();
    let mut last3: Vec<Vec<usize>> = vec![Vec::with_capacity(3); n_src];

    let mut t = 0.0f64;
    for _ in 0..cfg.events {
        let u: f64 = rng.random();
        t += -cfg.mean_gap * (1.0 - u).ln();
        let s = rng.random_range(0..n_src);
        if rng.random_bool(cfg.drift) {
            current[s] = rng.random_range(0..c);
        }
        let d = if !last3[s].is_empty() && rng.random_bool(cfg.recency_bias) {
            last3[s][rng.random_range(0..last3[s].len())]
        } else {
            let pool = &members[current[s]];
            pool[rng.random_range(0..pool.len())]
        };
        let hist = &mut last3[s];
        if hist.len() == 3 {
            hist.remove(0);
        }
        hist.push(d);
        onehot.fill(0.0);
        onehot[d % c] = 1.0;
        g.ingest(Event::new(s as u32, (n_src + d) as u32, t).with_features(onehot.clone()))?;
    }
    Ok(g)
}
