//! Append-only continuous-time dynamic graph.
//!
//! Every interaction is stored once in the event log and referenced from the
//! neighbor lists of both endpoints. Neighbor lists are kept in ingestion
//! order, which is also `(timestamp, seq)` order because ingestion rejects
//! timestamp regressions. Every time-bounded query is therefore a prefix of
//! the list, located by binary search.

mod io;
mod split;
mod synthetic;

use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

pub use io::{load_events, write_canonical, DatasetFormat, LoadOptions};
pub use split::{chronological_split, parse_fractions, DatasetSplit, DEFAULT_FRACTIONS};
pub use synthetic::{generate_synthetic, SyntheticConfig};

/// Dense node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Ingestion index of an event in the log.
pub type Seq = u64;

/// One timestamped interaction, the unit of ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub source: NodeId,
    pub destination: NodeId,
    pub timestamp: f64,
    pub edge_features: Vec<f64>,
    /// Auxiliary per-event label (JODIE `state_label`); ignored by link prediction.
    pub label: f64,
}

impl Event {
    pub fn new(source: impl Into<NodeId>, destination: impl Into<NodeId>, timestamp: f64) -> Self {
        Event {
            source: source.into(),
            destination: destination.into(),
            timestamp,
            edge_features: Vec::new(),
            label: 0.0,
        }
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.edge_features = features;
        self
    }
}

/// Borrowed view of a logged event.
#[derive(Debug, Clone, Copy)]
pub struct EventRef<'a> {
    pub seq: Seq,
    pub source: NodeId,
    pub destination: NodeId,
    pub timestamp: f64,
    pub edge_features: &'a [f64],
    pub label: f64,
}

/// One entry of a node's time-ordered neighbor list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub node: NodeId,
    pub timestamp: f64,
    /// Seq of the underlying event; edge features live in the event log.
    pub seq: Seq,
}

/// Upper bound on what a query may observe: events with `timestamp <= time`
/// and `seq < before_seq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub time: f64,
    pub before_seq: Seq,
}

impl Cutoff {
    /// Everything ingested so far.
    pub const ALL: Cutoff = Cutoff {
        time: f64::INFINITY,
        before_seq: Seq::MAX,
    };

    /// View used when predicting the event with sequence number `seq` at time
    /// `time`: simultaneous earlier events are visible, the event itself and
    /// anything after it are not.
    pub fn before_event(time: f64, seq: Seq) -> Self {
        Cutoff {
            time,
            before_seq: seq,
        }
    }

    pub fn at_time(time: f64) -> Self {
        Cutoff {
            time,
            before_seq: Seq::MAX,
        }
    }

    #[inline]
    fn admits(&self, e: &NeighborEntry) -> bool {
        e.seq < self.before_seq && e.timestamp <= self.time
    }
}

/// Neighbor selection rule for time-aware aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SamplingStrategy {
    /// The k latest neighbors by `(timestamp, seq)`.
    Recent,
    /// The k earliest neighbors.
    Old,
    /// A seeded uniform sample without replacement.
    Uniform { seed: u64 },
}

impl SamplingStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingStrategy::Recent => "recent",
            SamplingStrategy::Old => "old",
            SamplingStrategy::Uniform { .. } => "uniform",
        }
    }

    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "recent" => Ok(SamplingStrategy::Recent),
            "old" => Ok(SamplingStrategy::Old),
            "uniform" => Ok(SamplingStrategy::Uniform { seed }),
            other => Err(Error::Config(format!(
                "unknown sampling strategy `{other}`"
            ))),
        }
    }
}

/// Which nodes may serve as replacement destinations in negative sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RolePool {
    /// Only nodes observed in the destination role (bipartite datasets).
    #[default]
    Bipartite,
    /// Every observed node (unipartite datasets).
    Unipartite,
}

impl RolePool {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bipartite" => Ok(RolePool::Bipartite),
            "unipartite" => Ok(RolePool::Unipartite),
            other => Err(Error::Config(format!("unknown role pool `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RolePool::Bipartite => "bipartite",
            RolePool::Unipartite => "unipartite",
        }
    }
}

/// Nodes in order of first appearance, with the seq that introduced them.
#[derive(Debug, Clone, Default)]
struct FirstSeen {
    seen: Vec<bool>,
    order: Vec<(NodeId, Seq)>,
}

impl FirstSeen {
    fn mark(&mut self, v: NodeId, seq: Seq) {
        let i = v.index();
        if i >= self.seen.len() {
            self.seen.resize(i + 1, false);
        }
        if !self.seen[i] {
            self.seen[i] = true;
            self.order.push((v, seq));
        }
    }

    /// Nodes first seen at or before `seq`.
    fn prefix_through(&self, seq: Seq) -> &[(NodeId, Seq)] {
        let n = self.order.partition_point(|&(_, s)| s <= seq);
        &self.order[..n]
    }
}

/// In-memory temporal graph: event log, per-node neighbor lists, feature tables.
#[derive(Debug, Clone)]
pub struct TemporalGraph {
    d_x: usize,
    d_e: usize,
    num_nodes: usize,
    role_pool: RolePool,
    node_features: Vec<f64>,
    sources: Vec<NodeId>,
    destinations: Vec<NodeId>,
    timestamps: Vec<f64>,
    labels: Vec<f64>,
    edge_features: Vec<f64>,
    adjacency: Vec<Vec<NeighborEntry>>,
    dst_seen: FirstSeen,
    any_seen: FirstSeen,
}

impl TemporalGraph {
    pub fn new(d_x: usize, d_e: usize) -> Self {
        TemporalGraph {
            d_x,
            d_e,
            num_nodes: 0,
            role_pool: RolePool::default(),
            node_features: Vec::new(),
            sources: Vec::new(),
            destinations: Vec::new(),
            timestamps: Vec::new(),
            labels: Vec::new(),
            edge_features: Vec::new(),
            adjacency: Vec::new(),
            dst_seen: FirstSeen::default(),
            any_seen: FirstSeen::default(),
        }
    }

    pub fn with_role_pool(mut self, pool: RolePool) -> Self {
        self.role_pool = pool;
        self
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_events(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn role_pool(&self) -> RolePool {
        self.role_pool
    }

    pub fn set_role_pool(&mut self, pool: RolePool) {
        self.role_pool = pool;
    }

    pub fn last_timestamp(&self) -> Option<f64> {
        self.timestamps.last().copied()
    }

    /// Grows the node table so that `v` is a valid id.
    pub fn ensure_node(&mut self, v: NodeId) {
        let need = v.index() + 1;
        if need > self.num_nodes {
            self.num_nodes = need;
            self.adjacency.resize_with(need, Vec::new);
            self.node_features.resize(need * self.d_x, 0.0);
        }
    }

    pub fn set_node_features(&mut self, v: NodeId, features: &[f64]) -> Result<()> {
        if features.len() != self.d_x {
            return Err(Error::Shape(format!(
                "node feature length {} != d_x {}",
                features.len(),
                self.d_x
            )));
        }
        self.ensure_node(v);
        let start = v.index() * self.d_x;
        self.node_features[start..start + self.d_x].copy_from_slice(features);
        Ok(())
    }

    /// Features of `v`; zeros for unknown nodes.
    pub fn node_features(&self, v: NodeId) -> NodeFeatures<'_> {
        if v.index() < self.num_nodes {
            let s = v.index() * self.d_x;
            NodeFeatures::Known(&self.node_features[s..s + self.d_x])
        } else {
            NodeFeatures::Zero(self.d_x)
        }
    }

    /// Appends one event. Returns its seq.
    pub fn ingest(&mut self, event: Event) -> Result<Seq> {
        let Event {
            source,
            destination,
            timestamp,
            mut edge_features,
            label,
        } = event;
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(Error::NonFinite(format!("event timestamp {timestamp}")));
        }
        if let Some(last) = self.last_timestamp() {
            if timestamp < last {
                return Err(Error::TimestampRegression { timestamp, last });
            }
        }
        if edge_features.is_empty() && self.d_e > 0 {
            edge_features = vec![0.0; self.d_e];
        }
        if edge_features.len() != self.d_e {
            return Err(Error::FeatureLength {
                expected: self.d_e,
                got: edge_features.len(),
            });
        }
        let seq = self.timestamps.len() as Seq;
        self.ensure_node(source);
        self.ensure_node(destination);
        self.sources.push(source);
        self.destinations.push(destination);
        self.timestamps.push(timestamp);
        self.labels.push(label);
        self.edge_features.extend_from_slice(&edge_features);
        self.adjacency[source.index()].push(NeighborEntry {
            node: destination,
            timestamp,
            seq,
        });
        self.adjacency[destination.index()].push(NeighborEntry {
            node: source,
            timestamp,
            seq,
        });
        self.any_seen.mark(source, seq);
        self.any_seen.mark(destination, seq);
        self.dst_seen.mark(destination, seq);
        Ok(seq)
    }

    pub fn event(&self, seq: Seq) -> EventRef<'_> {
        let i = seq as usize;
        EventRef {
            seq,
            source: self.sources[i],
            destination: self.destinations[i],
            timestamp: self.timestamps[i],
            edge_features: self.edge_features_of(seq),
            label: self.labels[i],
        }
    }

    pub fn events(&self) -> impl Iterator<Item = EventRef<'_>> + '_ {
        (0..self.num_events() as Seq).map(move |s| self.event(s))
    }

    pub fn timestamp(&self, seq: Seq) -> f64 {
        self.timestamps[seq as usize]
    }

    pub fn edge_features_of(&self, seq: Seq) -> &[f64] {
        let s = seq as usize * self.d_e;
        &self.edge_features[s..s + self.d_e]
    }

    /// Copy of the first `n` events as a fresh graph with the same node table.
    pub fn prefix(&self, n: usize) -> TemporalGraph {
        let mut g = TemporalGraph::new(self.d_x, self.d_e).with_role_pool(self.role_pool);
        if self.num_nodes > 0 {
            g.ensure_node(NodeId(self.num_nodes as u32 - 1));
            g.node_features.copy_from_slice(&self.node_features);
        }
        for e in self.events().take(n) {
            g.ingest(e.to_owned_event())
                .expect("prefix of a valid log is valid");
        }
        g
    }

    /// Full neighbor list of `v` (ingestion order).
    pub fn neighbor_list(&self, v: NodeId) -> &[NeighborEntry] {
        self.adjacency
            .get(v.index())
            .map(|l| l.as_slice())
            .unwrap_or(&[])
    }

    /// `N_v(t)`: the prefix of `v`'s list admitted by `cutoff`.
    pub fn neighbors(&self, v: NodeId, cutoff: Cutoff) -> &[NeighborEntry] {
        let list = self.neighbor_list(v);
        let n = list.partition_point(|e| cutoff.admits(e));
        &list[..n]
    }

    pub fn degree(&self, v: NodeId, cutoff: Cutoff) -> usize {
        self.neighbors(v, cutoff).len()
    }

    /// Selects up to `k` neighbors of `v` visible under `cutoff`.
    ///
    /// `Recent` yields newest first, `Old` oldest first, `Uniform` a seeded
    /// sample ordered newest first. Unknown nodes yield an empty list.
    pub fn recent_neighbors(
        &self,
        v: NodeId,
        cutoff: Cutoff,
        k: usize,
        strategy: SamplingStrategy,
    ) -> Vec<NeighborEntry> {
        let visible = self.neighbors(v, cutoff);
        let n = visible.len();
        if k == 0 || n == 0 {
            return Vec::new();
        }
        match strategy {
            SamplingStrategy::Recent => visible.iter().rev().take(k).copied().collect(),
            SamplingStrategy::Old => visible.iter().take(k).copied().collect(),
            SamplingStrategy::Uniform { seed } => {
                if n <= k {
                    return visible.iter().rev().copied().collect();
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[seed, v.0 as u64, n as u64]));
                let mut picked = index::sample(&mut rng, n, k).into_vec();
                picked.sort_unstable_by(|a, b| b.cmp(a));
                picked.into_iter().map(|i| visible[i]).collect()
            }
        }
    }

    /// Mean of `t - τ_i` over the (at most) `k_r` most recent neighbors;
    /// `f64::INFINITY` when `v` has no visible history.
    pub fn mean_recency_interval(&self, v: NodeId, t: f64, cutoff: Cutoff, k_r: usize) -> f64 {
        let visible = self.neighbors(v, cutoff);
        let take = k_r.min(visible.len());
        if take == 0 {
            return f64::INFINITY;
        }
        let sum: f64 = visible[visible.len() - take..]
            .iter()
            .map(|e| (t - e.timestamp).max(0.0))
            .sum();
        sum / take as f64
    }

    /// Candidate replacement destinations visible at `seq` (inclusive).
    pub fn candidate_pool(&self, seq: Seq) -> Vec<NodeId> {
        self.pool_prefix(seq).iter().map(|&(v, _)| v).collect()
    }

    pub(crate) fn pool_prefix(&self, seq: Seq) -> &[(NodeId, Seq)] {
        match self.role_pool {
            RolePool::Bipartite => self.dst_seen.prefix_through(seq),
            RolePool::Unipartite => self.any_seen.prefix_through(seq),
        }
    }

    /// Nodes observed in any role so far.
    pub fn observed_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.any_seen.order.iter().map(|&(v, _)| v)
    }
}

impl EventRef<'_> {
    pub fn to_owned_event(&self) -> Event {
        Event {
            source: self.source,
            destination: self.destination,
            timestamp: self.timestamp,
            edge_features: self.edge_features.to_vec(),
            label: self.label,
        }
    }
}

/// Node feature row, materialized lazily for unknown nodes.
#[derive(Debug, Clone, Copy)]
pub enum NodeFeatures<'a> {
    Known(&'a [f64]),
    Zero(usize),
}

impl NodeFeatures<'_> {
    pub fn len(&self) -> usize {
        match self {
            NodeFeatures::Known(s) => s.len(),
            NodeFeatures::Zero(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            NodeFeatures::Known(s) => s[i],
            NodeFeatures::Zero(_) => 0.0,
        }
    }

    pub fn add_scaled_into(&self, out: &mut [f64], scale: f64) {
        if let NodeFeatures::Known(s) = self {
            for (o, x) in out.iter_mut().zip(s.iter()) {
                *o += scale * x;
            }
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            NodeFeatures::Known(s) => s.to_vec(),
            NodeFeatures::Zero(n) => vec![0.0; *n],
        }
    }
}
