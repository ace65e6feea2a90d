//! Update-then-predict replay of an event range.
//!
//! Events are consumed in batches. Every batch is scored against the graph
//! and T-PPR store holding all events before it, then ingested.

use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use crate::dense::MlpParams;
use crate::error::{Error, Result};
use crate::eval::sample_test_negatives;
use crate::graph::{Cutoff, NodeId, Seq, TemporalGraph};
use crate::scorers::{recency_weight, structure_score, CandidateScores, EagleConfig, TimeScorer};
use crate::tppr::TpprStore;

/// Negatives drawn per query.
#[derive(Debug, Clone, Copy)]
pub struct NegativePlan {
    pub count: usize,
    /// Already derived for the phase (validation or test).
    pub stream_seed: u64,
}

pub struct QueryStream<'a> {
    full: &'a TemporalGraph,
    working: TemporalGraph,
    store: Option<TpprStore>,
    model: Option<&'a MlpParams>,
    eagle: EagleConfig,
    pub update_s: f64,
    pub infer_s: f64,
}

impl<'a> QueryStream<'a> {
    /// Replay state holding the first `start` events of `full`. The T-PPR
    /// store is built only when `with_tppr` is set.
    pub fn new(
        full: &'a TemporalGraph,
        start: usize,
        eagle: &EagleConfig,
        model: Option<&'a MlpParams>,
        with_tppr: bool,
    ) -> Result<Self> {
        eagle.validate()?;
        if let Some(p) = model {
            TimeScorer::new(p, full, eagle)?;
        }
        let t0 = Instant::now();
        let working = full.prefix(start);
        let store = if with_tppr {
            Some(TpprStore::build(eagle.tppr_config(), &working)?)
        } else {
            None
        };
        Ok(QueryStream {
            full,
            working,
            store,
            model,
            eagle: *eagle,
            update_s: t0.elapsed().as_secs_f64(),
            infer_s: 0.0,
        })
    }

    pub fn graph(&self) -> &TemporalGraph {
        &self.working
    }

    pub fn store(&self) -> Option<&TpprStore> {
        self.store.as_ref()
    }

    /// Scores events `range` (which must start at the current frontier) and
    /// ingests them.
    pub fn score_range(
        &mut self,
        range: Range<usize>,
        negatives: NegativePlan,
        batch_size: usize,
    ) -> Result<Vec<CandidateScores>> {
        if range.start != self.working.num_events() {
            return Err(Error::Config(format!(
                "replay is at event {}, asked to score from {}",
                self.working.num_events(),
                range.start
            )));
        }
        let batch_size = batch_size.max(1);
        let mut out = Vec::with_capacity(range.len());
        let mut at = range.start;
        while at < range.end {
            let end = (at + batch_size).min(range.end);
            let t0 = Instant::now();
            let scored: Result<Vec<CandidateScores>> = (at..end)
                .into_par_iter()
                .map(|i| self.score_event(i as Seq, negatives))
                .collect();
            out.extend(scored?);
            let t1 = Instant::now();
            for i in at..end {
                self.working
                    .ingest(self.full.event(i as Seq).to_owned_event())?;
            }
            if let Some(s) = self.store.as_mut() {
                s.update(&self.working);
            }
            self.infer_s += (t1 - t0).as_secs_f64();
            self.update_s += t1.elapsed().as_secs_f64();
            at = end;
        }
        Ok(out)
    }

    fn score_event(&self, seq: Seq, negatives: NegativePlan) -> Result<CandidateScores> {
        let e = self.full.event(seq);
        let (v, u, t) = (e.source, e.destination, e.timestamp);
        let mut cands = vec![u];
        cands.extend(sample_test_negatives(
            self.full,
            seq,
            u,
            negatives.count,
            negatives.stream_seed,
        ));
        Ok(self.score_candidates(v, &cands, t, seq))
    }

    /// Component scores of `(v, c)` for each candidate `c` at time `t`.
    pub fn score_candidates(
        &self,
        v: NodeId,
        cands: &[NodeId],
        t: f64,
        seq: Seq,
    ) -> CandidateScores {
        let g = &self.working;
        let cutoff = Cutoff::before_event(t, seq);
        let s_ta = match self.model {
            Some(p) => TimeScorer::new(p, g, &self.eagle)
                .expect("shape checked at construction")
                .score_candidates(g, v, cands, cutoff),
            None => vec![0.0; cands.len()],
        };
        let s_sa = match &self.store {
            Some(store) => {
                let pv = store.vector(g, v);
                cands
                    .iter()
                    .map(|&c| structure_score(&pv, &store.vector(g, c)))
                    .collect()
            }
            None => vec![0.0; cands.len()],
        };
        let k_r = self.eagle.k_r;
        let tv = g.mean_recency_interval(v, t, cutoff, k_r);
        let weight = cands
            .iter()
            .map(|&c| {
                recency_weight(
                    self.eagle.time_scale,
                    tv,
                    g.mean_recency_interval(c, t, cutoff, k_r),
                )
            })
            .collect();
        CandidateScores { s_ta, s_sa, weight }
    }
}
