//! Link scorers: time-aware, structure-aware and hybrid.

use serde::{Deserialize, Serialize};

use crate::dense::{sigmoid, MlpParams};
use crate::error::{Error, Result};
use crate::eval::rank_positive;
use crate::graph::{Cutoff, NodeId, SamplingStrategy, TemporalGraph};
use crate::tppr::{TpprConfig, TpprVector};

/// Candidate grid searched by [`tune_lambda`].
pub const LAMBDA_GRID: [f64; 8] = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Time,
    Struct,
    Hybrid,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 3] = [ScorerKind::Time, ScorerKind::Struct, ScorerKind::Hybrid];

    pub fn name(&self) -> &'static str {
        match self {
            ScorerKind::Time => "time",
            ScorerKind::Struct => "struct",
            ScorerKind::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(ScorerKind::Time),
            "struct" => Ok(ScorerKind::Struct),
            "hybrid" => Ok(ScorerKind::Hybrid),
            other => Err(Error::Config(format!("unknown scorer `{other}`"))),
        }
    }

    pub fn needs_model(&self) -> bool {
        !matches!(self, ScorerKind::Struct)
    }

    pub fn needs_tppr(&self) -> bool {
        !matches!(self, ScorerKind::Time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EagleConfig {
    pub k_r: usize,
    pub k_s: usize,
    pub lambda: f64,
    /// Intervals are divided by this before `exp(-t)`.
    pub time_scale: f64,
    pub tppr: TpprConfig,
    pub strategy: SamplingStrategy,
    /// Divide the time-aware mean by `k_r` instead of the neighbors found.
    pub kr_divisor: bool,
}

impl Default for EagleConfig {
    fn default() -> Self {
        EagleConfig {
            k_r: 20,
            k_s: 20,
            lambda: 1.0,
            time_scale: 1.0,
            tppr: TpprConfig::default(),
            strategy: SamplingStrategy::Recent,
            kr_divisor: false,
        }
    }
}

impl EagleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_r == 0 || self.k_s == 0 {
            return Err(Error::Config("k_r and k_s must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.time_scale > 0.0) || !self.time_scale.is_finite() {
            return Err(Error::Config(format!(
                "time_scale must be positive, got {}",
                self.time_scale
            )));
        }
        self.tppr.validate()
    }

    /// T-PPR settings with `k_s` applied.
    pub fn tppr_config(&self) -> TpprConfig {
        TpprConfig {
            k_s: self.k_s,
            ..self.tppr
        }
    }

    /// Width of one node's time-aware representation.
    pub fn repr_dim(g: &TemporalGraph) -> usize {
        g.d_x() + g.d_e()
    }
}

/// Mean inter-event gap over events `[0, n)`, the default `time_scale`.
pub fn mean_gap(g: &TemporalGraph, n: usize) -> f64 {
    let n = n.min(g.num_events());
    if n < 2 {
        return 1.0;
    }
    let span = g.timestamp(n as u64 - 1) - g.timestamp(0);
    let gap = span / (n - 1) as f64;
    if gap > 0.0 && gap.is_finite() {
        gap
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    pub s_ta: f64,
    pub s_sa: f64,
    pub s_hy: f64,
    pub t_bar_v: f64,
    pub t_bar_u: f64,
}

/// Mean of `[x_{v_i}, e_{v,v_i}]` over the neighbors chosen by `cfg`.
pub fn time_aware_representation_with(
    g: &TemporalGraph,
    v: NodeId,
    cutoff: Cutoff,
    cfg: &EagleConfig,
) -> Vec<f64> {
    let mut out = vec![0.0; g.d_x() + g.d_e()];
    accumulate_representation(g, v, cutoff, cfg, &mut out);
    out
}

/// [`time_aware_representation_with`] for the most recent `k_r` neighbors.
pub fn time_aware_representation(
    g: &TemporalGraph,
    v: NodeId,
    cutoff: Cutoff,
    k_r: usize,
) -> Vec<f64> {
    let cfg = EagleConfig {
        k_r,
        ..Default::default()
    };
    time_aware_representation_with(g, v, cutoff, &cfg)
}

fn accumulate_representation(
    g: &TemporalGraph,
    v: NodeId,
    cutoff: Cutoff,
    cfg: &EagleConfig,
    out: &mut [f64],
) {
    out.fill(0.0);
    let picked = g.recent_neighbors(v, cutoff, cfg.k_r, cfg.strategy);
    if picked.is_empty() {
        return;
    }
    let d_x = g.d_x();
    for e in &picked {
        g.node_features(e.node)
            .add_scaled_into(&mut out[..d_x], 1.0);
        for (o, x) in out[d_x..].iter_mut().zip(g.edge_features_of(e.seq)) {
            *o += x;
        }
    }
    let div = if cfg.kr_divisor {
        cfg.k_r
    } else {
        picked.len()
    } as f64;
    for o in out.iter_mut() {
        *o /= div;
    }
}

/// `s_ta(v, u)`: the sigmoid MLP on `[h_v, h_u]`. Not symmetric in `v, u`.
pub fn time_score(
    p: &MlpParams,
    g: &TemporalGraph,
    v: NodeId,
    u: NodeId,
    cutoff: Cutoff,
    cfg: &EagleConfig,
) -> Result<f64> {
    Ok(TimeScorer::new(p, g, cfg)?.score_candidates(g, v, &[u], cutoff)[0])
}

/// Scores many destinations against one source, sharing the source half of
/// the first layer.
pub struct TimeScorer<'a> {
    params: &'a MlpParams,
    cfg: EagleConfig,
    dim: usize,
}

impl<'a> TimeScorer<'a> {
    pub fn new(params: &'a MlpParams, g: &TemporalGraph, cfg: &EagleConfig) -> Result<Self> {
        let dim = g.d_x() + g.d_e();
        if params.d_in != 2 * dim || params.d_out != 1 {
            return Err(Error::Shape(format!(
                "time model is {}->{}, graph needs {}->1",
                params.d_in,
                params.d_out,
                2 * dim
            )));
        }
        Ok(TimeScorer {
            params,
            cfg: *cfg,
            dim,
        })
    }

    pub fn score_candidates(
        &self,
        g: &TemporalGraph,
        v: NodeId,
        candidates: &[NodeId],
        cutoff: Cutoff,
    ) -> Vec<f64> {
        let p = self.params;
        let (dim, d_in, d_h) = (self.dim, p.d_in, p.d_hidden);
        let mut h = vec![0.0; dim];
        accumulate_representation(g, v, cutoff, &self.cfg, &mut h);
        let mut base = p.b1.clone();
        for (j, b) in base.iter_mut().enumerate() {
            *b += crate::dense::dot(&p.w1[j * d_in..j * d_in + dim], &h);
        }
        candidates
            .iter()
            .map(|&u| {
                accumulate_representation(g, u, cutoff, &self.cfg, &mut h);
                let mut z = p.b2[0];
                for j in 0..d_h {
                    let pre =
                        base[j] + crate::dense::dot(&p.w1[j * d_in + dim..(j + 1) * d_in], &h);
                    if pre > 0.0 {
                        z += p.w2[j] * pre;
                    }
                }
                sigmoid(z)
            })
            .collect()
    }
}

/// Input row `[h_v, h_u]` of the time model.
pub fn pair_input(
    g: &TemporalGraph,
    v: NodeId,
    u: NodeId,
    cutoff: Cutoff,
    cfg: &EagleConfig,
) -> Vec<f64> {
    let dim = g.d_x() + g.d_e();
    let mut x = vec![0.0; 2 * dim];
    let (a, b) = x.split_at_mut(dim);
    accumulate_representation(g, v, cutoff, cfg, a);
    accumulate_representation(g, u, cutoff, cfg, b);
    x
}

/// Sum of `pi_v[i] * pi_u[i]` over the shared support.
pub fn structure_score(pi_v: &TpprVector, pi_u: &TpprVector) -> f64 {
    let (a, b) = (pi_v.entries(), pi_u.entries());
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// `exp(-t_v / scale) + exp(-t_u / scale)`; an infinite interval contributes 0.
#[inline]
pub fn recency_weight(time_scale: f64, t_bar_v: f64, t_bar_u: f64) -> f64 {
    (-t_bar_v / time_scale).exp() + (-t_bar_u / time_scale).exp()
}

#[inline]
pub fn hybrid_from_weight(lambda: f64, weight: f64, s_ta: f64, s_sa: f64) -> f64 {
    lambda * weight * s_ta + s_sa
}

pub fn hybrid_score(cfg: &EagleConfig, s_ta: f64, s_sa: f64, t_bar_v: f64, t_bar_u: f64) -> f64 {
    hybrid_from_weight(
        cfg.lambda,
        recency_weight(cfg.time_scale, t_bar_v, t_bar_u),
        s_ta,
        s_sa,
    )
}

pub fn score_triple(
    cfg: &EagleConfig,
    s_ta: f64,
    s_sa: f64,
    t_bar_v: f64,
    t_bar_u: f64,
) -> ScoreTriple {
    ScoreTriple {
        s_ta,
        s_sa,
        s_hy: hybrid_score(cfg, s_ta, s_sa, t_bar_v, t_bar_u),
        t_bar_v,
        t_bar_u,
    }
}

/// Per-candidate components of one ranking query; index 0 is the positive.
/// Kept separate so the hybrid score can be recombined for any `lambda`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateScores {
    pub s_ta: Vec<f64>,
    pub s_sa: Vec<f64>,
    pub weight: Vec<f64>,
}

impl CandidateScores {
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn scores(&self, kind: ScorerKind, lambda: f64) -> Vec<f64> {
        match kind {
            ScorerKind::Time => self.s_ta.clone(),
            ScorerKind::Struct => self.s_sa.clone(),
            ScorerKind::Hybrid => (0..self.len())
                .map(|i| hybrid_from_weight(lambda, self.weight[i], self.s_ta[i], self.s_sa[i]))
                .collect(),
        }
    }
}

/// Validation MRR of the hybrid score for each `lambda` in `grid`.
pub fn lambda_curve(groups: &[CandidateScores], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if groups.is_empty() {
        return Err(Error::Empty(
            "no validation queries for lambda tuning".into(),
        ));
    }
    grid.iter()
        .map(|&lambda| {
            let mut acc = 0.0;
            for g in groups {
                let s = g.scores(ScorerKind::Hybrid, lambda);
                acc += 1.0 / rank_positive(s[0], &s[1..])? as f64;
            }
            Ok((lambda, acc / groups.len() as f64))
        })
        .collect()
}

/// The `lambda` in `grid` with the best validation MRR, ties to the smallest.
pub fn tune_lambda(groups: &[CandidateScores], grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let curve = lambda_curve(groups, grid)?;
    let mut best = curve[0];
    for &(l, m) in &curve[1..] {
        if m > best.1 || (m == best.1 && l < best.0) {
            best = (l, m);
        }
    }
    Ok(best.0)
}
