//! Wall-clock scaling of update and scoring against the problem sizes that
//! drive their cost: scored pairs `m`, `k_r`, `k_s`, and new events `n`.

use std::collections::HashMap;
use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{MlpParams, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::graph::{generate_synthetic, Cutoff, NodeId, SyntheticConfig, TemporalGraph};
use crate::scorers::{hybrid_score, structure_score, EagleConfig, TimeScorer};
use crate::seeds;
use crate::tppr::{TpprConfig, TpprStore, TpprVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchPlan {
    pub synthetic: SyntheticConfig,
    /// Scored pair counts for the `m` series.
    pub pairs: Vec<usize>,
    pub k_r: Vec<usize>,
    pub k_s: Vec<usize>,
    /// New-event counts for the update series.
    pub update_events: Vec<usize>,
    pub fixed_pairs: usize,
    pub fixed_k_r: usize,
    pub fixed_k_s: usize,
    /// Each point is the minimum over this many runs.
    pub repeats: usize,
    pub d_hidden: usize,
    pub tppr: TpprConfig,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            synthetic: SyntheticConfig {
                nodes: 10_000,
                events: 200_000,
                ..Default::default()
            },
            pairs: vec![1000, 2000, 4000, 8000],
            k_r: vec![8, 16, 32, 64],
            k_s: vec![8, 16, 32, 64],
            update_events: vec![250, 500, 1000, 2000],
            fixed_pairs: 2000,
            fixed_k_r: 20,
            fixed_k_s: 20,
            repeats: 3,
            d_hidden: DEFAULT_HIDDEN,
            tppr: TpprConfig::default(),
        }
    }
}

impl BenchPlan {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
            && self.k_r.is_empty()
            && self.k_s.is_empty()
            && self.update_events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub parameter: String,
    /// `(size, seconds)`.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `ln seconds` against `ln size`.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub events: usize,
    pub nodes: usize,
    pub series: Vec<ScalingSeries>,
}

impl BenchReport {
    pub fn series(&self, parameter: &str) -> Option<&ScalingSeries> {
        self.series.iter().find(|s| s.parameter == parameter)
    }

    /// Long-format rows `parameter,size,seconds,exponent`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,size,seconds,exponent\n");
        for s in &self.series {
            for &(x, t) in &s.points {
                out.push_str(&format!("{},{},{},{}\n", s.parameter, x, t, s.exponent));
            }
        }
        out
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn min_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    (0..repeats.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn series(parameter: &str, points: Vec<(f64, f64)>) -> ScalingSeries {
    ScalingSeries {
        parameter: parameter.to_string(),
        exponent: fit_exponent(&points),
        points,
    }
}

/// Full hybrid scoring of `pairs`: time model, T-PPR overlap and recency
/// weights.
fn score_pairs(
    g: &TemporalGraph,
    scorer: &TimeScorer<'_>,
    eagle: &EagleConfig,
    vectors: &HashMap<NodeId, TpprVector>,
    pairs: &[(NodeId, NodeId)],
) -> f64 {
    let t = g.last_timestamp().unwrap_or(0.0);
    let mut acc = 0.0;
    for &(v, u) in pairs {
        let s_ta = scorer.score_candidates(g, v, &[u], Cutoff::ALL)[0];
        let s_sa = structure_score(&vectors[&v], &vectors[&u]);
        let tv = g.mean_recency_interval(v, t, Cutoff::ALL, eagle.k_r);
        let tu = g.mean_recency_interval(u, t, Cutoff::ALL, eagle.k_r);
        acc += hybrid_score(eagle, s_ta, s_sa, tv, tu);
    }
    black_box(acc)
}

pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport> {
    if plan.is_empty() {
        return Err(Error::Empty("benchmark plan has no series".into()));
    }
    let g = generate_synthetic(&plan.synthetic)?;
    let max_pairs = plan
        .pairs
        .iter()
        .copied()
        .chain([plan.fixed_pairs])
        .max()
        .unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::stream(plan.synthetic.seed, "bench-pairs"));
    let n_ev = g.num_events() as u64;
    let pairs: Vec<(NodeId, NodeId)> = (0..max_pairs)
        .map(|_| {
            let a = g.event(rng.random_range(0..n_ev));
            let b = g.event(rng.random_range(0..n_ev));
            (a.source, b.destination)
        })
        .collect();

    let max_k_s = plan
        .k_s
        .iter()
        .copied()
        .chain([plan.fixed_k_s])
        .max()
        .unwrap_or(1);
    let store = TpprStore::assume_current(
        TpprConfig {
            k_s: max_k_s,
            ..plan.tppr
        },
        &g,
    )?;
    let mut full: HashMap<NodeId, TpprVector> = HashMap::new();
    for &(v, u) in &pairs {
        for n in [v, u] {
            full.entry(n)
                .or_insert_with(|| (*store.vector(&g, n)).clone());
        }
    }
    let truncate = |k: usize| -> HashMap<NodeId, TpprVector> {
        full.iter().map(|(&n, vec)| (n, vec.truncated(k))).collect()
    };

    let d_in = 2 * (g.d_x() + g.d_e());
    let params = MlpParams::init(
        d_in,
        plan.d_hidden,
        1,
        seeds::stream(plan.synthetic.seed, seeds::INIT),
    );
    let base = EagleConfig {
        k_r: plan.fixed_k_r,
        k_s: plan.fixed_k_s,
        tppr: plan.tppr,
        ..Default::default()
    };
    let mut out = Vec::new();

    if !plan.pairs.is_empty() {
        let vecs = truncate(plan.fixed_k_s);
        let scorer = TimeScorer::new(&params, &g, &base)?;
        let pts = plan
            .pairs
            .iter()
            .map(|&m| {
                let t = min_time(plan.repeats, || {
                    score_pairs(&g, &scorer, &base, &vecs, &pairs[..m]);
                });
                (m as f64, t)
            })
            .collect();
        out.push(series("m", pts));
    }
    if !plan.k_r.is_empty() {
        let vecs = truncate(plan.fixed_k_s);
        let mut pts = Vec::new();
        for &k_r in &plan.k_r {
            let eagle = EagleConfig { k_r, ..base };
            let scorer = TimeScorer::new(&params, &g, &eagle)?;
            let t = min_time(plan.repeats, || {
                score_pairs(&g, &scorer, &eagle, &vecs, &pairs[..plan.fixed_pairs]);
            });
            pts.push((k_r as f64, t));
        }
        out.push(series("k_r", pts));
    }
    if !plan.k_s.is_empty() {
        let scorer = TimeScorer::new(&params, &g, &base)?;
        let mut pts = Vec::new();
        let mut sa_pts = Vec::new();
        for &k_s in &plan.k_s {
            let vecs = truncate(k_s);
            let t = min_time(plan.repeats, || {
                score_pairs(&g, &scorer, &base, &vecs, &pairs[..plan.fixed_pairs]);
            });
            let t_sa = min_time(plan.repeats, || {
                let s: f64 = pairs[..plan.fixed_pairs]
                    .iter()
                    .map(|(v, u)| structure_score(&vecs[v], &vecs[u]))
                    .sum();
                black_box(s);
            });
            pts.push((k_s as f64, t));
            sa_pts.push((k_s as f64, t_sa));
        }
        out.push(series("k_s", pts));
        out.push(series("k_s_structure_only", sa_pts));
    }
    if !plan.update_events.is_empty() {
        let max_n = *plan.update_events.iter().max().expect("non-empty");
        if max_n >= g.num_events() {
            return Err(Error::Config(
                "update series exceeds the generated events".into(),
            ));
        }
        let start = g.num_events() - max_n;
        let mut pts = Vec::new();
        for &n in &plan.update_events {
            let mut working = g.prefix(start);
            let mut store = TpprStore::assume_current(plan.tppr, &working)?;
            for s in start..start + n {
                working.ingest(g.event(s as u64).to_owned_event())?;
            }
            let t = Instant::now();
            store.update(&working);
            pts.push((n as f64, t.elapsed().as_secs_f64()));
        }
        out.push(series("n", pts));
    }
    Ok(BenchReport {
        events: g.num_events(),
        nodes: g.num_nodes(),
        series: out,
    })
}
