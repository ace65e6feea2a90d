//! Acceptance suite. Runs as a plain binary so every criterion prints one
//! status line even when it passes. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 1 4`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use eagle_core::dense::{Head, MlpParams};
use eagle_core::eval::{compute_metrics, EvalConfig, EvalReport};
use eagle_core::experiment::{
    motiv, prepare, prepare_graph, run_seed, ModelSource, MotivPlan, RunManifest, SeedRun,
};
use eagle_core::graph::{
    generate_synthetic, DatasetFormat, Event, NodeId, SyntheticConfig, TemporalGraph,
};
use eagle_core::nc::ndcg_at_10;
use eagle_core::scaling::{run_bench, BenchPlan};
use eagle_core::scorers::{score_triple, CandidateScores, EagleConfig, ScorerKind};
use eagle_core::tppr::{transition_row, TpprConfig, TpprStore};
use eagle_core::Cutoff;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and thresholds.
const TPPR_ENTRY_TOL: f64 = 1e-4;
const ROW_SUM_TOL: f64 = 1e-9;
const ROW_CORPUS: usize = 10_000;
const GRAD_H: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_DENOM_FLOOR: f64 = 1e-6;
const GRAD_INSTANCES: usize = 100;
const ALGEBRA_TRIPLES: usize = 1000;
const METRIC_TOL: f64 = 1e-12;
const METRIC_FIXTURES: usize = 100;
const TREND_MIN_GAP: f64 = 0.01;
const WIKI_HYBRID_SLACK: f64 = 0.005;
const WIKI_STRUCT_OVER_TIME: f64 = 0.05;
const WIKI_HYBRID_MRR: f64 = 0.8819;
const WIKI_HYBRID_BAND: f64 = 0.05;
const SCALING_MAX_EXPONENT: f64 = 1.3;
const DOUBLING_M_RANGE: (f64, f64) = (1.6, 2.6);
const DOUBLING_KS_MAX: f64 = 2.6;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        status: if pass { Status::Pass } else { Status::Fail },
        detail,
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [Criterion; 10] = [
        (1, "T-PPR matches dense oracle", c1_tppr_oracle),
        (2, "transition rows normalize", c2_row_normalization),
        (3, "MLP gradients match finite differences", c3_gradients),
        (4, "hybrid score collapses", c4_hybrid_algebra),
        (
            5,
            "structure scorer is deterministic",
            c5_struct_determinism,
        ),
        (6, "metrics match brute force", c6_metric_oracles),
        (
            7,
            "recent > uniform > old neighbor selection",
            c7_selection_trend,
        ),
        (8, "Wikipedia scorer ordering", c8_wikipedia_ordering),
        (9, "scoring scales at most linearly", c9_scaling),
        (10, "manifest reruns are bit-identical", c10_reproducibility),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let clock = Instant::now();
        let o = run();
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!(
            "criterion {n:>2} {tag} {name}: {} [{:.1}s]",
            o.detail,
            clock.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

// ---------- helpers ----------

fn random_events(rng: &mut ChaCha8Rng, nodes: u32, events: usize) -> Vec<Event> {
    let mut t = 0.0;
    (0..events)
        .map(|_| {
            if rng.random_bool(0.6) {
                t += rng.random_range(0..4) as f64;
            }
            let a = rng.random_range(0..nodes);
            let b = (a + rng.random_range(1..nodes)) % nodes;
            Event::new(a, b, t)
        })
        .collect()
}

/// Rows built straight from the event list: the k-th most recent event of a
/// node (later events first, ties by insertion order) weighs `beta^k`.
fn oracle_rows(events: &[Event], n: usize, beta: f64) -> Vec<Vec<(usize, f64)>> {
    let mut hist: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in events {
        hist[e.source.index()].push(e.destination.index());
        hist[e.destination.index()].push(e.source.index());
    }
    hist.into_iter()
        .map(|h| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            let mut total = 0.0;
            for (k, &p) in h.iter().rev().enumerate() {
                let w = beta.powi(k as i32 + 1);
                *acc.entry(p).or_default() += w;
                total += w;
            }
            acc.into_iter().map(|(p, w)| (p, w / total)).collect()
        })
        .collect()
}

/// Row `v` of `(1 - alpha) (I - alpha P)^-1` for every `v`, by Gauss-Jordan.
fn oracle_ppr(rows: &[Vec<(usize, f64)>], alpha: f64) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter().enumerate() {
        a[i][i] += 1.0;
        for &(j, p) in row {
            a[i][j] -= alpha * p;
        }
    }
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(i == j)).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for j in 0..n {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv.iter()
        .map(|r| r.iter().map(|x| (1.0 - alpha) * x).collect())
        .collect()
}

fn synthetic_manifest(dir: &Path, synthetic: &str, body: &str) -> PathBuf {
    fs::write(dir.join("synthetic.toml"), synthetic).unwrap();
    let path = dir.join("manifest.toml");
    fs::write(
        &path,
        format!("{body}\n[dataset]\npath = \"synthetic.toml\"\nformat = \"synthetic-config\"\n"),
    )
    .unwrap();
    path
}

fn metric_bits(r: &EvalReport) -> Vec<u64> {
    let mut v = vec![r.ap.to_bits(), r.mrr.to_bits(), r.n_edges as u64];
    v.extend(r.hr.iter().flat_map(|(&n, h)| [n as u64, h.to_bits()]));
    v
}

/// HR@1 <= MRR always holds. MRR <= HR@10 can fail when pessimistic ties
/// push most ranks just past 10, so it is checked on reports, not assumed.
fn hr_order_holds(r: &EvalReport) -> bool {
    let hr1 = r.hr[&1];
    let hr10 = r.hr.get(&10).copied().unwrap_or(1.0);
    hr1 <= r.mrr && r.mrr <= hr10
}

fn wikipedia_path() -> Option<PathBuf> {
    let p = std::env::var_os("EAGLE_WIKIPEDIA")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wikipedia.csv"));
    p.exists().then_some(p)
}

fn wikipedia_manifest(path: PathBuf) -> RunManifest {
    let mut m = RunManifest::default();
    m.dataset.path = path;
    m.dataset.format = DatasetFormat::JodieCsv;
    m
}

// ---------- criteria ----------

fn c1_tppr_oracle() -> Outcome {
    let alphas = [0.3, 0.5, 0.9];
    let betas = [0.5, 0.9, 1.0];
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let nodes = 40 + (i as u32 * 37) % 161;
        let n_events = 400 + 80 * i as usize;
        let (alpha, beta) = (alphas[i as usize % 3], betas[(i as usize / 3) % 3]);
        let k_s = 5 + (i as usize % 4) * 5;
        let events = random_events(&mut rng, nodes, n_events);
        let mut g = TemporalGraph::new(0, 1);
        let mut store = TpprStore::new(TpprConfig::new(alpha, beta, k_s)).unwrap();
        let batch = n_events.div_ceil(3);
        for end in [batch, 2 * batch, n_events].map(|e| e.min(n_events)) {
            for e in &events[g.num_events()..end] {
                g.ingest(e.clone()).unwrap();
            }
            store.update(&g);
            let exact = oracle_ppr(&oracle_rows(&events[..end], g.num_nodes(), beta), alpha);
            for v in g.observed_nodes() {
                let got = store.vector(&g, v);
                let ex = &exact[v.index()];
                let mut sorted: Vec<f64> = ex.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let kth = sorted[(k_s - 1).min(sorted.len() - 1)];
                let min_stored = got
                    .entries()
                    .iter()
                    .map(|e| e.1)
                    .fold(f64::INFINITY, f64::min);
                let mut ok = got.len() <= k_s;
                for &(n, s) in got.entries() {
                    let d = (ex[n.index()] - s).abs();
                    worst = worst.max(d);
                    ok &= d < TPPR_ENTRY_TOL && ex[n.index()] >= kth - TPPR_ENTRY_TOL;
                }
                for (n, &s) in ex.iter().enumerate() {
                    if got.score(NodeId(n as u32)).is_none() {
                        let bound = if got.len() == k_s { min_stored } else { 0.0 };
                        ok &= s < bound + TPPR_ENTRY_TOL;
                    }
                }
                checked += 1;
                if !ok && failures.len() < 3 {
                    failures.push(format!("graph {i} node {v} alpha {alpha} beta {beta}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "20 graphs, {checked} vectors, worst |delta| {worst:.2e} (< {TPPR_ENTRY_TOL:.0e}){}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(", mismatches: {failures:?}")
            }
        ),
    )
}

fn c2_row_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = 0usize;
    let mut worst = 0.0f64;
    while rows < ROW_CORPUS {
        let nodes = rng.random_range(2..60);
        let n_events = rng.random_range(1..1500);
        let events = random_events(&mut rng, nodes, n_events);
        let mut g = TemporalGraph::new(0, 1);
        for e in events {
            g.ingest(e).unwrap();
        }
        let beta = if rng.random_bool(0.2) {
            1.0
        } else {
            rng.random_range(0.01..1.0)
        };
        for v in g.observed_nodes().collect::<Vec<_>>() {
            let row = transition_row(&g, v, Cutoff::ALL, beta);
            if !row.probs.is_empty() {
                let sum: f64 = row.probs.iter().map(|p| p.1).sum();
                worst = worst.max((sum - 1.0).abs());
                rows += 1;
            }
        }
    }
    let mut g = TemporalGraph::new(0, 1);
    g.ingest(Event::new(0, 1, 1.0)).unwrap();
    g.ingest(Event::new(0, 2, 2.0)).unwrap();
    let row = transition_row(&g, NodeId(0), Cutoff::ALL, 0.5);
    let exact = row.probs == vec![(NodeId(1), 1.0 / 3.0), (NodeId(2), 2.0 / 3.0)];
    outcome(
        worst <= ROW_SUM_TOL && exact,
        format!("{rows} rows, worst |sum - 1| {worst:.2e} (<= {ROW_SUM_TOL:.0e}); two-neighbor row exact: {exact}"),
    )
}

fn c3_gradients() -> Outcome {
    let mut worst = 0.0f64;
    for (hi, head) in [Head::Sigmoid, Head::Softmax, Head::None]
        .into_iter()
        .enumerate()
    {
        for i in 0..GRAD_INSTANCES as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + 1000 * hi as u64 + i);
            let (d_in, d_h, d_out) = (
                rng.random_range(1..7),
                rng.random_range(1..9),
                rng.random_range(1..5),
            );
            let p = MlpParams::init(d_in, d_h, d_out, i);
            let x: Vec<f64> = (0..d_in).map(|_| rng.random_range(-2.0..2.0)).collect();
            let up: Vec<f64> = (0..d_out).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = |p: &MlpParams, x: &[f64]| -> f64 {
                p.forward(x, head)
                    .unwrap()
                    .iter()
                    .zip(&up)
                    .map(|(a, b)| a * b)
                    .sum()
            };
            let g = p.backward(&x, &up, head).unwrap();
            let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(GRAD_DENOM_FLOOR);
            let analytic: Vec<f64> = [&g.params.w1, &g.params.b1, &g.params.w2, &g.params.b2]
                .into_iter()
                .flatten()
                .copied()
                .collect();
            let mut idx = 0;
            for t in 0..4 {
                let len = [p.w1.len(), p.b1.len(), p.w2.len(), p.b2.len()][t];
                for j in 0..len {
                    let mut plus = p.clone();
                    let mut minus = p.clone();
                    [&mut plus.w1, &mut plus.b1, &mut plus.w2, &mut plus.b2][t][j] += GRAD_H;
                    [&mut minus.w1, &mut minus.b1, &mut minus.w2, &mut minus.b2][t][j] -= GRAD_H;
                    let num = (f(&plus, &x) - f(&minus, &x)) / (2.0 * GRAD_H);
                    worst = worst.max(rel(analytic[idx], num));
                    idx += 1;
                }
            }
            for j in 0..d_in {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += GRAD_H;
                xm[j] -= GRAD_H;
                let num = (f(&p, &xp) - f(&p, &xm)) / (2.0 * GRAD_H);
                worst = worst.max(rel(g.input[j], num));
            }
        }
    }
    outcome(
        worst < GRAD_REL_TOL,
        format!("3 heads x {GRAD_INSTANCES} instances, max relative error {worst:.2e} (< {GRAD_REL_TOL:.0e})"),
    )
}

fn c4_hybrid_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = [0usize; 3];
    for _ in 0..ALGEBRA_TRIPLES {
        let s_ta: f64 = rng.random_range(0.0..1.0);
        let s_sa: f64 = rng.random_range(0.0..1.0);
        let tv: f64 = rng.random_range(0.0..100.0);
        let tu: f64 = rng.random_range(0.0..100.0);
        let scale = rng.random_range(0.01..10.0);
        let base = EagleConfig {
            time_scale: scale,
            ..Default::default()
        };
        let zero = EagleConfig {
            lambda: 0.0,
            ..base
        };
        bad[0] += usize::from(score_triple(&zero, s_ta, s_sa, tv, tu).s_hy != s_sa);
        let any = EagleConfig {
            lambda: rng.random_range(0.0..10.0),
            ..base
        };
        bad[1] +=
            usize::from(score_triple(&any, s_ta, s_sa, f64::INFINITY, f64::INFINITY).s_hy != s_sa);
        let one = EagleConfig {
            lambda: 1.0,
            ..base
        };
        bad[2] += usize::from(score_triple(&one, s_ta, s_sa, 0.0, 0.0).s_hy != 2.0 * s_ta + s_sa);
    }
    outcome(
        bad == [0, 0, 0],
        format!(
            "{ALGEBRA_TRIPLES} triples; inexact cases lambda=0: {}, t=inf: {}, t=0: {}",
            bad[0], bad[1], bad[2]
        ),
    )
}

fn c5_struct_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = synthetic_manifest(
        dir.path(),
        "seed = 5\nnodes = 1000\nevents = 20000\n",
        "seeds = [0]\ntune_lambda = false",
    );
    let run = || -> SeedRun {
        let m = RunManifest::load(&path).unwrap();
        let p = prepare(&m).unwrap();
        run_seed(&p, &m, 0, &[ScorerKind::Struct], ModelSource::Train).unwrap()
    };
    let (a, b) = (run(), run());
    let (ra, rb) = (&a.reports[0], &b.reports[0]);
    let same = metric_bits(ra) == metric_bits(rb);
    outcome(
        same && hr_order_holds(ra),
        format!(
            "20k-event run twice: AP {:.4} MRR {:.4} HR@10 {:.4}, bit-identical: {same}",
            ra.ap, ra.mrr, ra.hr[&10]
        ),
    )
}

fn brute_ap(items: &[(f64, bool)]) -> f64 {
    // Positives go after every negative with an equal score.
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[b]
            .0
            .total_cmp(&items[a].0)
            .then_with(|| items[a].1.cmp(&items[b].1))
            .then(a.cmp(&b))
    });
    let (mut hits, mut total) = (0usize, 0.0);
    for (pos, &i) in order.iter().enumerate() {
        if items[i].1 {
            hits += 1;
            total += hits as f64 / (pos + 1) as f64;
        }
    }
    total / hits as f64
}

fn brute_rank(scores: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then((a == 0).cmp(&(b == 0)))
    });
    order.iter().position(|&i| i == 0).unwrap() + 1
}

fn brute_ndcg(pred: &[f64], truth: &[f64]) -> f64 {
    let mut left: Vec<usize> = (0..pred.len()).collect();
    let mut dcg = 0.0;
    for i in 0..10.min(pred.len()) {
        let best = left
            .iter()
            .enumerate()
            .fold(0, |b, (j, &c)| if pred[c] > pred[left[b]] { j } else { b });
        dcg += truth[left.remove(best)] / (i as f64 + 2.0).log2();
    }
    let mut ideal = truth.to_vec();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let idcg: f64 = ideal
        .iter()
        .take(10)
        .enumerate()
        .map(|(i, g)| g / (i as f64 + 2.0).log2())
        .sum();
    if idcg == 0.0 {
        1.0
    } else {
        dcg / idcg
    }
}

fn c6_metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = EvalConfig::default();
    let mut worst = 0.0f64;
    for f in 0..METRIC_FIXTURES {
        let discrete = f % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| {
            if discrete {
                rng.random_range(0..6) as f64 / 5.0
            } else {
                rng.random_range(0.0..1.0)
            }
        };
        let groups: Vec<CandidateScores> = (0..rng.random_range(1..40))
            .map(|_| {
                let s: Vec<f64> = (0..100).map(|_| draw(&mut rng)).collect();
                CandidateScores {
                    s_ta: vec![0.0; 100],
                    weight: vec![0.0; 100],
                    s_sa: s,
                }
            })
            .collect();
        let m = compute_metrics(&groups, ScorerKind::Struct, 0.0, &cfg).unwrap();
        let ranks: Vec<usize> = groups.iter().map(|g| brute_rank(&g.s_sa)).collect();
        let items: Vec<(f64, bool)> = groups
            .iter()
            .flat_map(|g| g.s_sa.iter().enumerate().map(|(i, &s)| (s, i == 0)))
            .collect();
        worst = worst.max((m.ap - brute_ap(&items)).abs());
        let q = ranks.len() as f64;
        worst = worst.max((m.mrr - ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / q).abs());
        for (&n, &h) in &m.hr {
            worst = worst.max((h - ranks.iter().filter(|&&r| r <= n).count() as f64 / q).abs());
        }
        let cats = rng.random_range(2..30);
        let pred: Vec<f64> = (0..cats).map(|_| draw(&mut rng)).collect();
        let truth: Vec<f64> = (0..cats)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(0.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        worst = worst.max((ndcg_at_10(&pred, &truth) - brute_ndcg(&pred, &truth)).abs());
    }

    // Ordering of HR@1, MRR and HR@10 on reports from every scorer.
    let dir = tempfile::tempdir().unwrap();
    let path = synthetic_manifest(
        dir.path(),
        "seed = 6\nnodes = 300\nevents = 6000\n",
        "seeds = [0, 1]\n[train]\nepochs_max = 5\nd_hidden = 16",
    );
    let m = RunManifest::load(&path).unwrap();
    let p = prepare(&m).unwrap();
    let mut reports = Vec::new();
    for &seed in &m.seeds {
        reports.extend(
            run_seed(&p, &m, seed, &ScorerKind::ALL, ModelSource::Train)
                .unwrap()
                .reports,
        );
    }
    let ordered = reports.iter().filter(|r| hr_order_holds(r)).count();
    outcome(
        worst <= METRIC_TOL && ordered == reports.len(),
        format!(
            "{METRIC_FIXTURES} fixtures, worst |delta| {worst:.1e} (<= {METRIC_TOL:.0e}); HR@1 <= MRR <= HR@10 on {ordered}/{} reports",
            reports.len()
        ),
    )
}

fn trend(m: &RunManifest, p: &eagle_core::experiment::Prepared) -> (bool, String) {
    let plan = MotivPlan {
        strategies: vec!["recent".into(), "uniform".into(), "old".into()],
        k: vec![10],
    };
    let rows = motiv(p, m, &plan, 0).unwrap();
    let (r, u, o) = (rows[0].ap, rows[1].ap, rows[2].ap);
    let pass = r - u >= TREND_MIN_GAP && u - o >= TREND_MIN_GAP;
    (pass, format!("AP recent {r:.4} uniform {u:.4} old {o:.4}"))
}

fn c7_selection_trend() -> Outcome {
    let m = RunManifest::default();
    let g = generate_synthetic(&SyntheticConfig {
        events: 50_000,
        ..Default::default()
    })
    .unwrap();
    let p = prepare_graph(&m, g).unwrap();
    let (pass, detail) = trend(&m, &p);
    let mut detail = format!("synthetic 50k events: {detail}; gaps must be >= {TREND_MIN_GAP}");
    let mut all = pass;
    match wikipedia_path() {
        Some(path) => {
            let m = wikipedia_manifest(path);
            let p = prepare(&m).unwrap();
            let (wp, wd) = trend(&m, &p);
            all &= wp;
            detail.push_str(&format!("; wikipedia: {wd}"));
        }
        None => detail.push_str("; wikipedia not present, synthetic only"),
    }
    outcome(all, detail)
}

fn c8_wikipedia_ordering() -> Outcome {
    let Some(path) = wikipedia_path() else {
        return Outcome {
            status: Status::Skip,
            detail: "needs data/wikipedia.csv or EAGLE_WIKIPEDIA".into(),
        };
    };
    let m = wikipedia_manifest(path);
    let p = prepare(&m).unwrap();
    let run = run_seed(&p, &m, 0, &ScorerKind::ALL, ModelSource::Train).unwrap();
    let mrr = |k: ScorerKind| {
        run.reports
            .iter()
            .find(|r| r.config.scorer == k)
            .unwrap()
            .mrr
    };
    let (t, s, h) = (
        mrr(ScorerKind::Time),
        mrr(ScorerKind::Struct),
        mrr(ScorerKind::Hybrid),
    );
    let pass = h >= t.max(s) - WIKI_HYBRID_SLACK
        && s - t >= WIKI_STRUCT_OVER_TIME
        && (h - WIKI_HYBRID_MRR).abs() <= WIKI_HYBRID_BAND;
    outcome(
        pass,
        format!(
            "MRR time {t:.4} struct {s:.4} hybrid {h:.4} (lambda {})",
            run.lambda
        ),
    )
}

fn c9_scaling() -> Outcome {
    let plan = BenchPlan {
        synthetic: SyntheticConfig {
            nodes: 20_000,
            events: 1_000_000,
            ..Default::default()
        },
        pairs: vec![4000, 8000, 16000, 32000],
        k_r: vec![10, 20, 40, 80],
        k_s: vec![10, 20, 40, 80],
        update_events: vec![1000, 2000, 4000, 8000],
        fixed_pairs: 8000,
        fixed_k_r: 20,
        fixed_k_s: 20,
        repeats: 5,
        ..Default::default()
    };
    let r = run_bench(&plan).unwrap();
    let exp = |p: &str| r.series(p).unwrap().exponent;
    let ratios = |p: &str| -> Vec<f64> {
        r.series(p)
            .unwrap()
            .points
            .windows(2)
            .map(|w| w[1].1 / w[0].1)
            .collect()
    };
    let exps_ok = ["m", "k_r", "k_s"]
        .iter()
        .all(|p| exp(p) <= SCALING_MAX_EXPONENT);
    let m_ratios = ratios("m");
    let ks_ratios = ratios("k_s_structure_only");
    let m_ok = m_ratios
        .iter()
        .all(|x| (DOUBLING_M_RANGE.0..=DOUBLING_M_RANGE.1).contains(x));
    let ks_ok = ks_ratios.iter().all(|&x| x <= DOUBLING_KS_MAX);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.2}"))
            .collect::<Vec<_>>()
            .join("/")
    };
    outcome(
        exps_ok && m_ok && ks_ok,
        format!(
            "{} events; exponents m {:.2} k_r {:.2} k_s {:.2} (<= {SCALING_MAX_EXPONENT}), update n {:.2}; \
             doubling-m ratios {} in [{}, {}]; doubling-k_s overlap ratios {} <= {DOUBLING_KS_MAX}",
            r.events,
            exp("m"),
            exp("k_r"),
            exp("k_s"),
            exp("n"),
            fmt(&m_ratios),
            DOUBLING_M_RANGE.0,
            DOUBLING_M_RANGE.1,
            fmt(&ks_ratios),
        ),
    )
}

fn c10_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = synthetic_manifest(
        dir.path(),
        "seed = 10\nnodes = 400\nevents = 8000\ncommunities = 6\n",
        "seeds = [0, 1]\n[train]\nepochs_max = 5\nd_hidden = 32",
    );
    let run_all = |m: &RunManifest| -> Vec<SeedRun> {
        let p = prepare(m).unwrap();
        m.seeds
            .iter()
            .map(|&s| run_seed(&p, m, s, &ScorerKind::ALL, ModelSource::Train).unwrap())
            .collect()
    };
    let first = RunManifest::load(&path).unwrap();
    let a = run_all(&first);
    // rerun from the re-serialized manifest on a wider thread pool
    let again = dir.path().join("again.toml");
    fs::write(&again, first.to_toml()).unwrap();
    let second = RunManifest::load(&again).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let b = pool.install(|| run_all(&second));
    let bits = |runs: &[SeedRun]| -> Vec<Vec<u64>> {
        runs.iter()
            .flat_map(|r| {
                let mut extra = vec![r.lambda.to_bits()];
                if let Some(log) = &r.train_log {
                    extra.extend(log.epochs.iter().map(|e| e.valid_loss.to_bits()));
                }
                r.reports
                    .iter()
                    .map(metric_bits)
                    .chain(std::iter::once(extra))
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let same = bits(&a) == bits(&b) && first == second;
    let n_reports: usize = a.iter().map(|r| r.reports.len()).sum();
    outcome(
        same,
        format!("2 seeds x 3 scorers, 1 vs 4 threads: {n_reports} reports bit-identical: {same}"),
    )
}
