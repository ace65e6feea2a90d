//! Ranking evaluation under sampled negatives.

mod metrics;
mod negatives;
mod stream;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dense::MlpParams;
use crate::error::{Error, Result};
use crate::graph::{DatasetSplit, TemporalGraph};
use crate::scorers::{CandidateScores, EagleConfig, ScorerKind};
use crate::seeds;

pub use metrics::{average_precision, hit_ratio, mrr, rank_positive, ApMode};
pub use negatives::{sample_test_negatives, sample_train_negative};
pub use stream::{NegativePlan, QueryStream};

pub const DEFAULT_HR_CUTOFFS: [usize; 5] = [10, 20, 30, 40, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub num_test_negatives: usize,
    pub hr_cutoffs: Vec<usize>,
    pub seed: u64,
    pub ap_mode: ApMode,
    /// Events scored between consecutive graph and T-PPR updates.
    pub batch_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            num_test_negatives: 99,
            hr_cutoffs: DEFAULT_HR_CUTOFFS.to_vec(),
            seed: 0,
            ap_mode: ApMode::Pooled,
            batch_size: 200,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_test_negatives == 0 {
            return Err(Error::Config(
                "num_test_negatives must be at least 1".into(),
            ));
        }
        if let Some(&n) = self
            .hr_cutoffs
            .iter()
            .find(|&&n| n == 0 || n > self.num_test_negatives + 1)
        {
            return Err(Error::Config(format!(
                "HR cutoff {n} outside 1..={}",
                self.num_test_negatives + 1
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn test_plan(&self) -> NegativePlan {
        NegativePlan {
            count: self.num_test_negatives,
            stream_seed: seeds::stream(self.seed, seeds::TEST_NEGATIVES),
        }
    }

    pub fn valid_plan(&self) -> NegativePlan {
        NegativePlan {
            count: self.num_test_negatives,
            stream_seed: seeds::stream(self.seed, seeds::VALID_NEGATIVES),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_s: f64,
    pub update_s: f64,
    pub infer_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub scorer: ScorerKind,
    pub k_r: usize,
    pub k_s: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub num_test_negatives: usize,
    pub ap_mode: ApMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ap: f64,
    pub mrr: f64,
    /// HR@N keyed by N; always includes N = 1.
    pub hr: BTreeMap<usize, f64>,
    pub n_edges: usize,
    pub timing: Timing,
    pub peak_memory_bytes: u64,
    pub config: ConfigEcho,
}

impl EvalReport {
    /// The metric fields only, for reproducibility comparisons.
    pub fn metrics(&self) -> (f64, f64, &BTreeMap<usize, f64>, usize) {
        (self.ap, self.mrr, &self.hr, self.n_edges)
    }

    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = [
            "dataset", "scorer", "k_r", "k_s", "alpha", "beta", "lambda", "ap", "mrr",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(self.hr.keys().map(|n| format!("hr{n}")));
        cols.extend(
            ["t_train_s", "t_infer_s", "peak_mem_b"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        let mut cols = vec![
            c.dataset.clone(),
            c.scorer.name().to_string(),
            c.k_r.to_string(),
            c.k_s.to_string(),
            c.alpha.to_string(),
            c.beta.to_string(),
            c.lambda.to_string(),
            self.ap.to_string(),
            self.mrr.to_string(),
        ];
        cols.extend(self.hr.values().map(|h| h.to_string()));
        cols.push(self.timing.train_s.to_string());
        cols.push(self.timing.infer_s.to_string());
        cols.push(self.peak_memory_bytes.to_string());
        cols.join(",")
    }
}

/// Aggregate metrics over scored queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub ap: f64,
    pub mrr: f64,
    pub hr: BTreeMap<usize, f64>,
    pub n_edges: usize,
}

pub fn compute_metrics(
    groups: &[CandidateScores],
    kind: ScorerKind,
    lambda: f64,
    cfg: &EvalConfig,
) -> Result<Metrics> {
    if groups.is_empty() {
        return Err(Error::Empty("no scored queries".into()));
    }
    let mut ranks = Vec::with_capacity(groups.len());
    let mut pooled = Vec::new();
    let mut per_edge = 0.0;
    for g in groups {
        let s = g.scores(kind, lambda);
        let r = rank_positive(s[0], &s[1..])?;
        ranks.push(r);
        match cfg.ap_mode {
            ApMode::Pooled => {
                pooled.push((s[0], true));
                pooled.extend(s[1..].iter().map(|&x| (x, false)));
            }
            ApMode::PerEdge => per_edge += 1.0 / r as f64,
        }
    }
    let ap = match cfg.ap_mode {
        ApMode::Pooled => average_precision(&pooled)?,
        ApMode::PerEdge => per_edge / groups.len() as f64,
    };
    let mut hr = BTreeMap::new();
    hr.insert(1, hit_ratio(&ranks, 1));
    for &n in &cfg.hr_cutoffs {
        hr.insert(n, hit_ratio(&ranks, n));
    }
    Ok(Metrics {
        ap,
        mrr: mrr(&ranks),
        hr,
        n_edges: groups.len(),
    })
}

/// Test-split queries scored once; reports for any scorer and `lambda`
/// are derived from these without rescoring.
#[derive(Debug, Clone)]
pub struct ScoredTest {
    pub groups: Vec<CandidateScores>,
    pub update_s: f64,
    pub infer_s: f64,
}

/// Replays the test split: validation and train events are preloaded, each
/// test batch is scored and then ingested. The model stays frozen.
pub fn score_test(
    g: &TemporalGraph,
    split: &DatasetSplit,
    eagle: &EagleConfig,
    model: Option<&MlpParams>,
    with_tppr: bool,
    cfg: &EvalConfig,
) -> Result<ScoredTest> {
    cfg.validate()?;
    let test = split.test().start as usize..split.test().end as usize;
    if test.is_empty() {
        return Err(Error::Empty("test split is empty".into()));
    }
    let mut qs = QueryStream::new(g, test.start, eagle, model, with_tppr)?;
    let groups = qs.score_range(test, cfg.test_plan(), cfg.batch_size)?;
    Ok(ScoredTest {
        groups,
        update_s: qs.update_s,
        infer_s: qs.infer_s,
    })
}

/// Scores the validation split the same way, for lambda selection.
pub fn score_validation(
    g: &TemporalGraph,
    split: &DatasetSplit,
    eagle: &EagleConfig,
    model: Option<&MlpParams>,
    cfg: &EvalConfig,
) -> Result<Vec<CandidateScores>> {
    cfg.validate()?;
    let valid = split.valid().start as usize..split.valid().end as usize;
    if valid.is_empty() {
        return Err(Error::Empty("validation split is empty".into()));
    }
    let mut qs = QueryStream::new(g, valid.start, eagle, model, true)?;
    qs.score_range(valid, cfg.valid_plan(), cfg.batch_size)
}

pub fn build_report(
    scored: &ScoredTest,
    kind: ScorerKind,
    eagle: &EagleConfig,
    cfg: &EvalConfig,
    dataset: &str,
    train_s: f64,
) -> Result<EvalReport> {
    let m = compute_metrics(&scored.groups, kind, eagle.lambda, cfg)?;
    Ok(EvalReport {
        ap: m.ap,
        mrr: m.mrr,
        hr: m.hr,
        n_edges: m.n_edges,
        timing: Timing {
            train_s,
            update_s: scored.update_s,
            infer_s: scored.infer_s,
        },
        peak_memory_bytes: peak_memory_bytes(),
        config: ConfigEcho {
            dataset: dataset.to_string(),
            scorer: kind,
            k_r: eagle.k_r,
            k_s: eagle.k_s,
            alpha: eagle.tppr.alpha,
            beta: eagle.tppr.beta,
            lambda: if kind == ScorerKind::Hybrid {
                eagle.lambda
            } else {
                0.0
            },
            num_test_negatives: cfg.num_test_negatives,
            ap_mode: cfg.ap_mode,
            seed: cfg.seed,
        },
    })
}

/// Scores the test split with `kind` and reports its metrics.
pub fn evaluate(
    g: &TemporalGraph,
    split: &DatasetSplit,
    kind: ScorerKind,
    eagle: &EagleConfig,
    model: Option<&MlpParams>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if kind.needs_model() && model.is_none() {
        return Err(Error::MissingArtifact(format!(
            "{} scorer needs a trained time model",
            kind.name()
        )));
    }
    let model = if kind.needs_model() { model } else { None };
    let scored = score_test(g, split, eagle, model, kind.needs_tppr(), cfg)?;
    build_report(&scored, kind, eagle, cfg, "", 0.0)
}

/// Peak resident set size of this process, 0 where unavailable.
pub fn peak_memory_bytes() -> u64 {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("VmHWM:"))
                .and_then(|l| l.split_whitespace().nth(1))
                .and_then(|kb| kb.parse::<u64>().ok())
        })
        .map(|kb| kb * 1024)
        .unwrap_or(0)
}
