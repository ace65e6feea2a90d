//! Manifest-driven runs: train, evaluate, sweep and neighbor-selection
//! comparisons. Everything here is reproducible from a manifest and a seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::MlpParams;
use crate::error::{Error, Result};
use crate::eval::{
    build_report, compute_metrics, score_test, score_validation, EvalConfig, EvalReport,
};
use crate::graph::{
    chronological_split, load_events, DatasetFormat, DatasetSplit, LoadOptions, RolePool,
    SamplingStrategy, TemporalGraph, DEFAULT_FRACTIONS,
};
use crate::scaling::BenchPlan;
use crate::scorers::{lambda_curve, mean_gap, tune_lambda, EagleConfig, ScorerKind, LAMBDA_GRID};
use crate::trainer::{train_time_model, TrainConfig, TrainLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    /// Label used in reports; defaults to the file stem.
    pub name: String,
    pub path: PathBuf,
    pub format: DatasetFormat,
    pub role_pool: Option<RolePool>,
    pub d_x: usize,
    pub snap_d_e: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            name: String::new(),
            path: PathBuf::new(),
            format: DatasetFormat::Canonical,
            role_pool: None,
            d_x: 0,
            snap_d_e: 1,
        }
    }
}

impl DatasetSpec {
    pub fn label(&self) -> String {
        if !self.name.is_empty() {
            return self.name.clone();
        }
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }

    pub fn load(&self) -> Result<TemporalGraph> {
        let opts = LoadOptions {
            d_x: self.d_x,
            snap_d_e: self.snap_d_e,
            role_pool: self.role_pool,
        };
        load_events(&self.path, self.format, &opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub k_r: Vec<usize>,
    pub k_s: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            k_r: vec![10, 20, 30, 40, 50],
            k_s: vec![10, 20, 30, 40, 50],
            alpha: vec![0.5],
            beta: vec![0.5],
            lambda: LAMBDA_GRID.to_vec(),
        }
    }
}

impl SweepGrid {
    pub fn cells(&self) -> usize {
        self.k_r.len() * self.k_s.len() * self.alpha.len() * self.beta.len() * self.lambda.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotivPlan {
    pub strategies: Vec<String>,
    pub k: Vec<usize>,
}

impl Default for MotivPlan {
    fn default() -> Self {
        MotivPlan {
            strategies: vec!["recent".into(), "uniform".into(), "old".into()],
            k: vec![10, 20, 30, 40, 50],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunManifest {
    pub dataset: DatasetSpec,
    pub split: [f64; 3],
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub eagle: EagleConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    /// Pick lambda on the validation split instead of using `eagle.lambda`.
    pub tune_lambda: bool,
    pub lambda_grid: Vec<f64>,
    /// Replace `eagle.time_scale` by the mean inter-event gap of the train split.
    pub auto_time_scale: bool,
    pub sweep: SweepGrid,
    pub motiv: MotivPlan,
    pub bench: BenchPlan,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            dataset: DatasetSpec::default(),
            split: DEFAULT_FRACTIONS,
            seeds: vec![0],
            out_dir: PathBuf::from("runs"),
            eagle: EagleConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            tune_lambda: true,
            lambda_grid: LAMBDA_GRID.to_vec(),
            auto_time_scale: true,
            sweep: SweepGrid::default(),
            motiv: MotivPlan::default(),
            bench: BenchPlan::default(),
        }
    }
}

impl RunManifest {
    /// Reads a TOML manifest, or JSON when the extension is `.json`.
    /// Relative dataset paths resolve against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: RunManifest = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        if m.dataset.path.is_relative() {
            if let Some(dir) = path.parent() {
                m.dataset.path = dir.join(&m.dataset.path);
            }
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("manifest lists no seeds".into()));
        }
        if !self.dataset.path.exists() {
            return Err(Error::MissingArtifact(format!(
                "dataset {}",
                self.dataset.path.display()
            )));
        }
        if self.tune_lambda && self.lambda_grid.is_empty() {
            return Err(Error::Config("empty lambda grid".into()));
        }
        self.eagle.validate()?;
        self.train.validate()?;
        self.eval.validate()
    }
}

/// Loaded graph with its split and resolved scorer settings.
pub struct Prepared {
    pub graph: TemporalGraph,
    pub split: DatasetSplit,
    pub eagle: EagleConfig,
    pub dataset: String,
}

pub fn prepare(m: &RunManifest) -> Result<Prepared> {
    m.validate()?;
    let graph = m.dataset.load()?;
    prepare_graph(m, graph)
}

/// [`prepare`] for an already loaded graph.
pub fn prepare_graph(m: &RunManifest, graph: TemporalGraph) -> Result<Prepared> {
    let split = chronological_split(graph.num_events(), m.split)?;
    let mut eagle = m.eagle;
    if m.auto_time_scale {
        eagle.time_scale = mean_gap(&graph, split.train_end as usize);
    }
    eagle.validate()?;
    Ok(Prepared {
        graph,
        split,
        eagle,
        dataset: m.dataset.label(),
    })
}

/// Where a run's time model comes from.
pub enum ModelSource<'a> {
    Train,
    Given(&'a MlpParams),
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub reports: Vec<EvalReport>,
    /// Lambda used by the hybrid report.
    pub lambda: f64,
    /// Validation MRR per lambda when tuned.
    pub lambda_curve: Vec<(f64, f64)>,
    pub params: Option<MlpParams>,
    pub train_log: Option<TrainLog>,
}

/// Trains (when needed), tunes lambda and evaluates each scorer for one seed.
pub fn run_seed(
    p: &Prepared,
    m: &RunManifest,
    seed: u64,
    scorers: &[ScorerKind],
    model: ModelSource<'_>,
) -> Result<SeedRun> {
    let needs_model = scorers.iter().any(|k| k.needs_model());
    let needs_tppr = scorers.iter().any(|k| k.needs_tppr());
    let mut eval_cfg = m.eval.clone();
    eval_cfg.seed = seed;
    let clock = Instant::now();
    let (params, train_log) = match (needs_model, model) {
        (false, _) => (None, None),
        (true, ModelSource::Given(params)) => (Some(params.clone()), None),
        (true, ModelSource::Train) => {
            let tc = TrainConfig { seed, ..m.train };
            let (params, log) = train_time_model(&p.graph, &p.split, &tc, &p.eagle)?;
            (Some(params), Some(log))
        }
    };
    let train_s = if train_log.is_some() {
        clock.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let mut eagle = p.eagle;
    let mut curve = Vec::new();
    if scorers.contains(&ScorerKind::Hybrid) && m.tune_lambda {
        let groups = score_validation(&p.graph, &p.split, &eagle, params.as_ref(), &eval_cfg)?;
        curve = lambda_curve(&groups, &m.lambda_grid)?;
        eagle.lambda = tune_lambda(&groups, &m.lambda_grid)?;
    }
    let scored = score_test(
        &p.graph,
        &p.split,
        &eagle,
        params.as_ref(),
        needs_tppr,
        &eval_cfg,
    )?;
    let reports = scorers
        .iter()
        .map(|&k| build_report(&scored, k, &eagle, &eval_cfg, &p.dataset, train_s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun {
        seed,
        reports,
        lambda: eagle.lambda,
        lambda_curve: curve,
        params,
        train_log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanStd {
                mean: 0.0,
                std: 0.0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub scorer: ScorerKind,
    pub seeds: Vec<u64>,
    pub ap: MeanStd,
    pub mrr: MeanStd,
    pub hr: BTreeMap<usize, MeanStd>,
}

/// Mean and sample std over seeds, per scorer.
pub fn summarize(runs: &[SeedRun]) -> Vec<SeedSummary> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    (0..first.reports.len())
        .map(|i| {
            let reps: Vec<&EvalReport> = runs.iter().map(|r| &r.reports[i]).collect();
            let hr = reps[0]
                .hr
                .keys()
                .map(|&n| {
                    (
                        n,
                        MeanStd::of(&reps.iter().map(|r| r.hr[&n]).collect::<Vec<_>>()),
                    )
                })
                .collect();
            SeedSummary {
                scorer: reps[0].config.scorer,
                seeds: runs.iter().map(|r| r.seed).collect(),
                ap: MeanStd::of(&reps.iter().map(|r| r.ap).collect::<Vec<_>>()),
                mrr: MeanStd::of(&reps.iter().map(|r| r.mrr).collect::<Vec<_>>()),
                hr,
            }
        })
        .collect()
}

/// Every cell of `grid` for `scorer`, one report per cell in nesting order
/// k_r, k_s, alpha, beta, lambda. With `cache`, models are shared across
/// everything but `k_r` and one scored test replay is shared across `lambda`;
/// without it every cell is trained and replayed from scratch.
pub fn sweep(
    p: &Prepared,
    m: &RunManifest,
    grid: &SweepGrid,
    scorer: ScorerKind,
    seed: u64,
    cache: bool,
) -> Result<Vec<EvalReport>> {
    if grid.cells() == 0 {
        return Err(Error::Empty("sweep grid has an empty axis".into()));
    }
    let mut eval_cfg = m.eval.clone();
    eval_cfg.seed = seed;
    let tc = TrainConfig { seed, ..m.train };
    let train = |eagle: &EagleConfig| -> Result<(Option<MlpParams>, f64)> {
        if !scorer.needs_model() {
            return Ok((None, 0.0));
        }
        let clock = Instant::now();
        let (params, _) = train_time_model(&p.graph, &p.split, &tc, eagle)?;
        Ok((Some(params), clock.elapsed().as_secs_f64()))
    };
    let mut rows = Vec::with_capacity(grid.cells());
    for &k_r in &grid.k_r {
        let base = EagleConfig { k_r, ..p.eagle };
        let shared = if cache { Some(train(&base)?) } else { None };
        for &k_s in &grid.k_s {
            for &alpha in &grid.alpha {
                for &beta in &grid.beta {
                    let mut eagle = EagleConfig { k_s, ..base };
                    eagle.tppr.alpha = alpha;
                    eagle.tppr.beta = beta;
                    let replay = |eagle: &EagleConfig, params: Option<&MlpParams>| {
                        score_test(
                            &p.graph,
                            &p.split,
                            eagle,
                            params,
                            scorer.needs_tppr(),
                            &eval_cfg,
                        )
                    };
                    if let Some((params, train_s)) = &shared {
                        let scored = replay(&eagle, params.as_ref())?;
                        for &lambda in &grid.lambda {
                            let cell = EagleConfig { lambda, ..eagle };
                            rows.push(build_report(
                                &scored, scorer, &cell, &eval_cfg, &p.dataset, *train_s,
                            )?);
                        }
                    } else {
                        for &lambda in &grid.lambda {
                            let cell = EagleConfig { lambda, ..eagle };
                            let (params, train_s) = train(&cell)?;
                            let scored = replay(&cell, params.as_ref())?;
                            rows.push(build_report(
                                &scored, scorer, &cell, &eval_cfg, &p.dataset, train_s,
                            )?);
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivRow {
    pub strategy: String,
    pub k: usize,
    pub ap: f64,
    pub mrr: f64,
    pub hr10: f64,
}

impl MotivRow {
    pub const CSV_HEADER: &'static str = "strategy,k,ap,mrr,hr10";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.strategy, self.k, self.ap, self.mrr, self.hr10
        )
    }
}

/// Time-aware scorer trained and evaluated under each neighbor-selection
/// strategy and each `k_r` in `plan`.
pub fn motiv(p: &Prepared, m: &RunManifest, plan: &MotivPlan, seed: u64) -> Result<Vec<MotivRow>> {
    if plan.strategies.is_empty() || plan.k.is_empty() {
        return Err(Error::Empty(
            "motivation plan needs strategies and k values".into(),
        ));
    }
    let mut eval_cfg = m.eval.clone();
    eval_cfg.seed = seed;
    if !eval_cfg.hr_cutoffs.contains(&10) {
        eval_cfg.hr_cutoffs.push(10);
    }
    let tc = TrainConfig { seed, ..m.train };
    let mut rows = Vec::new();
    for name in &plan.strategies {
        let strategy = SamplingStrategy::parse(
            name,
            crate::seeds::stream(seed, crate::seeds::NEIGHBOR_SAMPLING),
        )?;
        for &k in &plan.k {
            let eagle = EagleConfig {
                k_r: k,
                strategy,
                ..p.eagle
            };
            let (params, _) = train_time_model(&p.graph, &p.split, &tc, &eagle)?;
            let scored = score_test(&p.graph, &p.split, &eagle, Some(&params), false, &eval_cfg)?;
            let metrics = compute_metrics(&scored.groups, ScorerKind::Time, 0.0, &eval_cfg)?;
            rows.push(MotivRow {
                strategy: strategy.name().to_string(),
                k,
                ap: metrics.ap,
                mrr: metrics.mrr,
                hr10: metrics.hr[&10],
            });
        }
    }
    Ok(rows)
}
