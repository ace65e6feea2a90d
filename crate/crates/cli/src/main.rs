use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eagle_core::dense::{read_checkpoint, write_checkpoint, Head, MlpParams};
use eagle_core::eval::{ApMode, EvalReport};
use eagle_core::experiment::{
    motiv, prepare, run_seed, summarize, sweep, ModelSource, MotivRow, RunManifest, SeedRun,
    SeedSummary,
};
use eagle_core::graph::{
    load_events, parse_fractions, write_canonical, DatasetFormat, LoadOptions, RolePool,
};
use eagle_core::nc::{labels_from_events, load_labels, run_node_classification, NcConfig};
use eagle_core::scaling::run_bench;
use eagle_core::scorers::ScorerKind;
use eagle_core::{Error, SamplingStrategy};

#[derive(Parser)]
#[command(
    name = "eagle",
    version,
    about = "Streaming temporal-graph link prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a dataset into the canonical sorted event file.
    Convert(ConvertArgs),
    /// Train the time-aware model per seed, save checkpoints, then evaluate.
    Train(EvalArgs),
    /// Evaluate scorers; time and hybrid need checkpoints from `train`.
    Eval(EvalArgs),
    /// Cartesian sweep over k_r, k_s, alpha, beta and lambda.
    Sweep(SweepArgs),
    /// Compare recent, uniform and old neighbor selection over a k grid.
    Motiv(MotivArgs),
    /// Measure scaling of update and scoring time.
    Bench(BenchArgs),
    /// Node classification with NDCG@10.
    Classify(ClassifyArgs),
    /// Print the effective manifest after flag overrides.
    Manifest(RunArgs),
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "jodie-csv")]
    format: DatasetFormat,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    d_x: usize,
    #[arg(long, default_value_t = 1)]
    snap_d_e: usize,
    #[arg(long)]
    role_pool: Option<String>,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML or JSON run manifest; flags override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    format: Option<DatasetFormat>,
    #[arg(long)]
    role_pool: Option<String>,
    #[arg(long)]
    d_x: Option<usize>,
    #[arg(long)]
    k_r: Option<usize>,
    #[arg(long)]
    k_s: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Fixed lambda; disables tuning.
    #[arg(long, conflicts_with = "tune_lambda")]
    lambda: Option<f64>,
    /// Pick lambda on the validation split.
    #[arg(long)]
    tune_lambda: bool,
    /// Fixed recency time scale; disables the train-split mean gap.
    #[arg(long)]
    time_scale: Option<f64>,
    /// recent, uniform or old.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    neg_test: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    d_hidden: Option<usize>,
    /// Train, validation and test fractions, e.g. 0.70,0.15,0.15.
    #[arg(long)]
    split: Option<String>,
    /// One or more seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// pooled or per-edge.
    #[arg(long)]
    ap_mode: Option<String>,
}

impl RunArgs {
    fn manifest(&self) -> Result<RunManifest> {
        let mut m = match &self.manifest {
            Some(p) => {
                RunManifest::load(p).with_context(|| format!("reading manifest {}", p.display()))?
            }
            None => RunManifest::default(),
        };
        if let Some(d) = &self.dataset {
            m.dataset.path = d.clone();
        }
        if let Some(f) = self.format {
            m.dataset.format = f;
        }
        if let Some(r) = &self.role_pool {
            m.dataset.role_pool = Some(RolePool::parse(r)?);
        }
        if let Some(d) = self.d_x {
            m.dataset.d_x = d;
        }
        if let Some(k) = self.k_r {
            m.eagle.k_r = k;
        }
        if let Some(k) = self.k_s {
            m.eagle.k_s = k;
        }
        if let Some(a) = self.alpha {
            m.eagle.tppr.alpha = a;
        }
        if let Some(b) = self.beta {
            m.eagle.tppr.beta = b;
        }
        if let Some(l) = self.lambda {
            m.eagle.lambda = l;
            m.tune_lambda = false;
        }
        if self.tune_lambda {
            m.tune_lambda = true;
        }
        if let Some(t) = self.time_scale {
            m.eagle.time_scale = t;
            m.auto_time_scale = false;
        }
        if let Some(s) = &self.strategy {
            let seed = *m.seeds.first().unwrap_or(&0);
            m.eagle.strategy = SamplingStrategy::parse(
                s,
                eagle_core::seeds::stream(seed, eagle_core::seeds::NEIGHBOR_SAMPLING),
            )?;
        }
        if let Some(n) = self.neg_test {
            m.eval.num_test_negatives = n;
            m.eval.hr_cutoffs.retain(|&c| c <= n + 1);
        }
        if let Some(p) = self.patience {
            m.train.patience = p;
        }
        if let Some(e) = self.epochs {
            m.train.epochs_max = e;
        }
        if let Some(b) = self.batch_size {
            m.train.batch_size = b;
        }
        if let Some(lr) = self.learning_rate {
            m.train.learning_rate = lr;
        }
        if let Some(h) = self.d_hidden {
            m.train.d_hidden = h;
        }
        if let Some(s) = &self.split {
            m.split = parse_fractions(s)?;
        }
        if !self.seed.is_empty() {
            m.seeds = self.seed.clone();
        }
        if let Some(o) = &self.out {
            m.out_dir = o.clone();
        }
        if let Some(a) = &self.ap_mode {
            m.eval.ap_mode = ApMode::parse(a)?;
        }
        Ok(m)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated subset of time, struct, hybrid.
    #[arg(long, value_delimiter = ',', default_value = "time,struct,hybrid")]
    scorer: Vec<String>,
    /// Checkpoint used for every seed instead of `<out>/checkpoints/time-seed<seed>.bin`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "hybrid")]
    scorer: String,
    #[arg(long, value_delimiter = ',')]
    grid_k_r: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    grid_k_s: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    grid_alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    grid_beta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    grid_lambda: Vec<f64>,
    /// Retrain and replay every cell.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct MotivArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Synthetic events to generate.
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `node_id,timestamp,p_1,...,p_C` file; defaults to the dataset's state labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Feed the time representation twice instead of time plus structure.
    #[arg(long)]
    literal_concat: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Convert(a) => cmd_convert(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Motiv(a) => cmd_motiv(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Manifest(a) => {
            print!("{}", a.manifest()?.to_toml());
            Ok(())
        }
    }
}

fn cmd_convert(a: &ConvertArgs) -> Result<()> {
    let opts = LoadOptions {
        d_x: a.d_x,
        snap_d_e: a.snap_d_e,
        role_pool: a.role_pool.as_deref().map(RolePool::parse).transpose()?,
    };
    let g = load_events(&a.input, a.format, &opts)
        .with_context(|| format!("converting {}", a.input.display()))?;
    let file =
        fs::File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    write_canonical(&g, &mut BufWriter::new(file))?;
    println!(
        "{} events, {} nodes -> {}",
        g.num_events(),
        g.num_nodes(),
        a.output.display()
    );
    Ok(())
}

fn parse_scorers(names: &[String]) -> Result<Vec<ScorerKind>> {
    let mut out = Vec::new();
    for n in names {
        let k = ScorerKind::parse(n.trim())?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        bail!("no scorer selected");
    }
    Ok(out)
}

fn checkpoint_path(m: &RunManifest, seed: u64) -> PathBuf {
    m.out_dir
        .join("checkpoints")
        .join(format!("time-seed{seed}.bin"))
}

fn create_out_dir(m: &RunManifest) -> Result<()> {
    fs::create_dir_all(&m.out_dir).with_context(|| format!("creating {}", m.out_dir.display()))?;
    fs::write(m.out_dir.join("manifest.toml"), m.to_toml())?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_reports_csv(path: &Path, reports: &[&EvalReport]) -> Result<()> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    write_csv(
        path,
        &first.csv_header(),
        reports.iter().map(|r| r.csv_row()),
    )
}

fn print_summary(s: &SeedSummary) {
    let hr10 =
        s.hr.get(&10)
            .map(|h| format!("  HR@10 {:.4} ± {:.4}", h.mean, h.std))
            .unwrap_or_default();
    println!(
        "{:<7} seeds {:?}  AP {:.4} ± {:.4}  MRR {:.4} ± {:.4}{hr10}",
        s.scorer.name(),
        s.seeds,
        s.ap.mean,
        s.ap.std,
        s.mrr.mean,
        s.mrr.std
    );
}

fn write_runs(m: &RunManifest, runs: &[SeedRun]) -> Result<()> {
    for run in runs {
        for r in &run.reports {
            write_json(
                &m.out_dir
                    .join(format!("{}-seed{}.json", r.config.scorer.name(), run.seed)),
                r,
            )?;
        }
    }
    let all: Vec<&EvalReport> = runs.iter().flat_map(|r| &r.reports).collect();
    write_reports_csv(&m.out_dir.join("reports.csv"), &all)?;
    let curve: Vec<String> = runs
        .iter()
        .flat_map(|r| {
            r.lambda_curve
                .iter()
                .map(move |(l, mrr)| format!("{},{l},{mrr}", r.seed))
        })
        .collect();
    if !curve.is_empty() {
        write_csv(
            &m.out_dir.join("lambda_curve.csv"),
            "seed,lambda,valid_mrr",
            curve,
        )?;
    }
    let summary = summarize(runs);
    write_json(&m.out_dir.join("summary.json"), &summary)?;
    for s in &summary {
        print_summary(s);
    }
    Ok(())
}

fn cmd_train(a: &EvalArgs) -> Result<()> {
    let m = a.run.manifest()?;
    let scorers = parse_scorers(&a.scorer)?;
    let p = prepare(&m)?;
    create_out_dir(&m)?;
    fs::create_dir_all(m.out_dir.join("checkpoints"))?;
    let mut train_scorers = scorers.clone();
    if !train_scorers.iter().any(|k| k.needs_model()) {
        train_scorers.insert(0, ScorerKind::Time);
    }
    let mut runs = Vec::new();
    for &seed in &m.seeds {
        let run = run_seed(&p, &m, seed, &train_scorers, ModelSource::Train)
            .with_context(|| format!("training seed {seed}"))?;
        let params = run.params.as_ref().expect("time model trained");
        write_checkpoint(&checkpoint_path(&m, seed), params, Head::Sigmoid, seed)?;
        if let Some(log) = &run.train_log {
            let path = m.out_dir.join(format!("train-seed{seed}.jsonl"));
            log.write_jsonl(&mut BufWriter::new(fs::File::create(&path)?))?;
            println!(
                "seed {seed}: {} epochs, best {:?}, valid loss {:.5}, {:.1}s",
                log.epochs.len(),
                log.best_epoch,
                log.best_valid_loss,
                log.wall_clock_s
            );
        }
        let mut run = run;
        run.reports.retain(|r| scorers.contains(&r.config.scorer));
        runs.push(run);
    }
    write_runs(&m, &runs)
}

fn load_model(path: &Path) -> Result<MlpParams> {
    if !path.exists() {
        return Err(Error::MissingArtifact(format!(
            "time-model checkpoint {} (run `eagle train` or pass --checkpoint)",
            path.display()
        ))
        .into());
    }
    Ok(read_checkpoint(path)
        .with_context(|| format!("reading {}", path.display()))?
        .0)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let m = a.run.manifest()?;
    let scorers = parse_scorers(&a.scorer)?;
    let needs_model = scorers.iter().any(|k| k.needs_model());
    let models: Vec<Option<MlpParams>> = m
        .seeds
        .iter()
        .map(|&s| {
            needs_model
                .then(|| {
                    load_model(
                        &a.checkpoint
                            .clone()
                            .unwrap_or_else(|| checkpoint_path(&m, s)),
                    )
                })
                .transpose()
        })
        .collect::<Result<_>>()?;
    let p = prepare(&m)?;
    create_out_dir(&m)?;
    let mut runs = Vec::new();
    for (&seed, model) in m.seeds.iter().zip(&models) {
        let source = match model {
            Some(params) => ModelSource::Given(params),
            None => ModelSource::Train,
        };
        runs.push(
            run_seed(&p, &m, seed, &scorers, source)
                .with_context(|| format!("evaluating seed {seed}"))?,
        );
    }
    write_runs(&m, &runs)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let m = a.run.manifest()?;
    let scorer = ScorerKind::parse(&a.scorer)?;
    let mut grid = m.sweep.clone();
    let set = |dst: &mut Vec<_>, src: &Vec<_>| {
        if !src.is_empty() {
            dst.clone_from(src);
        }
    };
    set(&mut grid.k_r, &a.grid_k_r);
    set(&mut grid.k_s, &a.grid_k_s);
    let setf = |dst: &mut Vec<f64>, src: &Vec<f64>| {
        if !src.is_empty() {
            dst.clone_from(src);
        }
    };
    setf(&mut grid.alpha, &a.grid_alpha);
    setf(&mut grid.beta, &a.grid_beta);
    setf(&mut grid.lambda, &a.grid_lambda);
    let p = prepare(&m)?;
    create_out_dir(&m)?;
    let mut rows = Vec::new();
    for &seed in &m.seeds {
        rows.extend(
            sweep(&p, &m, &grid, scorer, seed, !a.no_cache)
                .with_context(|| format!("sweep seed {seed}"))?,
        );
    }
    let refs: Vec<&EvalReport> = rows.iter().collect();
    let path = m.out_dir.join("sweep.csv");
    write_reports_csv(&path, &refs)?;
    println!("{} rows -> {}", rows.len(), path.display());
    Ok(())
}

fn cmd_motiv(a: &MotivArgs) -> Result<()> {
    let m = a.run.manifest()?;
    let mut plan = m.motiv.clone();
    if !a.strategies.is_empty() {
        plan.strategies.clone_from(&a.strategies);
    }
    if !a.k.is_empty() {
        plan.k.clone_from(&a.k);
    }
    let p = prepare(&m)?;
    create_out_dir(&m)?;
    let mut lines = Vec::new();
    for &seed in &m.seeds {
        for row in motiv(&p, &m, &plan, seed)? {
            println!(
                "seed {seed} {:<8} k={:<3} AP {:.4} MRR {:.4}",
                row.strategy, row.k, row.ap, row.mrr
            );
            lines.push(format!("{seed},{}", row.csv_row()));
        }
    }
    write_csv(
        &m.out_dir.join("motiv.csv"),
        &format!("seed,{}", MotivRow::CSV_HEADER),
        lines,
    )
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let mut plan = match &a.manifest {
        Some(p) => RunManifest::load(p)?.bench,
        None => Default::default(),
    };
    if let Some(e) = a.events {
        plan.synthetic.events = e;
    }
    if let Some(n) = a.nodes {
        plan.synthetic.nodes = n;
    }
    if let Some(r) = a.repeats {
        plan.repeats = r;
    }
    let report = run_bench(&plan)?;
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join("bench.json"), &report)?;
    fs::write(a.out.join("bench.csv"), report.to_csv())?;
    println!("{} events, {} nodes", report.events, report.nodes);
    for s in &report.series {
        println!("{:<20} exponent {:.3}", s.parameter, s.exponent);
    }
    Ok(())
}

fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    let m = a.run.manifest()?;
    m.validate()?;
    let g = m.dataset.load()?;
    let labels = match &a.labels {
        Some(path) => load_labels(path)?,
        None => labels_from_events(&g),
    };
    if labels.is_empty() {
        bail!("no labels: the dataset has no state labels and --labels was not given");
    }
    create_out_dir(&m)?;
    for &seed in &m.seeds {
        let cfg = NcConfig {
            eagle: m.eagle,
            train: eagle_core::trainer::TrainConfig { seed, ..m.train },
            head: Head::Softmax,
            literal_concat: a.literal_concat,
        };
        let report = run_node_classification(&g, &labels, &cfg, m.split)?;
        println!(
            "seed {seed}: NDCG@10 {:.4} (uniform {:.4}) on {} test labels",
            report.ndcg10, report.uniform_ndcg10, report.n_test
        );
        write_json(
            &m.out_dir.join(format!("classify-seed{seed}.json")),
            &report,
        )?;
    }
    Ok(())
}
