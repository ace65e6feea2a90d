//! Node classification from time-aware and T-PPR-weighted representations.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{bce_with_logit, sigmoid, softmax, AdamConfig, AdamState, Head, MlpParams};
use crate::error::{Error, Result};
use crate::graph::{Cutoff, NodeId, TemporalGraph};
use crate::scorers::{time_aware_representation_with, EagleConfig};
use crate::seeds;
use crate::tppr::{TpprStore, TpprVector};
use crate::trainer::{EpochLog, TrainConfig, TrainLog};

/// Label distribution of one node at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub node: NodeId,
    pub timestamp: f64,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NcConfig {
    pub eagle: EagleConfig,
    pub train: TrainConfig,
    pub head: Head,
    /// Feed `[h_r, h_r]` instead of `[h_r, h_s]`.
    pub literal_concat: bool,
}

impl Default for NcConfig {
    fn default() -> Self {
        NcConfig {
            eagle: EagleConfig::default(),
            train: TrainConfig::default(),
            head: Head::Softmax,
            literal_concat: false,
        }
    }
}

/// Same averaging as the link scorer's time-aware representation.
pub fn nc_time_representation(
    g: &TemporalGraph,
    v: NodeId,
    cutoff: Cutoff,
    cfg: &EagleConfig,
) -> Vec<f64> {
    time_aware_representation_with(g, v, cutoff, cfg)
}

/// `(1 / k_s) * sum x_i * pi_v[i]` over the `k_s` best entries of `pi_v`.
pub fn nc_struct_representation(g: &TemporalGraph, pi_v: &TpprVector, k_s: usize) -> Vec<f64> {
    let mut out = vec![0.0; g.d_x()];
    if k_s == 0 {
        return out;
    }
    for &(n, s) in pi_v.truncated(k_s).entries() {
        g.node_features(n).add_scaled_into(&mut out, s);
    }
    for o in &mut out {
        *o /= k_s as f64;
    }
    out
}

pub fn nc_input(h_r: &[f64], h_s: &[f64], literal_concat: bool) -> Vec<f64> {
    let mut x = h_r.to_vec();
    x.extend_from_slice(if literal_concat { h_r } else { h_s });
    x
}

pub fn nc_predict(
    p: &MlpParams,
    h_r: &[f64],
    h_s: &[f64],
    head: Head,
    literal_concat: bool,
) -> Result<Vec<f64>> {
    p.forward(&nc_input(h_r, h_s, literal_concat), head)
}

/// NDCG over the ten categories ranked highest by `predicted`, with the truth
/// as linear gains. Ties in `predicted` go to the lower category index. A
/// truth with no relevant category scores 1.
pub fn ndcg_at_10(predicted: &[f64], truth: &[f64]) -> f64 {
    const K: usize = 10;
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let mut order: Vec<usize> = (0..predicted.len()).collect();
    order.sort_by(|&a, &b| predicted[b].total_cmp(&predicted[a]).then(a.cmp(&b)));
    let dcg: f64 = order
        .iter()
        .take(K)
        .enumerate()
        .map(|(i, &c)| truth.get(c).copied().unwrap_or(0.0) * discount(i))
        .sum();
    let mut ideal = truth.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(K)
        .enumerate()
        .map(|(i, &g)| g * discount(i))
        .sum();
    if idcg <= 0.0 {
        return 1.0;
    }
    (dcg / idcg).clamp(0.0, 1.0)
}

/// Labels file: `node_id,timestamp,p_1,...,p_L` per line, optional header.
pub fn load_labels(path: &Path) -> Result<Vec<LabelEvent>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<LabelEvent> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && fields[0].parse::<u32>().is_err() {
            continue;
        }
        if fields.len() < 3 {
            return Err(Error::parse(
                i + 1,
                "expected node_id,timestamp,label_probs...",
            ));
        }
        let node = fields[0]
            .parse::<u32>()
            .map_err(|e| Error::parse(i + 1, format!("node id: {e}")))?;
        let timestamp = fields[1]
            .parse::<f64>()
            .map_err(|e| Error::parse(i + 1, format!("timestamp: {e}")))?;
        let probs = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(i + 1, format!("label value: {e}")))?;
        if let Some(first) = out.first() {
            if first.probs.len() != probs.len() {
                return Err(Error::parse(
                    i + 1,
                    format!(
                        "{} label values, expected {}",
                        probs.len(),
                        first.probs.len()
                    ),
                ));
            }
        }
        out.push(LabelEvent {
            node: NodeId(node),
            timestamp,
            probs,
        });
    }
    out.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(out)
}

/// Two-category labels `[1 - l, l]` of each event's source from the event
/// label column.
pub fn labels_from_events(g: &TemporalGraph) -> Vec<LabelEvent> {
    g.events()
        .map(|e| LabelEvent {
            node: e.source,
            timestamp: e.timestamp,
            probs: vec![1.0 - e.label, e.label],
        })
        .collect()
}

/// `(h_r, h_s)` of every label's node at its timestamp, replaying the graph
/// so each label sees exactly the events with timestamp `<=` its own.
pub fn nc_features(
    g: &TemporalGraph,
    labels: &[LabelEvent],
    cfg: &EagleConfig,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if labels.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::Config("labels must be sorted by timestamp".into()));
    }
    let mut working = g.prefix(0);
    let mut store = TpprStore::new(cfg.tppr_config())?;
    let mut next = 0usize;
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        let before = next;
        while next < g.num_events() && g.timestamp(next as u64) <= l.timestamp {
            working.ingest(g.event(next as u64).to_owned_event())?;
            next += 1;
        }
        if next != before {
            store.update(&working);
        }
        let h_r = nc_time_representation(&working, l.node, Cutoff::ALL, cfg);
        let h_s = nc_struct_representation(&working, &store.vector(&working, l.node), cfg.k_s);
        out.push((h_r, h_s));
    }
    Ok(out)
}

fn nc_loss(logits: &[f64], y: &[f64], head: Head) -> (f64, Vec<f64>) {
    match head {
        Head::Softmax => {
            let s = softmax(logits);
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
            let mass: f64 = y.iter().sum();
            let loss = y.iter().zip(logits).map(|(yi, zi)| yi * (lse - zi)).sum();
            (
                loss,
                s.iter().zip(y).map(|(si, yi)| si * mass - yi).collect(),
            )
        }
        Head::Sigmoid => {
            let loss = logits
                .iter()
                .zip(y)
                .map(|(&z, &yi)| bce_with_logit(z, yi))
                .sum();
            (
                loss,
                logits
                    .iter()
                    .zip(y)
                    .map(|(&z, &yi)| sigmoid(z) - yi)
                    .collect(),
            )
        }
        Head::None => {
            // squared error on raw outputs
            let loss = logits
                .iter()
                .zip(y)
                .map(|(z, yi)| 0.5 * (z - yi) * (z - yi))
                .sum();
            (loss, logits.iter().zip(y).map(|(z, yi)| z - yi).collect())
        }
    }
}

/// Cached inputs and targets for one phase.
pub struct NcData {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl NcData {
    pub fn new(
        features: &[(Vec<f64>, Vec<f64>)],
        labels: &[LabelEvent],
        literal_concat: bool,
    ) -> Self {
        NcData {
            inputs: features
                .iter()
                .map(|(r, s)| nc_input(r, s, literal_concat))
                .collect(),
            targets: labels.iter().map(|l| l.probs.clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

fn mean_loss(p: &MlpParams, data: &NcData, head: Head) -> f64 {
    let total: f64 = data
        .inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| nc_loss(&p.logits(x).expect("shape checked"), y, head).0)
        .sum();
    total / data.len().max(1) as f64
}

/// Trains the label predictor with early stopping on `valid` loss.
pub fn train_nc_model(
    train: &NcData,
    valid: &NcData,
    cfg: &NcConfig,
) -> Result<(MlpParams, TrainLog)> {
    cfg.train.validate()?;
    let d_in = train
        .inputs
        .first()
        .or(valid.inputs.first())
        .map(|x| x.len())
        .unwrap_or(0);
    let d_out = train
        .targets
        .first()
        .or(valid.targets.first())
        .map(|y| y.len())
        .unwrap_or(0);
    let mut params = MlpParams::init(
        d_in,
        cfg.train.d_hidden,
        d_out,
        seeds::stream(cfg.train.seed, seeds::INIT),
    );
    let mut log = TrainLog {
        best_valid_loss: f64::INFINITY,
        ..Default::default()
    };
    if cfg.train.epochs_max == 0 {
        return Ok((params, log));
    }
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Empty(
            "node classification needs train and validation labels".into(),
        ));
    }
    let clock = Instant::now();
    let mut adam = AdamState::new(
        &params,
        AdamConfig {
            learning_rate: cfg.train.learning_rate,
            ..Default::default()
        },
    );
    let mut best = params.clone();
    let mut since_best = 0;
    for epoch in 0..cfg.train.epochs_max {
        let mut train_loss = 0.0;
        for (batch, (xs, ys)) in train
            .inputs
            .chunks(cfg.train.batch_size)
            .zip(train.targets.chunks(cfg.train.batch_size))
            .enumerate()
        {
            let mut grads = params.zeros_like();
            for (x, y) in xs.iter().zip(ys) {
                let acts = params.activations(x)?;
                let (loss, dz) = nc_loss(&acts.logits, y, cfg.head);
                train_loss += loss;
                params.accumulate_from_logits(x, &acts, &dz, &mut grads, None);
            }
            let scale = 1.0 / xs.len() as f64;
            for t in grads.tensors_mut() {
                t.iter_mut().for_each(|g| *g *= scale);
            }
            adam.step(&mut params, &grads)
                .map_err(|e| Error::Divergence {
                    epoch,
                    batch,
                    message: e.to_string(),
                })?;
        }
        let valid_loss = mean_loss(&params, valid, cfg.head);
        if !valid_loss.is_finite() || !train_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: 0,
                message: format!("loss train {train_loss} valid {valid_loss}"),
            });
        }
        log.epochs.push(EpochLog {
            epoch,
            train_loss: train_loss / train.len() as f64,
            valid_loss,
            wall_clock_s: clock.elapsed().as_secs_f64(),
        });
        if valid_loss < log.best_valid_loss {
            log.best_valid_loss = valid_loss;
            log.best_epoch = Some(epoch);
            best = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.train.patience {
                break;
            }
        }
    }
    log.wall_clock_s = clock.elapsed().as_secs_f64();
    Ok((best, log))
}

/// Mean NDCG@10 of `p` over `data`.
pub fn mean_ndcg(p: &MlpParams, data: &NcData, head: Head) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("no labels to score".into()));
    }
    let mut acc = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        acc += ndcg_at_10(&p.forward(x, head)?, y);
    }
    Ok(acc / data.len() as f64)
}

/// NDCG@10 of a constant uniform prediction.
pub fn uniform_ndcg(data: &NcData) -> f64 {
    let total: f64 = data
        .targets
        .iter()
        .map(|y| ndcg_at_10(&vec![1.0; y.len()], y))
        .sum();
    total / data.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcReport {
    pub ndcg10: f64,
    pub uniform_ndcg10: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub train_s: f64,
}

/// Splits `labels` chronologically by `fractions`, trains on the first part
/// with early stopping on the second and scores the third.
pub fn run_node_classification(
    g: &TemporalGraph,
    labels: &[LabelEvent],
    cfg: &NcConfig,
    fractions: [f64; 3],
) -> Result<NcReport> {
    let split = crate::graph::chronological_split(labels.len(), fractions)?;
    let features = nc_features(g, labels, &cfg.eagle)?;
    let part = |r: std::ops::Range<u64>| {
        let r = r.start as usize..r.end as usize;
        NcData::new(&features[r.clone()], &labels[r], cfg.literal_concat)
    };
    let (train, valid, test) = (part(split.train()), part(split.valid()), part(split.test()));
    let clock = Instant::now();
    let (params, _) = train_nc_model(&train, &valid, cfg)?;
    Ok(NcReport {
        ndcg10: mean_ndcg(&params, &test, cfg.head)?,
        uniform_ndcg10: uniform_ndcg(&test),
        n_train: train.len(),
        n_valid: valid.len(),
        n_test: test.len(),
        train_s: clock.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Event;

    #[test]
    fn struct_representation() {
        let mut g = TemporalGraph::new(2, 1);
        g.set_node_features(NodeId(1), &[2.0, 0.0]).unwrap();
        let pi = TpprVector::from_scores(NodeId(0), vec![(NodeId(1), 0.5)], 1, true, 0);
        assert_eq!(nc_struct_representation(&g, &pi, 1), vec![1.0, 0.0]);
        assert_eq!(
            nc_struct_representation(&g, &TpprVector::empty(NodeId(0)), 3),
            vec![0.0, 0.0]
        );
        let mut h = TemporalGraph::new(2, 1);
        h.ensure_node(NodeId(1));
        assert_eq!(nc_struct_representation(&h, &pi, 1), vec![0.0, 0.0]);
    }

    #[test]
    fn uniform_prediction_from_zero_model() {
        let p = MlpParams::zeros(4, 8, 5);
        let y = nc_predict(&p, &[1.0, 2.0], &[0.0, 1.0], Head::Softmax, false).unwrap();
        assert_eq!(y, vec![0.2; 5]);
        assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn literal_concat_repeats_time_half() {
        assert_eq!(
            nc_input(&[1.0, 2.0], &[3.0, 4.0], true),
            vec![1.0, 2.0, 1.0, 2.0]
        );
        assert_eq!(
            nc_input(&[1.0, 2.0], &[3.0, 4.0], false),
            vec![1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn ndcg_cases() {
        let truth = [0.5, 0.3, 0.2, 0.0];
        assert!((ndcg_at_10(&truth, &truth) - 1.0).abs() < 1e-15);
        assert!((ndcg_at_10(&[0.9, 0.1, 0.8, 0.0], &[0.25; 4]) - 1.0).abs() < 1e-15);
        let worst = ndcg_at_10(&[0.0, 0.1, 0.2, 0.3], &[1.0, 0.0, 0.0, 0.0]);
        assert!((worst - 1.0 / 5f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn softmax_loss_gradient() {
        let (l, dz) = nc_loss(&[0.0, 0.0], &[1.0, 0.0], Head::Softmax);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert_eq!(dz, vec![-0.5, 0.5]);
    }

    #[test]
    fn labels_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        fs::write(
            &path,
            "node_id,timestamp,a,b\n3,2.0,0.0,1.0\n1,1.0,0.5,0.5\n",
        )
        .unwrap();
        let l = load_labels(&path).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l[0].node, NodeId(1));
        fs::write(&path, "3,2.0,0.0,1.0\n1,1.0,0.5\n").unwrap();
        assert!(matches!(
            load_labels(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn features_see_only_the_past() {
        let mut g = TemporalGraph::new(0, 1);
        g.ingest(Event::new(0, 1, 1.0).with_features(vec![1.0]))
            .unwrap();
        g.ingest(Event::new(0, 2, 5.0).with_features(vec![3.0]))
            .unwrap();
        let labels = vec![
            LabelEvent {
                node: NodeId(0),
                timestamp: 2.0,
                probs: vec![1.0],
            },
            LabelEvent {
                node: NodeId(0),
                timestamp: 5.0,
                probs: vec![1.0],
            },
        ];
        let f = nc_features(&g, &labels, &EagleConfig::default()).unwrap();
        assert_eq!(f[0].0, vec![1.0]);
        assert_eq!(f[1].0, vec![2.0]);
    }
}
