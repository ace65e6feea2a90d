//! Training of the time-aware MLP with binary cross-entropy against sampled
//! negative destinations, early-stopped on validation loss.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{bce_with_logit, sigmoid, AdamConfig, AdamState, MlpParams, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::eval::sample_train_negative;
use crate::graph::{Cutoff, DatasetSplit, NodeId, Seq, TemporalGraph};
use crate::scorers::{pair_input, EagleConfig};
use crate::seeds;

// fixed work split so gradient sums do not depend on the thread count
const GRAD_CHUNKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs_max: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_negatives_per_positive: usize,
    pub d_hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs_max: 50,
            patience: 5,
            batch_size: 200,
            learning_rate: 1e-3,
            train_negatives_per_positive: 1,
            d_hidden: DEFAULT_HIDDEN,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 || self.batch_size == 0 || self.train_negatives_per_positive == 0 {
            return Err(Error::Config(
                "patience, batch_size and train_negatives_per_positive must be at least 1".into(),
            ));
        }
        if self.d_hidden == 0 {
            return Err(Error::Config("d_hidden must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch of the returned checkpoint, `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub best_valid_loss: f64,
    pub wall_clock_s: f64,
}

impl TrainLog {
    /// One JSON object per epoch.
    pub fn write_jsonl(&self, out: &mut impl Write) -> std::io::Result<()> {
        for e in &self.epochs {
            serde_json::to_writer(&mut *out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// One labelled pair `(v, u)` seen just before event `seq`.
#[derive(Debug, Clone, Copy)]
struct Example {
    v: NodeId,
    u: NodeId,
    seq: Seq,
    label: f64,
}

fn examples_for(
    g: &TemporalGraph,
    range: std::ops::Range<Seq>,
    negatives: usize,
    stream_seed: u64,
    out: &mut Vec<Example>,
) -> Result<()> {
    for seq in range {
        let e = g.event(seq);
        out.push(Example {
            v: e.source,
            u: e.destination,
            seq,
            label: 1.0,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[stream_seed, seq]));
        for _ in 0..negatives {
            out.push(Example {
                v: e.source,
                u: sample_train_negative(g, seq, e.destination, &mut rng)?,
                seq,
                label: 0.0,
            });
        }
    }
    Ok(())
}

fn example_input(g: &TemporalGraph, ex: &Example, eagle: &EagleConfig) -> Vec<f64> {
    let cutoff = Cutoff::before_event(g.timestamp(ex.seq), ex.seq);
    pair_input(g, ex.v, ex.u, cutoff, eagle)
}

/// Summed loss and (optionally) summed gradient over `examples`.
fn loss_and_grad(
    p: &MlpParams,
    g: &TemporalGraph,
    eagle: &EagleConfig,
    examples: &[Example],
    with_grad: bool,
) -> (f64, Option<MlpParams>) {
    let chunk = examples.len().div_ceil(GRAD_CHUNKS).max(1);
    let parts: Vec<(f64, Option<MlpParams>)> = examples
        .par_chunks(chunk)
        .map(|part| {
            let mut grads = with_grad.then(|| p.zeros_like());
            let mut loss = 0.0;
            for ex in part {
                let x = example_input(g, ex, eagle);
                let acts = p.activations(&x).expect("input width checked by caller");
                let z = acts.logits[0];
                loss += bce_with_logit(z, ex.label);
                if let Some(gr) = grads.as_mut() {
                    p.accumulate_from_logits(&x, &acts, &[sigmoid(z) - ex.label], gr, None);
                }
            }
            (loss, grads)
        })
        .collect();
    let mut total = 0.0;
    let mut grads: Option<MlpParams> = None;
    for (l, gr) in parts {
        total += l;
        if let Some(gr) = gr {
            match grads.as_mut() {
                None => grads = Some(gr),
                Some(acc) => {
                    for (a, b) in acc.tensors_mut().into_iter().zip(gr.tensors()) {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                    }
                }
            }
        }
    }
    (total, grads)
}

/// Trains the time model on `split.train()` and early-stops on the mean BCE
/// of `split.valid()` with one fixed negative per positive. Returns the
/// best-validation checkpoint.
pub fn train_time_model(
    g: &TemporalGraph,
    split: &DatasetSplit,
    cfg: &TrainConfig,
    eagle: &EagleConfig,
) -> Result<(MlpParams, TrainLog)> {
    cfg.validate()?;
    eagle.validate()?;
    let clock = Instant::now();
    let d_in = 2 * (g.d_x() + g.d_e());
    let mut params = MlpParams::init(d_in, cfg.d_hidden, 1, seeds::stream(cfg.seed, seeds::INIT));
    let mut log = TrainLog {
        best_valid_loss: f64::INFINITY,
        ..Default::default()
    };
    if cfg.epochs_max == 0 {
        return Ok((params, log));
    }
    if split.train().is_empty() || split.valid().is_empty() {
        return Err(Error::Empty(
            "training needs non-empty train and validation splits".into(),
        ));
    }

    let mut valid = Vec::new();
    examples_for(
        g,
        split.valid(),
        1,
        seeds::stream(cfg.seed, seeds::VALID_NEGATIVES),
        &mut valid,
    )?;
    let train_seed = seeds::stream(cfg.seed, seeds::TRAIN_NEGATIVES);
    // the earliest events have a single destination in the pool and no negative
    let first_trainable = (split.train().start..split.train().end)
        .find(|&s| g.pool_prefix(s).len() >= 2)
        .unwrap_or(split.train_end);

    let mut adam = AdamState::new(
        &params,
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..Default::default()
        },
    );
    let mut best = params.clone();
    let mut since_best = 0;
    let mut batch_examples = Vec::new();
    for epoch in 0..cfg.epochs_max {
        let epoch_seed = seeds::mix(&[train_seed, epoch as u64]);
        let mut train_loss = 0.0;
        let mut n_train = 0usize;
        let mut start = first_trainable;
        let mut batch_idx = 0;
        while start < split.train_end {
            let end = (start + cfg.batch_size as Seq).min(split.train_end);
            batch_examples.clear();
            examples_for(
                g,
                start..end,
                cfg.train_negatives_per_positive,
                epoch_seed,
                &mut batch_examples,
            )?;
            let (loss, grads) = loss_and_grad(&params, g, eagle, &batch_examples, true);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    message: format!("training loss {loss}"),
                });
            }
            let mut grads = grads.expect("gradients requested");
            let scale = 1.0 / batch_examples.len() as f64;
            for t in grads.tensors_mut() {
                t.iter_mut().for_each(|x| *x *= scale);
            }
            adam.step(&mut params, &grads)
                .map_err(|e| Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    message: e.to_string(),
                })?;
            train_loss += loss;
            n_train += batch_examples.len();
            start = end;
            batch_idx += 1;
        }
        let (vloss, _) = loss_and_grad(&params, g, eagle, &valid, false);
        let valid_loss = vloss / valid.len() as f64;
        if !valid_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: batch_idx,
                message: format!("validation loss {valid_loss}"),
            });
        }
        log.epochs.push(EpochLog {
            epoch,
            train_loss: train_loss / n_train.max(1) as f64,
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
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    log.wall_clock_s = clock.elapsed().as_secs_f64();
    Ok((best, log))
}

/// Mean validation BCE of `params` with the fixed validation negatives.
pub fn validation_loss(
    g: &TemporalGraph,
    split: &DatasetSplit,
    params: &MlpParams,
    eagle: &EagleConfig,
    seed: u64,
) -> Result<f64> {
    let mut valid = Vec::new();
    examples_for(
        g,
        split.valid(),
        1,
        seeds::stream(seed, seeds::VALID_NEGATIVES),
        &mut valid,
    )?;
    if valid.is_empty() {
        return Err(Error::Empty("validation split is empty".into()));
    }
    Ok(loss_and_grad(params, g, eagle, &valid, false).0 / valid.len() as f64)
}
