//! Two-layer perceptron with hand-written backpropagation.
//!
//! `y = head(W2 · relu(W1 · x + b1) + b2)`, weights row-major.

mod adam;
mod checkpoint;
mod gradcheck;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta, CHECKPOINT_VERSION};
pub use gradcheck::{finite_difference_check, GradCheck};

pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Sigmoid,
    Softmax,
    /// Raw logits.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub d_in: usize,
    pub d_hidden: usize,
    pub d_out: usize,
    /// `d_hidden x d_in`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `d_out x d_hidden`
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub pre_hidden: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Parameter gradients plus the gradient with respect to the input.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: MlpParams,
    pub input: Vec<f64>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(z))` without overflow.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Numerically stable binary cross-entropy on a logit.
#[inline]
pub fn bce_with_logit(z: f64, label: f64) -> f64 {
    -(label * log_sigmoid(z) + (1.0 - label) * log_sigmoid(-z))
}

pub fn apply_head(logits: &[f64], head: Head) -> Vec<f64> {
    match head {
        Head::Sigmoid => logits.iter().map(|&z| sigmoid(z)).collect(),
        Head::Softmax => softmax(logits),
        Head::None => logits.to_vec(),
    }
}

impl MlpParams {
    pub fn zeros(d_in: usize, d_hidden: usize, d_out: usize) -> Self {
        MlpParams {
            d_in,
            d_hidden,
            d_out,
            w1: vec![0.0; d_hidden * d_in],
            b1: vec![0.0; d_hidden],
            w2: vec![0.0; d_out * d_hidden],
            b2: vec![0.0; d_out],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(d_in: usize, d_hidden: usize, d_out: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = MlpParams::zeros(d_in, d_hidden, d_out);
        let a1 = (6.0 / (d_in + d_hidden) as f64).sqrt();
        for w in &mut p.w1 {
            *w = rng.random_range(-a1..=a1);
        }
        let a2 = (6.0 / (d_hidden + d_out) as f64).sqrt();
        for w in &mut p.w2 {
            *w = rng.random_range(-a2..=a2);
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams::zeros(self.d_in, self.d_hidden, self.d_out)
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn check_shapes(&self) -> Result<()> {
        let ok = self.w1.len() == self.d_hidden * self.d_in
            && self.b1.len() == self.d_hidden
            && self.w2.len() == self.d_out * self.d_hidden
            && self.b2.len() == self.d_out;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "parameter buffers inconsistent with {}x{}x{}",
                self.d_in, self.d_hidden, self.d_out
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d_in {
            return Err(Error::Shape(format!(
                "input length {} != d_in {}",
                x.len(),
                self.d_in
            )));
        }
        Ok(())
    }

    pub fn activations(&self, x: &[f64]) -> Result<Activations> {
        self.check_input(x)?;
        let mut pre_hidden = self.b1.clone();
        for (h, pre) in pre_hidden.iter_mut().enumerate() {
            let row = &self.w1[h * self.d_in..(h + 1) * self.d_in];
            *pre += dot(row, x);
        }
        let hidden: Vec<f64> = pre_hidden.iter().map(|&z| z.max(0.0)).collect();
        let mut logits = self.b2.clone();
        for (o, z) in logits.iter_mut().enumerate() {
            let row = &self.w2[o * self.d_hidden..(o + 1) * self.d_hidden];
            *z += dot(row, &hidden);
        }
        Ok(Activations {
            pre_hidden,
            hidden,
            logits,
        })
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(x)?.logits)
    }

    pub fn forward(&self, x: &[f64], head: Head) -> Result<Vec<f64>> {
        Ok(apply_head(&self.logits(x)?, head))
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d logits`.
    /// Writes `d loss / d x` into `dx` when provided.
    pub fn accumulate_from_logits(
        &self,
        x: &[f64],
        acts: &Activations,
        dlogits: &[f64],
        grads: &mut MlpParams,
        dx: Option<&mut [f64]>,
    ) {
        let (d_in, d_h) = (self.d_in, self.d_hidden);
        let mut dhidden = vec![0.0; d_h];
        for (o, &g) in dlogits.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grads.b2[o] += g;
            let wrow = &self.w2[o * d_h..(o + 1) * d_h];
            let grow = &mut grads.w2[o * d_h..(o + 1) * d_h];
            for h in 0..d_h {
                grow[h] += g * acts.hidden[h];
                dhidden[h] += g * wrow[h];
            }
        }
        let mut dx = dx;
        if let Some(d) = dx.as_deref_mut() {
            d.fill(0.0);
        }
        for h in 0..d_h {
            // relu'(0) taken as 0
            if acts.pre_hidden[h] <= 0.0 || dhidden[h] == 0.0 {
                continue;
            }
            let g = dhidden[h];
            grads.b1[h] += g;
            let grow = &mut grads.w1[h * d_in..(h + 1) * d_in];
            for (gw, &xi) in grow.iter_mut().zip(x) {
                *gw += g * xi;
            }
            if let Some(d) = dx.as_deref_mut() {
                let wrow = &self.w1[h * d_in..(h + 1) * d_in];
                for (di, &w) in d.iter_mut().zip(wrow) {
                    *di += g * w;
                }
            }
        }
    }

    /// Gradients of `upstream · forward(x, head)`.
    pub fn backward(&self, x: &[f64], upstream: &[f64], head: Head) -> Result<Gradients> {
        if upstream.len() != self.d_out {
            return Err(Error::Shape(format!(
                "upstream length {} != d_out {}",
                upstream.len(),
                self.d_out
            )));
        }
        let acts = self.activations(x)?;
        let dlogits = head_vjp(&acts.logits, upstream, head);
        let mut grads = self.zeros_like();
        let mut dx = vec![0.0; self.d_in];
        self.accumulate_from_logits(x, &acts, &dlogits, &mut grads, Some(&mut dx));
        Ok(Gradients {
            params: grads,
            input: dx,
        })
    }
}

/// Vector-Jacobian product of the head at `logits`.
pub fn head_vjp(logits: &[f64], upstream: &[f64], head: Head) -> Vec<f64> {
    match head {
        Head::None => upstream.to_vec(),
        Head::Sigmoid => logits
            .iter()
            .zip(upstream)
            .map(|(&z, &u)| {
                let s = sigmoid(z);
                u * s * (1.0 - s)
            })
            .collect(),
        Head::Softmax => {
            let s = softmax(logits);
            let inner: f64 = s.iter().zip(upstream).map(|(a, b)| a * b).sum();
            s.iter()
                .zip(upstream)
                .map(|(&si, &u)| si * (u - inner))
                .collect()
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
