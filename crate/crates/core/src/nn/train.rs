use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamConfig, AdamState, Example, Trainable};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Abort once an epoch's mean loss exceeds this.
    pub divergence_limit: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, batch_size: 32, lr: 1e-3, seed: 0, divergence_limit: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean loss per epoch.
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }
}

/// Minibatch Adam on mean squared error. Shuffling is seeded by `config.seed`.
pub fn train<M: Trainable>(model: &mut M, data: &[Example], config: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::EmptyData("training set"));
    }
    let mut report = TrainReport::default();
    if config.epochs == 0 {
        return Ok(report);
    }
    let batch = config.batch_size.max(1);
    let mut rng = rng::substream(config.seed, Stream::Training, 0);
    let mut adam = AdamState::for_params(&model.params(), AdamConfig { lr: config.lr, ..AdamConfig::default() });
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads = model.zero_grads();
            for &i in chunk {
                epoch_loss += model.loss_and_grad(&data[i], &mut grads);
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in grads.iter_mut().flat_map(|g| g.iter_mut()) {
                *g *= scale;
                if !g.is_finite() {
                    return Err(Error::NonFiniteGradient(format!("epoch {epoch}")));
                }
            }
            adam_step(model.params_mut(), &grads, &mut adam);
        }
        let mean = epoch_loss / data.len() as f64;
        report.loss_history.push(mean);
        if !mean.is_finite() || mean > config.divergence_limit {
            return Err(Error::Diverged { epoch, loss: mean, history: report.loss_history });
        }
    }
    Ok(report)
}
