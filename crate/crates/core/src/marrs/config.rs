use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ThresholdPolicy;
use crate::anomaly::{IsolationForestConfig, LinearAeConfig, OcsvmConfig};
use crate::nn::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub window_len: usize,
    pub latent_dim: usize,
    /// Decoder LSTM width of both autoencoder stages.
    pub hidden_size: usize,
    pub ae1_train: TrainConfig,
    pub ae2_train: TrainConfig,
    pub threshold: ThresholdPolicy,
    /// Leading share of the benign run used for training; the rest is benign validation.
    pub train_fraction: f64,
    /// Share of the attack period, from its start, whose windows calibrate the threshold.
    pub validation_fraction: f64,
    /// Benign windows kept per malicious window in the evaluation sets.
    pub benign_per_malicious: f64,
    pub sequence_lengths: Vec<usize>,
    pub iforest: IsolationForestConfig,
    pub ocsvm: OcsvmConfig,
    pub linear_ae: LinearAeConfig,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        let ae = TrainConfig { epochs: 40, batch_size: 16, lr: 5e-3, ..TrainConfig::default() };
        Self {
            window_len: 10,
            latent_dim: 8,
            hidden_size: 16,
            ae1_train: ae,
            ae2_train: ae,
            threshold: ThresholdPolicy::MaxF1,
            train_fraction: 0.8,
            validation_fraction: 0.3,
            benign_per_malicious: 4.0,
            sequence_lengths: vec![1, 3, 5, 7],
            iforest: IsolationForestConfig::default(),
            ocsvm: OcsvmConfig::default(),
            linear_ae: LinearAeConfig::default(),
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.latent_dim == 0 || self.hidden_size == 0 {
            return Err(Error::Config("window_len, latent_dim and hidden_size must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must lie in (0, 1)".into()));
        }
        if !(self.benign_per_malicious > 0.0) {
            return Err(Error::Config("benign_per_malicious must be positive".into()));
        }
        if self.sequence_lengths.contains(&0) {
            return Err(Error::Config("sequence lengths must be at least 1".into()));
        }
        if let ThresholdPolicy::BenignQuantile { q } = self.threshold {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Config("threshold quantile must lie in [0, 1]".into()));
            }
        }
        self.iforest.validate()
    }
}
