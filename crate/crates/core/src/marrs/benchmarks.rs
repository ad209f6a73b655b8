use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CellWindows, DetectionConfig, WindowScore};
use crate::anomaly::{
    IsolationForestConfig, IsolationForestModel, LinearAeConfig, LinearAutoencoder, OcsvmConfig, OneClassSvmModel,
};
use crate::netsim::CellId;
use crate::nn::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    IsolationForest,
    OneClassSvm,
    LinearAutoencoder,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 3] =
        [BenchmarkKind::IsolationForest, BenchmarkKind::OneClassSvm, BenchmarkKind::LinearAutoencoder];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::IsolationForest => "iForest",
            BenchmarkKind::OneClassSvm => "OCSVM",
            BenchmarkKind::LinearAutoencoder => "linear AE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Forest(IsolationForestModel),
    Svm(OneClassSvmModel),
    Linear(LinearAutoencoder),
}

impl Model {
    /// Non-negative, larger means more anomalous.
    fn loss(&self, x: &[f64]) -> f64 {
        match self {
            Model::Forest(m) => m.score(x),
            // sum(alpha) bounds sum(alpha * K) because the kernel is at most 1.
            Model::Svm(m) => (m.coefficients.iter().sum::<f64>() - m.decision(x) - m.rho).max(0.0),
            Model::Linear(m) => m.loss(x),
        }
    }
}

/// A classical detector per cell over flattened X¹ windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDetector {
    pub kind: BenchmarkKind,
    models: BTreeMap<CellId, Model>,
}

impl BenchmarkDetector {
    pub fn train(kind: BenchmarkKind, windows: &CellWindows, cfg: &DetectionConfig, seed: u64) -> Result<Self> {
        let mut models = BTreeMap::new();
        for (&cell, ws) in windows {
            if ws.is_empty() {
                return Err(Error::Unmodeled(cell));
            }
            let data: Vec<Vec<f64>> = ws.iter().map(|w| w.data.clone()).collect();
            let cell_seed = seed ^ (u64::from(cell.0) << 40) ^ 0xbe;
            let model = match kind {
                BenchmarkKind::IsolationForest => Model::Forest(IsolationForestModel::fit(
                    &data,
                    &IsolationForestConfig { seed: cell_seed, ..cfg.iforest },
                )?),
                BenchmarkKind::OneClassSvm => Model::Svm(OneClassSvmModel::fit(&data, &OcsvmConfig { ..cfg.ocsvm })?),
                BenchmarkKind::LinearAutoencoder => {
                    let config = LinearAeConfig {
                        train: TrainConfig { seed: cell_seed, ..cfg.linear_ae.train },
                        ..cfg.linear_ae
                    };
                    Model::Linear(LinearAutoencoder::fit(&data, &config)?.0)
                }
            };
            models.insert(cell, model);
        }
        Ok(Self { kind, models })
    }

    pub fn scores(&self, windows: &CellWindows) -> Vec<WindowScore> {
        windows
            .iter()
            .flat_map(|(&cell, ws)| {
                let model = self.models.get(&cell);
                ws.iter().map(move |w| WindowScore { cell, start: w.start, loss: model.map(|m| m.loss(&w.data)) })
            })
            .collect()
    }
}
