//! The miniature near-RT RIC: KPI monitor/store, anomaly detection of degraded
//! UEs, per-UE per-candidate QoE forecasting and the traffic-steering decision.

mod ad;
mod qp;
mod store;
mod ts;
mod var;

pub use ad::{ad_detect, ue_feature_vector, AdConfig};
pub use qp::{
    candidate_series, neighbor_cells, qp_fit, qp_forecast, rsrp_gap_factor, serving_forecast, candidate_forecast,
    QoeForecast, QpConfig,
};
pub use store::KpiStore;
pub use ts::{ts_decide, A1Policy};
pub use var::VarModel;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::anomaly::IsolationForestModel;
use crate::netsim::{HandoverRequest, KpiReportBatch, UeId};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RicConfig {
    pub ad: AdConfig,
    pub qp: QpConfig,
    pub policy: A1Policy,
}

impl Default for RicConfig {
    fn default() -> Self {
        Self { ad: AdConfig::default(), qp: QpConfig::default(), policy: A1Policy::default() }
    }
}

impl RicConfig {
    pub fn validate(&self) -> Result<()> {
        self.ad.validate()?;
        self.qp.validate()?;
        self.policy.validate()
    }
}

/// Outcome of one AD -> QP -> TS pass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RicDecision {
    pub anomalous: Vec<UeId>,
    pub handovers: Vec<HandoverRequest>,
}

/// KPIMON + AD + QP + TS. The AD forest is fitted on the UE reports of the
/// first `ad.training_iterations` batches; no steering happens before that.
#[derive(Debug, Clone)]
pub struct Ric {
    config: RicConfig,
    seed: u64,
    store: KpiStore,
    ad_model: Option<IsolationForestModel>,
    ad_training: Vec<Vec<f64>>,
}

impl Ric {
    pub fn new(config: RicConfig, seed: u64) -> Self {
        Self { config, seed, store: KpiStore::new(), ad_model: None, ad_training: Vec::new() }
    }

    pub fn store(&self) -> &KpiStore {
        &self.store
    }

    pub fn into_store(self) -> KpiStore {
        self.store
    }

    pub fn ad_model(&self) -> Option<&IsolationForestModel> {
        self.ad_model.as_ref()
    }

    pub fn config(&self) -> &RicConfig {
        &self.config
    }

    pub fn on_batch(&mut self, batch: KpiReportBatch) -> Result<RicDecision> {
        let t = batch.iteration;
        if self.ad_model.is_none() {
            self.ad_training.extend(batch.ues.iter().map(ue_feature_vector));
        }
        self.store.ingest(batch)?;
        if self.ad_model.is_none() {
            if self.store.len() >= self.config.ad.training_iterations {
                let forest = crate::anomaly::IsolationForestConfig { seed: self.seed, ..self.config.ad.forest };
                self.ad_model = Some(IsolationForestModel::fit(&self.ad_training, &forest)?);
                self.ad_training = Vec::new();
            }
            return Ok(RicDecision::default());
        }
        self.decide(t)
    }

    /// The steering pass for iteration `t`; a pure function of the store and models.
    pub fn decide(&self, t: u64) -> Result<RicDecision> {
        let Some(model) = &self.ad_model else {
            return Ok(RicDecision::default());
        };
        let anomalous = ad_detect(&self.store, model, t)?;
        let mut handovers = Vec::new();
        for &ue in &anomalous {
            let Some(serving) = serving_forecast(&self.store, ue, t, &self.config.qp)? else {
                continue;
            };
            let report = self.store.ue_at(ue, t).expect("AD only returns UEs present at t");
            let neighbors: Vec<QoeForecast> = neighbor_cells(report, self.config.qp.neighbor_window_db)
                .into_iter()
                .filter_map(|cell| candidate_forecast(&self.store, ue, cell, t, &self.config.qp).transpose())
                .collect::<Result<_>>()?;
            if let Some(req) = ts_decide(ue, &serving, &neighbors, &self.config.policy, t) {
                handovers.push(req);
            }
        }
        Ok(RicDecision { anomalous, handovers })
    }
}

#[cfg(test)]
mod tests;
