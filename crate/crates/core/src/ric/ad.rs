use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::KpiStore;
use crate::anomaly::{IsolationForestConfig, IsolationForestModel};
use crate::netsim::{UeId, UeKpiReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdConfig {
    /// Number of initial batches whose UE vectors train the forest.
    pub training_iterations: usize,
    pub forest: IsolationForestConfig,
}

impl Default for AdConfig {
    fn default() -> Self {
        Self { training_iterations: 100, forest: IsolationForestConfig::default() }
    }
}

impl AdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.training_iterations == 0 {
            return Err(Error::Config("AD needs at least one training iteration".into()));
        }
        self.forest.validate()
    }
}

/// `[pdcp_thp_dl, prb_ratio_dl, rsrp, rsrq, snir]`.
pub fn ue_feature_vector(r: &UeKpiReport) -> Vec<f64> {
    alloc::vec![r.pdcp_thp_dl, r.prb_ratio_dl, r.rsrp, r.rsrq, r.snir]
}

/// UEs at iteration `t` whose isolation score exceeds the model threshold, in id order.
pub fn ad_detect(store: &KpiStore, model: &IsolationForestModel, t: u64) -> Result<Vec<UeId>> {
    if !store.contains(t) {
        return Err(Error::MissingIteration(t));
    }
    Ok(store
        .ues_at(t)
        .into_iter()
        .filter(|r| model.is_anomalous(&ue_feature_vector(r)))
        .map(|r| r.ue_id)
        .collect())
}
