use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{KpiStore, VarModel};
use crate::math;
use crate::netsim::{CellId, UeId, UeKpiReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QpConfig {
    pub order: usize,
    pub horizon: usize,
    /// Maximum number of trailing joint observations used for a fit.
    pub history: usize,
    pub neighbor_window_db: f64,
}

impl Default for QpConfig {
    fn default() -> Self {
        Self { order: 2, horizon: 1, history: 50, neighbor_window_db: 20.0 }
    }
}

impl QpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.horizon == 0 {
            return Err(Error::Config("QP order and horizon must be positive".into()));
        }
        if self.history < VarModel::min_observations(self.order, 2) {
            return Err(Error::Config("QP history shorter than the VAR fit requires".into()));
        }
        if !(self.neighbor_window_db >= 0.0) {
            return Err(Error::Config("neighbor window must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoeForecast {
    pub ue_id: UeId,
    pub candidate_cell: CellId,
    pub horizon: usize,
    pub value: f64,
}

/// Cells other than the serving one heard within `window_db` of the serving RSRP, in id order.
pub fn neighbor_cells(report: &UeKpiReport, window_db: f64) -> Vec<CellId> {
    let floor = report.rsrp - window_db;
    let mut cells: Vec<CellId> = report
        .neighbors
        .iter()
        .filter(|n| n.cell != report.serving_cell && n.rsrp > floor)
        .map(|n| n.cell)
        .collect();
    cells.sort();
    cells
}

/// `clamp(rsrp_candidate / rsrp_serving, 0, 2)` with both powers in linear scale.
pub fn rsrp_gap_factor(rsrp_candidate_dbm: f64, rsrp_serving_dbm: f64) -> f64 {
    math::db_to_linear(rsrp_candidate_dbm - rsrp_serving_dbm).clamp(0.0, 2.0)
}

/// Joint series `(UE serving-link throughput, cell throughput per served UE)`
/// over the trailing `history` iterations up to and including `t`, skipping
/// iterations where either side is missing.
pub fn candidate_series(store: &KpiStore, ue: UeId, cell: CellId, t: u64, history: usize) -> Vec<Vec<f64>> {
    let start = t.saturating_add(1).saturating_sub(history as u64);
    let ue_rows = store.ue_window(ue, start..t + 1);
    let cell_rows = store.cell_window(cell, start..t + 1);
    let mut out = Vec::with_capacity(ue_rows.len());
    let mut j = 0;
    for u in ue_rows {
        while j < cell_rows.len() && cell_rows[j].timestamp < u.timestamp {
            j += 1;
        }
        if j < cell_rows.len() && cell_rows[j].timestamp == u.timestamp {
            out.push(alloc::vec![u.pdcp_thp_dl, cell_rows[j].throughput_per_ue()]);
        }
    }
    out
}

pub fn qp_fit(store: &KpiStore, ue: UeId, candidate: CellId, t: u64, config: &QpConfig) -> Result<VarModel> {
    let series = candidate_series(store, ue, candidate, t, config.history);
    VarModel::fit(&series, config.order)
}

pub fn qp_forecast(model: &VarModel, recent: &[Vec<f64>], horizon: usize) -> Result<Vec<f64>> {
    model.forecast(recent, horizon)
}

fn fit_and_forecast(store: &KpiStore, ue: UeId, cell: CellId, t: u64, config: &QpConfig) -> Result<Option<Vec<f64>>> {
    let series = candidate_series(store, ue, cell, t, config.history);
    let needed = VarModel::min_observations(config.order, 2);
    if series.len() < needed {
        return Ok(None);
    }
    let model = VarModel::fit(&series, config.order)?;
    let f = model.forecast(&series, config.horizon)?;
    Ok(f.iter().all(|v| v.is_finite()).then_some(f))
}

/// QoE forecast on the UE's current link: the UE-throughput component.
/// `None` while the joint history is too short.
pub fn serving_forecast(store: &KpiStore, ue: UeId, t: u64, config: &QpConfig) -> Result<Option<QoeForecast>> {
    let report = store.ue_at(ue, t).ok_or(Error::MissingIteration(t))?;
    let serving = report.serving_cell;
    Ok(fit_and_forecast(store, ue, serving, t, config)?.map(|f| QoeForecast {
        ue_id: ue,
        candidate_cell: serving,
        horizon: config.horizon,
        value: f[0],
    }))
}

/// QoE forecast for a neighbor cell: forecast per-UE cell throughput scaled by the rsrp-gap factor.
pub fn candidate_forecast(store: &KpiStore, ue: UeId, cell: CellId, t: u64, config: &QpConfig) -> Result<Option<QoeForecast>> {
    let report = store.ue_at(ue, t).ok_or(Error::MissingIteration(t))?;
    let Some(cand_rsrp) = report.rsrp_of(cell) else {
        return Ok(None);
    };
    let gap = rsrp_gap_factor(cand_rsrp, report.rsrp);
    Ok(fit_and_forecast(store, ue, cell, t, config)?.map(|f| QoeForecast {
        ue_id: ue,
        candidate_cell: cell,
        horizon: config.horizon,
        value: f[1] * gap,
    }))
}
