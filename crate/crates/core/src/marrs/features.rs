use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::netsim::CellId;
use crate::ric::KpiStore;
use crate::{Error, Result};

pub const FEATURE_NAMES: [&str; 11] = [
    "Throughput",
    "MeasPeriodPrb",
    "Number_UEs",
    "New_UEs",
    "Left_UEs",
    "ThpDl_Mean",
    "ThpDl_Std",
    "Rssnir_Mean",
    "Rssnir_Std",
    "Rsrp_Mean",
    "Rsrp_Std",
];
pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

/// Comma-joined column names; bundles record it to refuse mismatched layouts.
pub fn feature_schema() -> String {
    FEATURE_NAMES.join(",")
}

/// Unscaled feature row of `cell` at iteration `t`, and whether the cell served
/// nobody (its UE aggregates are then all zero).
pub fn raw_features(store: &KpiStore, cell: CellId, t: u64) -> Result<([f64; FEATURE_DIM], bool)> {
    if !store.contains(t) {
        return Err(Error::MissingIteration(t));
    }
    let c = store.cell_at(cell, t).ok_or(Error::UnknownCell(cell))?;
    let served: Vec<_> = store.ues_at(t).into_iter().filter(|u| u.serving_cell == cell).collect();
    let stats = |f: fn(&crate::netsim::UeKpiReport) -> f64| {
        let v: Vec<f64> = served.iter().map(|u| f(u)).collect();
        (math::mean(&v), math::std_dev(&v))
    };
    let (thp_m, thp_s) = stats(|u| u.pdcp_thp_dl);
    let (snir_m, snir_s) = stats(|u| u.snir);
    let (rsrp_m, rsrp_s) = stats(|u| u.rsrp);
    let row = [
        c.throughput,
        c.meas_period_prb,
        f64::from(c.num_ues),
        f64::from(c.new_ues),
        f64::from(c.left_ues),
        thp_m,
        thp_s,
        snir_m,
        snir_s,
        rsrp_m,
        rsrp_s,
    ];
    Ok((row, served.is_empty()))
}

/// Per-column standardization statistics. Constant columns keep a unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl FeatureScaler {
    pub fn fit(rows: &[[f64; FEATURE_DIM]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData("feature rows"));
        }
        let mut mean = [0.0; FEATURE_DIM];
        let mut std = [1.0; FEATURE_DIM];
        for j in 0..FEATURE_DIM {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            mean[j] = math::mean(&col);
            let s = math::std_dev(&col);
            if s > 1e-12 * mean[j].abs().max(1.0) {
                std[j] = s;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, row: &[f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        core::array::from_fn(|j| (row[j] - self.mean[j]) / self.std[j])
    }
}

/// `window_len` consecutive standardized rows of one cell, flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub cell_id: CellId,
    pub start: u64,
    pub window_len: usize,
    pub data: Vec<f64>,
    /// Some iteration in the window had no served UE.
    pub flagged: bool,
}

impl FeatureWindow {
    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(FEATURE_DIM)
    }

    /// Iterations covered, `start..start + window_len`.
    pub fn span(&self) -> Range<u64> {
        self.start..self.start + self.window_len as u64
    }
}

fn raw_rows(store: &KpiStore, cell: CellId, range: &Range<u64>) -> Result<Vec<([f64; FEATURE_DIM], bool)>> {
    range.clone().map(|t| raw_features(store, cell, t)).collect()
}

fn slide(cell: CellId, range: &Range<u64>, rows: &[([f64; FEATURE_DIM], bool)], scaler: &FeatureScaler, w: usize) -> Vec<FeatureWindow> {
    if w == 0 || rows.len() < w {
        return Vec::new();
    }
    let scaled: Vec<[f64; FEATURE_DIM]> = rows.iter().map(|(r, _)| scaler.transform(r)).collect();
    (0..=rows.len() - w)
        .map(|i| FeatureWindow {
            cell_id: cell,
            start: range.start + i as u64,
            window_len: w,
            data: scaled[i..i + w].iter().flatten().copied().collect(),
            flagged: rows[i..i + w].iter().any(|(_, empty)| *empty),
        })
        .collect()
}

/// Sliding windows (stride 1) over `range` using fixed statistics. A range
/// shorter than `window_len` yields no windows.
pub fn extract_features(
    store: &KpiStore,
    cell: CellId,
    range: Range<u64>,
    scaler: &FeatureScaler,
    window_len: usize,
) -> Result<Vec<FeatureWindow>> {
    let rows = raw_rows(store, cell, &range)?;
    Ok(slide(cell, &range, &rows, scaler, window_len))
}

/// Owns one cell's statistics: fitted once on training data, then only applied.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    pub cell: CellId,
    pub window_len: usize,
    scaler: Option<FeatureScaler>,
}

impl FeatureExtractor {
    pub fn new(cell: CellId, window_len: usize) -> Self {
        Self { cell, window_len, scaler: None }
    }

    pub fn with_scaler(cell: CellId, window_len: usize, scaler: FeatureScaler) -> Self {
        Self { cell, window_len, scaler: Some(scaler) }
    }

    pub fn scaler(&self) -> Option<&FeatureScaler> {
        self.scaler.as_ref()
    }

    /// Fits the statistics on `range` and returns its windows. Fitting twice is
    /// a [`Error::StatisticsLeak`].
    pub fn fit(&mut self, store: &KpiStore, range: Range<u64>) -> Result<Vec<FeatureWindow>> {
        if self.scaler.is_some() {
            return Err(Error::StatisticsLeak);
        }
        let rows = raw_rows(store, self.cell, &range)?;
        let plain: Vec<[f64; FEATURE_DIM]> = rows.iter().map(|(r, _)| *r).collect();
        let scaler = FeatureScaler::fit(&plain)?;
        let windows = slide(self.cell, &range, &rows, &scaler, self.window_len);
        self.scaler = Some(scaler);
        Ok(windows)
    }

    pub fn extract(&self, store: &KpiStore, range: Range<u64>) -> Result<Vec<FeatureWindow>> {
        let scaler = self.scaler.as_ref().ok_or_else(|| Error::Config("feature statistics not fitted".into()))?;
        extract_features(store, self.cell, range, scaler, self.window_len)
    }
}
