use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::NetworkState;
use crate::math;
use crate::{Error, Result};

/// Log-distance path loss with optional correlated log-normal shadowing and a
/// Shannon-shaped rate map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    /// Path loss at the reference distance, dB.
    pub pl0_db: f64,
    pub d0_m: f64,
    pub exponent: f64,
    pub d_min_m: f64,
    pub shadowing: bool,
    pub shadowing_sigma_db: f64,
    /// Per-iteration AR(1) correlation of the shadowing process.
    pub shadowing_correlation: f64,
    pub noise_dbm: f64,
    pub bandwidth_scale_bps: f64,
    pub max_thp_bps: f64,
    pub uplink_ratio: f64,
    pub meas_period_prb_khz: f64,
    pub meas_period_jitter_khz: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            pl0_db: 40.0,
            d0_m: 1.0,
            exponent: 3.5,
            d_min_m: 1.0,
            shadowing: true,
            shadowing_sigma_db: 4.0,
            shadowing_correlation: 0.9,
            noise_dbm: -97.0,
            bandwidth_scale_bps: 10.0e6,
            max_thp_bps: 100.0e6,
            uplink_ratio: 0.25,
            meas_period_prb_khz: 180.0,
            meas_period_jitter_khz: 1.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pl0_db,
            self.d0_m,
            self.exponent,
            self.d_min_m,
            self.shadowing_sigma_db,
            self.shadowing_correlation,
            self.noise_dbm,
            self.bandwidth_scale_bps,
            self.max_thp_bps,
            self.uplink_ratio,
            self.meas_period_prb_khz,
            self.meas_period_jitter_khz,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("radio constants must be finite".into()));
        }
        if self.d0_m <= 0.0 || self.d_min_m <= 0.0 || self.exponent <= 0.0 {
            return Err(Error::Config("d0, d_min and the path-loss exponent must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.shadowing_correlation) || self.shadowing_sigma_db < 0.0 {
            return Err(Error::Config("shadowing correlation must lie in [0,1) and sigma >= 0".into()));
        }
        if self.max_thp_bps <= 0.0 || self.bandwidth_scale_bps <= 0.0 {
            return Err(Error::Config("throughput constants must be positive".into()));
        }
        Ok(())
    }

    /// `bandwidth_scale * log2(1 + snir)`, clamped to `[0, max_thp]`.
    pub fn throughput(&self, snir_db: f64) -> f64 {
        (self.bandwidth_scale_bps * math::log2(1.0 + math::db_to_linear(snir_db))).clamp(0.0, self.max_thp_bps)
    }
}

pub fn path_loss_db(radio: &RadioConfig, distance_m: f64) -> f64 {
    let d = distance_m.max(radio.d_min_m);
    radio.pl0_db + 10.0 * radio.exponent * math::log10(d / radio.d0_m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioMeasurement {
    /// dBm, for the requested cell.
    pub rsrp: f64,
    pub rsrq: f64,
    pub snir: f64,
    /// RSRP of every cell at this UE, in cell order.
    pub rsrp_all: Vec<f64>,
}

/// Radio quality of `ue` towards `cell` (indices into `state`), treating every
/// other cell as a full-power interferer.
pub fn compute_radio(
    state: &NetworkState,
    ue: usize,
    cell: usize,
    radio: &RadioConfig,
    shadowing_db: &[f64],
) -> RadioMeasurement {
    let pos = state.ues[ue].position;
    let rsrp_all: Vec<f64> = state
        .cells
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let shadow = if radio.shadowing { shadowing_db.get(ci).copied().unwrap_or(0.0) } else { 0.0 };
            c.tx_power - path_loss_db(radio, c.position.distance(pos)) - shadow
        })
        .collect();
    let noise = math::db_to_linear(radio.noise_dbm);
    let lin: Vec<f64> = rsrp_all.iter().map(|&r| math::db_to_linear(r)).collect();
    let total: f64 = lin.iter().sum::<f64>() + noise;
    let own = lin[cell];
    let interference = total - noise - own;
    RadioMeasurement {
        rsrp: rsrp_all[cell],
        rsrq: math::linear_to_db(own / total),
        snir: math::linear_to_db(own / (noise + interference.max(0.0))),
        rsrp_all,
    }
}
