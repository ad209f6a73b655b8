use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CategoryBoundaries, QoeCategory};
use crate::math;
use crate::netsim::CellKpiReport;
use crate::nn::{train, Activation, Example, Mlp, TrainConfig};
use crate::ric::{QpConfig, VarModel};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// The reportable cell fields the attacker may perturb, in this order.
pub const ATTACK_FEATURES: [&str; 5] = ["throughput", "meas_period_prb", "num_ues", "new_ues", "left_ues"];
pub const ATTACK_DIM: usize = ATTACK_FEATURES.len();
/// Indices of the integer-valued fields in the attack feature vector.
pub const COUNT_FEATURES: [usize; 3] = [2, 3, 4];

pub fn cell_features(r: &CellKpiReport) -> [f64; ATTACK_DIM] {
    [r.throughput, r.meas_period_prb, f64::from(r.num_ues), f64::from(r.new_ues), f64::from(r.left_ues)]
}

/// Writes a feature vector back into a report. Counts must already be integral and non-negative.
pub fn with_features(base: &CellKpiReport, x: &[f64]) -> CellKpiReport {
    let count = |v: f64| math::round(v).max(0.0) as u32;
    CellKpiReport {
        throughput: x[0],
        meas_period_prb: x[1],
        num_ues: count(x[2]),
        new_ues: count(x[3]),
        left_ues: count(x[4]),
        ..*base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstituteSample {
    pub features: [f64; ATTACK_DIM],
    pub label: f64,
}

/// The QP's view of a cell: the `horizon`-step forecast of its per-UE
/// throughput from a VAR over `(cell throughput, throughput per UE)`, using
/// the trailing `qp.history` reports up to and including the last one.
pub fn qoe_oracle(history: &[CellKpiReport], qp: &QpConfig) -> Result<f64> {
    let start = history.len().saturating_sub(qp.history);
    let series: Vec<Vec<f64>> =
        history[start..].iter().map(|r| alloc::vec![r.throughput, r.throughput_per_ue()]).collect();
    let model = VarModel::fit(&series, qp.order)?;
    let f = model.forecast(&series, qp.horizon)?;
    Ok(f[1])
}

/// Labels every report of `history` that has enough preceding history for
/// the oracle, then returns the most recent `n` of them.
pub fn collect_substitute_data(history: &[CellKpiReport], qp: &QpConfig, n: usize) -> Result<Vec<SubstituteSample>> {
    let first = VarModel::min_observations(qp.order, 2);
    let available = history.len().saturating_sub(first - 1);
    if n > available {
        return Err(Error::InsufficientHistory { needed: n, have: available });
    }
    (history.len() - n..history.len())
        .map(|t| Ok(SubstituteSample { features: cell_features(&history[t]), label: qoe_oracle(&history[..=t], qp)? }))
        .collect()
}

/// Synthetic queries against the replica oracle: for each of the last `n`
/// reports, `per_point` variants with rescaled throughput and shifted UE
/// count replace that report, and the oracle labels the altered history.
pub fn augment_substitute_data(
    history: &[CellKpiReport],
    qp: &QpConfig,
    n: usize,
    per_point: usize,
    seed: u64,
) -> Result<Vec<SubstituteSample>> {
    let first = VarModel::min_observations(qp.order, 2);
    let available = history.len().saturating_sub(first - 1);
    if n > available {
        return Err(Error::InsufficientHistory { needed: n, have: available });
    }
    let mut rng = rng::substream(seed, Stream::Attack, 0xa09);
    let mut out = Vec::with_capacity(n * per_point);
    let mut scratch: Vec<CellKpiReport> = Vec::new();
    for t in history.len() - n..history.len() {
        let start = (t + 1).saturating_sub(qp.history);
        for _ in 0..per_point {
            let base = &history[t];
            let scale = math::exp(rng.random_range(-1.0..1.5));
            let num = (i64::from(base.num_ues) + rng.random_range(-3..=3)).max(0) as u32;
            let variant = CellKpiReport { throughput: base.throughput * scale, num_ues: num, ..base.clone() };
            scratch.clear();
            scratch.extend_from_slice(&history[start..t]);
            scratch.push(variant.clone());
            out.push(SubstituteSample { features: cell_features(&variant), label: qoe_oracle(&scratch, qp)? });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubstituteConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub holdout_fraction: f64,
    pub min_agreement: f64,
    pub attempts: usize,
    pub min_samples: usize,
    /// Synthetic oracle queries per observed report.
    pub augmentation: usize,
}

impl Default for SubstituteConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 300,
            batch_size: 16,
            lr: 3e-3,
            holdout_fraction: 0.2,
            min_agreement: 0.8,
            attempts: 5,
            min_samples: 50,
            augmentation: 4,
        }
    }
}

impl SubstituteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.attempts == 0 || self.batch_size == 0 {
            return Err(Error::Config("substitute needs hidden units, a batch size and attempts".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) || !(0.0..=1.0).contains(&self.min_agreement) {
            return Err(Error::Config("substitute holdout/agreement fractions out of range".into()));
        }
        Ok(())
    }
}

/// Dense regressor over standardized attack features, plus the categorizer.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstituteModel {
    pub net: Mlp,
    pub input_mean: [f64; ATTACK_DIM],
    pub input_std: [f64; ATTACK_DIM],
    pub label_mean: f64,
    pub label_std: f64,
    pub boundaries: CategoryBoundaries,
    /// Categorical agreement with the oracle labels on the held-out split.
    pub agreement: f64,
    /// Indices into the training data of the held-out samples.
    pub held_out: Vec<usize>,
}

impl SubstituteModel {
    pub fn standardize(&self, x: &[f64]) -> [f64; ATTACK_DIM] {
        core::array::from_fn(|j| (x[j] - self.input_mean[j]) / self.input_std[j])
    }

    pub fn destandardize(&self, z: &[f64]) -> [f64; ATTACK_DIM] {
        core::array::from_fn(|j| z[j] * self.input_std[j] + self.input_mean[j])
    }

    pub fn predict_standardized(&self, z: &[f64]) -> f64 {
        self.net.predict(z)[0] * self.label_std + self.label_mean
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_standardized(&self.standardize(x))
    }

    pub fn category(&self, x: &[f64]) -> QoeCategory {
        self.boundaries.categorize(self.predict(x))
    }
}

fn column_stats(rows: &[[f64; ATTACK_DIM]]) -> ([f64; ATTACK_DIM], [f64; ATTACK_DIM]) {
    let mut mean = [0.0; ATTACK_DIM];
    let mut std = [1.0; ATTACK_DIM];
    for j in 0..ATTACK_DIM {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        mean[j] = math::mean(&col);
        let s = math::std_dev(&col);
        if s > 0.0 {
            std[j] = s;
        }
    }
    (mean, std)
}

/// Fits the substitute on a shuffled split; retries with a fresh seed until
/// the held-out categorical agreement reaches `min_agreement`.
pub fn train_substitute(data: &[SubstituteSample], config: &SubstituteConfig, seed: u64) -> Result<SubstituteModel> {
    train_substitute_with(data, &[], None, config, seed)
}

/// As [`train_substitute`], with `synthetic` samples always in the fitting
/// split and optional fixed category boundaries. The held-out split is drawn
/// from `data` only. Without `boundaries`, they are the quartiles of the
/// fitting-split labels of `data`. Labels are clipped to a band around the
/// boundaries before fitting, which leaves every category unchanged.
pub fn train_substitute_with(
    data: &[SubstituteSample],
    synthetic: &[SubstituteSample],
    boundaries: Option<CategoryBoundaries>,
    config: &SubstituteConfig,
    seed: u64,
) -> Result<SubstituteModel> {
    config.validate()?;
    if data.len() < config.min_samples.max(2) {
        return Err(if data.is_empty() {
            Error::EmptyData("substitute dataset")
        } else {
            Error::InsufficientHistory { needed: config.min_samples.max(2), have: data.len() }
        });
    }
    if data.iter().chain(synthetic).any(|s| !s.label.is_finite() || s.features.iter().any(|v| !v.is_finite())) {
        return Err(Error::MalformedBatch(format!("non-finite substitute sample among {}", data.len())));
    }
    let mut best: Option<SubstituteModel> = None;
    for attempt in 0..config.attempts as u64 {
        let mut rng = rng::substream(seed, Stream::Attack, 0x5b5_0000 + attempt);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let n_hold = (((data.len() as f64) * config.holdout_fraction) as usize).clamp(1, data.len() - 1);
        let (hold, fit) = order.split_at(n_hold);
        let fit: Vec<&SubstituteSample> = fit.iter().map(|&i| &data[i]).chain(synthetic).collect();

        let boundaries = match boundaries {
            Some(b) => b,
            None => {
                let real: Vec<f64> = order[n_hold..].iter().map(|&i| data[i].label).collect();
                CategoryBoundaries::from_quartiles(&real)?
            }
        };
        let [lo, _, hi] = boundaries.values();
        let (lo, hi) = (lo - (hi - lo), hi + (hi - lo));
        let rows: Vec<[f64; ATTACK_DIM]> = fit.iter().map(|s| s.features).collect();
        let labels: Vec<f64> = fit.iter().map(|s| s.label.clamp(lo, hi)).collect();
        let (input_mean, input_std) = column_stats(&rows);
        let label_mean = math::mean(&labels);
        let label_std = match math::std_dev(&labels) {
            s if s > 0.0 => s,
            _ => 1.0,
        };
        let mut model = SubstituteModel {
            net: Mlp::new(&[ATTACK_DIM, config.hidden, config.hidden, 1], Activation::Tanh, &mut rng),
            input_mean,
            input_std,
            label_mean,
            label_std,
            boundaries,
            agreement: 0.0,
            held_out: hold.to_vec(),
        };
        let examples: Vec<Example> = fit
            .iter()
            .zip(&labels)
            .map(|(s, y)| Example::new(model.standardize(&s.features).to_vec(), alloc::vec![(y - label_mean) / label_std]))
            .collect();
        let tc = TrainConfig {
            epochs: config.epochs,
            batch_size: config.batch_size,
            lr: config.lr,
            seed: seed.wrapping_add(attempt),
            ..TrainConfig::default()
        };
        train(&mut model.net, &examples, &tc)?;
        let agree = hold
            .iter()
            .filter(|&&i| model.category(&data[i].features) == model.boundaries.categorize(data[i].label))
            .count();
        model.agreement = agree as f64 / hold.len() as f64;
        log::debug!("substitute attempt {attempt}: agreement {:.3}", model.agreement);
        if model.agreement >= config.min_agreement {
            return Ok(model);
        }
        if best.as_ref().is_none_or(|b| model.agreement > b.agreement) {
            best = Some(model);
        }
    }
    Err(Error::SubstituteAgreement {
        best: best.map_or(0.0, |b| b.agreement),
        required: config.min_agreement,
        attempts: config.attempts,
    })
}
