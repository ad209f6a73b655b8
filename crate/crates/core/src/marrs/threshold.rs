use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::harness::ConfusionCounts;
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ThresholdPolicy {
    /// Best F1 on labeled validation losses.
    #[default]
    MaxF1,
    /// Empirical quantile of benign losses.
    BenignQuantile { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub policy: ThresholdPolicy,
}

impl Threshold {
    pub fn new(value: f64, policy: ThresholdPolicy) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(Error::Config(alloc::format!("threshold must be non-negative, got {value}")));
        }
        Ok(Self { value, policy })
    }

    /// `true` means untrusted.
    pub fn classify(&self, loss: f64) -> bool {
        classify_loss(loss, self.value)
    }
}

/// Window verdict: untrusted when the loss reaches the threshold.
pub fn classify_loss(loss: f64, threshold: f64) -> bool {
    !(threshold > loss)
}

fn f1_at(losses: &[f64], labels: &[bool], t: f64) -> f64 {
    let verdicts: Vec<bool> = losses.iter().map(|&l| classify_loss(l, t)).collect();
    ConfusionCounts::from_labels(&verdicts, labels).map_or(0.0, |c| c.metrics().f1)
}

/// Picks the midpoint between consecutive distinct losses with the highest
/// F1; ties go to the lowest candidate. With a single distinct loss that loss
/// is the only candidate.
pub fn calibrate_max_f1(losses: &[f64], labels: &[bool]) -> Result<Threshold> {
    if losses.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: losses.len(), got: labels.len() });
    }
    if losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Config("losses must be finite and non-negative".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let candidates: Vec<f64> = if sorted.len() == 1 {
        sorted.clone()
    } else {
        sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    };
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    for &t in &candidates {
        let f1 = f1_at(losses, labels, t);
        if f1 > best.0 {
            best = (f1, t);
        }
    }
    Threshold::new(best.1, ThresholdPolicy::MaxF1)
}

/// Empirical `q`-quantile of benign losses (linear interpolation).
pub fn calibrate_quantile(benign: &[f64], q: f64) -> Result<Threshold> {
    if benign.is_empty() {
        return Err(Error::EmptyData("benign losses"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config("quantile must lie in [0, 1]".into()));
    }
    Threshold::new(math::quantile(benign, q), ThresholdPolicy::BenignQuantile { q })
}

pub fn calibrate_threshold(losses: &[f64], labels: &[bool], policy: ThresholdPolicy) -> Result<Threshold> {
    match policy {
        ThresholdPolicy::MaxF1 => calibrate_max_f1(losses, labels),
        ThresholdPolicy::BenignQuantile { q } => {
            if losses.len() != labels.len() {
                return Err(Error::LengthMismatch { expected: losses.len(), got: labels.len() });
            }
            let benign: Vec<f64> = losses.iter().zip(labels).filter(|(_, &m)| !m).map(|(&l, _)| l).collect();
            calibrate_quantile(&benign, q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceRule {
    All,
    Majority,
}

/// Combines `k` window verdicts. Majority: at least `(k + 1) / 2` untrusted
/// (real-valued, so `k = 4` needs three). All: every window untrusted.
pub fn classify_sequence(labels: &[bool], rule: SequenceRule, k: usize) -> Result<bool> {
    if k == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    if labels.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: labels.len() });
    }
    let hits = labels.iter().filter(|&&l| l).count();
    Ok(match rule {
        SequenceRule::All => hits == k,
        SequenceRule::Majority => 2 * hits >= k + 1,
    })
}
