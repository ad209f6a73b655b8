use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attack::{AdversarialReport, InjectionIncident};
use crate::netsim::{CellId, KpiReportBatch};
use crate::ric::RicDecision;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackStats {
    pub crafted: usize,
    pub successes: usize,
    pub queries: usize,
    pub incidents: usize,
    pub max_delta_l2: f64,
}

impl AttackStats {
    pub fn absorb(&mut self, crafted: &[AdversarialReport], incidents: &[InjectionIncident]) {
        self.crafted += crafted.len();
        self.successes += crafted.iter().filter(|a| a.success).count();
        self.queries += crafted.iter().map(|a| a.query_count).sum::<usize>();
        self.incidents += incidents.len();
        self.max_delta_l2 = crafted.iter().map(|a| a.delta_l2).fold(self.max_delta_l2, f64::max);
    }

    pub fn success_rate(&self) -> f64 {
        if self.crafted == 0 {
            1.0
        } else {
            self.successes as f64 / self.crafted as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub mean: f64,
    pub min: u32,
    pub max: u32,
}

/// Per-iteration ground-truth UE counts and RIC activity of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub cells: Vec<CellId>,
    /// First iteration included in count summaries.
    pub measure_from: u64,
    pub iterations: Vec<u64>,
    /// `ue_counts[i][c]`: UEs served by `cells[c]` at `iterations[i]`.
    pub ue_counts: Vec<Vec<u32>>,
    pub anomalous: Vec<u32>,
    pub handovers: Vec<u32>,
    pub attack: AttackStats,
}

impl RunMetrics {
    pub fn new(cells: Vec<CellId>, measure_from: u64) -> Self {
        Self {
            cells,
            measure_from,
            iterations: Vec::new(),
            ue_counts: Vec::new(),
            anomalous: Vec::new(),
            handovers: Vec::new(),
            attack: AttackStats::default(),
        }
    }

    pub fn push_iteration(&mut self, truth: &KpiReportBatch, decision: &RicDecision) {
        let counts = self.cells.iter().map(|&c| truth.cell(c).map_or(0, |r| r.num_ues)).collect();
        self.iterations.push(truth.iteration);
        self.ue_counts.push(counts);
        self.anomalous.push(decision.anomalous.len() as u32);
        self.handovers.push(decision.handovers.len() as u32);
    }

    pub fn cell_position(&self, cell: CellId) -> Option<usize> {
        self.cells.iter().position(|&c| c == cell)
    }

    pub fn count_series(&self, cell: CellId) -> Option<Vec<u32>> {
        let j = self.cell_position(cell)?;
        Some(self.ue_counts.iter().map(|row| row[j]).collect())
    }

    /// Mean/min/max UE count of `cell` over iterations `>= measure_from`.
    pub fn summary(&self, cell: CellId) -> Option<CountSummary> {
        let j = self.cell_position(cell)?;
        let vals: Vec<u32> = self
            .iterations
            .iter()
            .zip(&self.ue_counts)
            .filter(|(t, _)| **t >= self.measure_from)
            .map(|(_, row)| row[j])
            .collect();
        if vals.is_empty() {
            return None;
        }
        Some(CountSummary {
            mean: vals.iter().map(|&v| f64::from(v)).sum::<f64>() / vals.len() as f64,
            min: *vals.iter().min().expect("non-empty"),
            max: *vals.iter().max().expect("non-empty"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGain {
    pub cell: CellId,
    pub benign: CountSummary,
    pub malicious: CountSummary,
    /// `100 * malicious.mean / benign.mean`.
    pub percent: f64,
}

pub fn gain_percent(benign_mean: f64, malicious_mean: f64) -> f64 {
    100.0 * malicious_mean / benign_mean
}

pub fn compute_attack_gain(benign: &RunMetrics, malicious: &RunMetrics) -> Result<Vec<CellGain>> {
    if benign.cells != malicious.cells {
        return Err(Error::TopologyMismatch(alloc::format!("{:?} vs {:?}", benign.cells, malicious.cells)));
    }
    benign
        .cells
        .iter()
        .map(|&cell| {
            let (Some(b), Some(m)) = (benign.summary(cell), malicious.summary(cell)) else {
                return Err(Error::EmptyData("run metrics"));
            };
            Ok(CellGain { cell, benign: b, malicious: m, percent: gain_percent(b.mean, m.mean) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_labels(predicted: &[bool], truth: &[bool]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::LengthMismatch { expected: truth.len(), got: predicted.len() });
        }
        let mut c = Self::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn metrics(&self) -> DetectionMetrics {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        DetectionMetrics { counts: *self, accuracy: ratio(self.tp + self.tn, self.total()), precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn compute_detection_metrics(verdicts: &[bool], truth: &[bool]) -> Result<DetectionMetrics> {
    Ok(ConfusionCounts::from_labels(verdicts, truth)?.metrics())
}
