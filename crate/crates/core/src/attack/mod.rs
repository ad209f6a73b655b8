//! Adversarial KPI manipulation by rogue cells: a substitute of the QoE
//! predictor, quartile QoE categories, a decision-based boundary attack over
//! the reportable cell fields and injection into outgoing telemetry.

mod category;
mod hsj;
mod inject;
mod substitute;

pub use category::{categorize, CategoryBoundaries, QoeCategory};
pub use hsj::{
    craft_adversarial, hop_skip_jump, AdversarialReport, AttackBudget, HardLabelOracle, HsjConfig, HsjOutcome,
    SubstituteOracle,
};
pub use inject::{check_plausible, inject, InjectionIncident};
pub use substitute::{
    augment_substitute_data, cell_features, collect_substitute_data, qoe_oracle, train_substitute,
    train_substitute_with, with_features, SubstituteConfig,
    SubstituteModel, SubstituteSample, ATTACK_DIM, ATTACK_FEATURES, COUNT_FEATURES,
};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::netsim::{CellId, CellKpiReport, KpiReportBatch};
use crate::ric::QpConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Labels come from the attacker's own true reports run through the known QP recipe.
    #[default]
    SubstituteOnly,
    /// Labels come from the QP applied to the history the RIC actually received.
    ExactOracle,
}

/// Where the four QoE categories' boundaries come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum BoundarySource {
    /// Quartiles of the throughput the cell delivered to its own UEs while observing.
    #[default]
    ServedUeQoe,
    /// Quartiles of the substitute's fitting labels.
    SubstituteLabels,
    Fixed { values: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub enabled: bool,
    pub malicious_cells: Vec<CellId>,
    /// Reports before this iteration are observed honestly and become substitute training data.
    pub start_iteration: u64,
    pub oracle_mode: OracleMode,
    pub boundaries: BoundarySource,
    pub max_l2: f64,
    pub query_budget: usize,
    pub substitute: SubstituteConfig,
    pub hsj: HsjConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            malicious_cells: Vec::new(),
            start_iteration: 100,
            oracle_mode: OracleMode::default(),
            boundaries: BoundarySource::default(),
            max_l2: 3.0,
            query_budget: 25_000,
            substitute: SubstituteConfig::default(),
            hsj: HsjConfig::default(),
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_l2 > 0.0) || self.query_budget == 0 {
            return Err(Error::Config("attack needs max_l2 > 0 and a query budget".into()));
        }
        let mut ids = self.malicious_cells.clone();
        ids.sort();
        ids.dedup();
        if ids.len() != self.malicious_cells.len() {
            return Err(Error::Config("duplicate malicious cell".into()));
        }
        if let BoundarySource::Fixed { values } = self.boundaries {
            CategoryBoundaries::new(values)?;
        }
        self.substitute.validate()
    }

    pub fn active_cells(&self) -> &[CellId] {
        if self.enabled {
            &self.malicious_cells
        } else {
            &[]
        }
    }
}

#[derive(Debug, Clone, Default)]
struct CellAttacker {
    true_history: Vec<CellKpiReport>,
    reported_history: Vec<CellKpiReport>,
    /// QoE delivered to the cell's own UEs while observing honestly.
    served_qoe: Vec<f64>,
    substitute: Option<SubstituteModel>,
    /// Set when no substitute reached the agreement floor; the cell then stays honest.
    abstain: bool,
    pool: Vec<[f64; ATTACK_DIM]>,
}

/// Result of passing one batch through the attacker.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackStep {
    pub batch: KpiReportBatch,
    pub crafted: Vec<AdversarialReport>,
    pub incidents: Vec<InjectionIncident>,
}

/// The rogue cells' side of a run: observe honestly until `start_iteration`,
/// fit a substitute per cell, then lie one QoE category upward every iteration.
#[derive(Debug, Clone)]
pub struct Attacker {
    config: AttackConfig,
    qp: QpConfig,
    budget: AttackBudget,
    seed: u64,
    cells: BTreeMap<CellId, CellAttacker>,
}

impl Attacker {
    pub fn new(config: AttackConfig, qp: QpConfig, mut budget: AttackBudget, seed: u64) -> Result<Self> {
        config.validate()?;
        budget.max_l2 = config.max_l2;
        budget.query_budget = config.query_budget;
        budget.validate()?;
        let cells = config.active_cells().iter().map(|&c| (c, CellAttacker::default())).collect();
        Ok(Self { config, qp, budget, seed, cells })
    }

    pub fn config(&self) -> &AttackConfig {
        &self.config
    }

    pub fn substitute(&self, cell: CellId) -> Option<&SubstituteModel> {
        self.cells.get(&cell).and_then(|c| c.substitute.as_ref())
    }

    pub fn process(&mut self, batch: &KpiReportBatch) -> Result<AttackStep> {
        let t = batch.iteration;
        let mut crafted = BTreeMap::new();
        for (&cell, state) in self.cells.iter_mut() {
            let report = batch.cell(cell).ok_or(Error::UnknownCell(cell))?;
            state.true_history.push(report.clone());
            if t < self.config.start_iteration || state.abstain {
                state.served_qoe.extend(batch.ues.iter().filter(|u| u.serving_cell == cell).map(|u| u.pdcp_thp_dl));
                state.reported_history.push(report.clone());
                continue;
            }
            if state.substitute.is_none() {
                let history = match self.config.oracle_mode {
                    OracleMode::SubstituteOnly => &state.true_history[..state.true_history.len() - 1],
                    OracleMode::ExactOracle => &state.reported_history[..],
                };
                let first = crate::ric::VarModel::min_observations(self.qp.order, 2);
                let n = history.len().saturating_sub(first - 1);
                let data = collect_substitute_data(history, &self.qp, n)?;
                let seed = self.seed ^ (u64::from(cell.0) << 32);
                let synthetic =
                    augment_substitute_data(history, &self.qp, n, self.config.substitute.augmentation, seed)?;
                let boundaries = match self.config.boundaries {
                    BoundarySource::ServedUeQoe if state.served_qoe.len() >= 4 => {
                        Some(CategoryBoundaries::from_quartiles(&state.served_qoe)?)
                    }
                    BoundarySource::ServedUeQoe | BoundarySource::SubstituteLabels => None,
                    BoundarySource::Fixed { values } => Some(CategoryBoundaries::new(values)?),
                };
                let model = match train_substitute_with(&data, &synthetic, boundaries, &self.config.substitute, seed) {
                    Ok(m) => m,
                    Err(e @ Error::SubstituteAgreement { .. }) => {
                        log::warn!("{cell}: {e}; reporting honestly");
                        state.abstain = true;
                        state.reported_history.push(report.clone());
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                log::info!(
                    "{cell}: substitute agreement {:.3} on {} + {} samples, boundaries {:?}",
                    model.agreement,
                    data.len(),
                    synthetic.len(),
                    model.boundaries.values()
                );
                state.pool = data.iter().chain(&synthetic).map(|s| s.features).collect();
                state.substitute = Some(model);
            }
            let model = state.substitute.as_ref().expect("fitted above");
            let current = model.category(&cell_features(report));
            let Some(target) = current.next() else {
                state.reported_history.push(report.clone());
                continue;
            };
            let seed = self.seed ^ ((t << 16) | u64::from(cell.0)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let adv = match craft_adversarial(model, report, target, &self.budget, &self.config.hsj, &state.pool, seed) {
                Ok(adv) => adv,
                Err(Error::NoInitSample) => {
                    log::warn!("{cell}@{t}: no {target} sample to start from");
                    AdversarialReport {
                        original: report.clone(),
                        perturbed: report.clone(),
                        delta: alloc::vec![0.0; ATTACK_DIM],
                        delta_l2: 0.0,
                        original_category: current,
                        target,
                        achieved_category: current,
                        query_count: 0,
                        distance_history: Vec::new(),
                        success: false,
                    }
                }
                Err(e) => return Err(e),
            };
            crafted.insert(cell, adv);
        }
        let malicious: Vec<CellId> = self.cells.keys().copied().collect();
        let (out, incidents) = inject(batch, &malicious, &crafted);
        for (&cell, state) in self.cells.iter_mut() {
            if t >= self.config.start_iteration && crafted.contains_key(&cell) {
                if let Some(r) = out.cell(cell) {
                    state.reported_history.push(r.clone());
                }
            }
        }
        Ok(AttackStep { batch: out, crafted: crafted.into_values().collect(), incidents })
    }
}

#[cfg(test)]
mod tests;
