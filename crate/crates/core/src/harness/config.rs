use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::attack::AttackConfig;
use crate::marrs::DetectionConfig;
use crate::netsim::TopologyConfig;
use crate::ric::RicConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    InProcess,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub topology: TopologyConfig,
    pub ric: RicConfig,
    pub attack: AttackConfig,
    pub detection: DetectionConfig,
    pub experiment: ExperimentConfig,
    pub iterations: u64,
    pub seed: u64,
    pub mode: RunMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            topology: TopologyConfig::default(),
            ric: RicConfig::default(),
            attack: AttackConfig::default(),
            detection: DetectionConfig::default(),
            experiment: ExperimentConfig::default(),
            iterations: 500,
            seed: 0,
            mode: RunMode::InProcess,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.ric.validate()?;
        self.attack.validate()?;
        self.detection.validate()?;
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        let known = |c: &crate::netsim::CellId| self.topology.cells.iter().any(|s| s.id == *c);
        let e = &self.experiment;
        if let Some(c) = e.sas_attackers.iter().chain(&e.mas_attackers).find(|c| !known(c)) {
            return Err(Error::UnknownCell(*c));
        }
        for c in &self.attack.malicious_cells {
            if !self.topology.cells.iter().any(|s| s.id == *c) {
                return Err(Error::UnknownCell(*c));
            }
        }
        Ok(())
    }

    /// The same scenario with the attack switched off.
    pub fn benign(&self) -> Self {
        let mut c = self.clone();
        c.attack.enabled = false;
        c
    }

    /// The same scenario with `cells` lying.
    pub fn with_attackers(&self, cells: &[crate::netsim::CellId]) -> Self {
        let mut c = self.clone();
        c.attack.enabled = true;
        c.attack.malicious_cells = cells.to_vec();
        c
    }
}
