use std::fs;
use std::path::Path;

use ransteer_core::harness::{RunMode, ScenarioConfig};

use crate::{Error, Result};

/// Reads and validates a JSON scenario file. Missing blocks take their
/// defaults; unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let config: ScenarioConfig =
        serde_json::from_str(&text).map_err(|source| Error::Config { path: path.to_path_buf(), source })?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub mode: Option<RunMode>,
}

impl Overrides {
    pub fn apply(&self, mut config: ScenarioConfig) -> Result<ScenarioConfig> {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(n) = self.iterations {
            config.iterations = n;
        }
        if let Some(m) = self.mode {
            config.mode = m;
        }
        config.validate()?;
        Ok(config)
    }
}
