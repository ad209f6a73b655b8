use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{feature_schema, DetectionConfig, FeatureScaler, MarrsPipeline, Threshold, ThresholdPolicy, FEATURE_DIM};
use crate::container::{scalars, Container, ContainerCodec};
use crate::netsim::CellId;
use crate::nn::Seq2SeqAutoencoder;
use crate::{Error, Result};

/// CRC-32 of the detector configuration's debug rendering.
pub fn config_fingerprint(cfg: &DetectionConfig) -> String {
    format!("{:08x}", crc32fast::hash(format!("{cfg:?}").as_bytes()))
}

fn parse<T: core::str::FromStr>(c: &Container, key: &str) -> Result<T> {
    c.meta(key)?.parse().map_err(|_| Error::Container(format!("metadata {key:?} is not a number")))
}

impl MarrsPipeline {
    /// Models, statistics, threshold and configuration summary in one container.
    pub fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.set_meta("kind", "marrs");
        c.set_meta("schema", feature_schema());
        c.set_meta("config_fingerprint", config_fingerprint(&self.config));
        c.set_meta("window_len", self.config.window_len.to_string());
        c.set_meta("latent_dim", self.config.latent_dim.to_string());
        c.set_meta("hidden_size", self.config.hidden_size.to_string());
        let cells: Vec<String> = self.ae1.keys().map(|c| c.0.to_string()).collect();
        c.set_meta("cells", cells.join(","));
        if let Some(t) = self.threshold {
            c.set_meta("threshold", format!("{:e}", t.value));
            let policy = match t.policy {
                ThresholdPolicy::MaxF1 => "max_f1".to_string(),
                ThresholdPolicy::BenignQuantile { q } => format!("quantile:{q:e}"),
            };
            c.set_meta("threshold_policy", policy);
        }
        for (cell, scaler) in &self.scalers {
            c.push(format!("scaler.{}.mean", cell.0), &[FEATURE_DIM], scaler.mean.to_vec());
            c.push(format!("scaler.{}.std", cell.0), &[FEATURE_DIM], scaler.std.to_vec());
        }
        for (cell, m) in &self.ae1 {
            m.write(&format!("ae1.{}", cell.0), &mut c);
        }
        for (cell, m) in &self.ae2 {
            m.write(&format!("ae2.{}", cell.0), &mut c);
        }
        c
    }

    /// Inverse of [`MarrsPipeline::to_container`]. Training hyperparameters
    /// not needed for inference come back as defaults.
    pub fn from_container(c: &Container) -> Result<Self> {
        let schema = c.meta("schema")?;
        if schema != feature_schema() {
            return Err(Error::SchemaMismatch { found: schema.to_string() });
        }
        if c.meta("kind")? != "marrs" {
            return Err(Error::Container("not a detector bundle".into()));
        }
        let config = DetectionConfig {
            window_len: parse(c, "window_len")?,
            latent_dim: parse(c, "latent_dim")?,
            hidden_size: parse(c, "hidden_size")?,
            ..DetectionConfig::default()
        };
        let cells: Vec<CellId> = match c.meta("cells")? {
            "" => Vec::new(),
            s => s.split(',').map(|v| v.parse().map(CellId).map_err(|_| Error::Container("bad cell list".into()))).collect::<Result<_>>()?,
        };
        let mut scalers = BTreeMap::new();
        let mut ae1 = BTreeMap::new();
        let mut ae2 = BTreeMap::new();
        for &cell in &cells {
            let arr = |name: &str| -> Result<[f64; FEATURE_DIM]> {
                let v = scalars(c, &format!("scaler.{}.{name}", cell.0), FEATURE_DIM)?;
                Ok(core::array::from_fn(|j| v[j]))
            };
            scalers.insert(cell, FeatureScaler { mean: arr("mean")?, std: arr("std")? });
            ae1.insert(cell, Seq2SeqAutoencoder::read(&format!("ae1.{}", cell.0), c)?);
            ae2.insert(cell, Seq2SeqAutoencoder::read(&format!("ae2.{}", cell.0), c)?);
        }
        let threshold = match c.meta("threshold") {
            Ok(v) => {
                let value: f64 = v.parse().map_err(|_| Error::Container("bad threshold".into()))?;
                let policy = match c.meta("threshold_policy")? {
                    "max_f1" => ThresholdPolicy::MaxF1,
                    p => {
                        let q = p
                            .strip_prefix("quantile:")
                            .and_then(|q| q.parse().ok())
                            .ok_or_else(|| Error::Container(format!("unknown threshold policy {p:?}")))?;
                        ThresholdPolicy::BenignQuantile { q }
                    }
                };
                Some(Threshold::new(value, policy)?)
            }
            Err(_) => None,
        };
        let pipeline = Self { config, scalers, ae1, ae2, threshold };
        if c.meta("config_fingerprint").is_err() {
            return Err(Error::Container("missing config fingerprint".into()));
        }
        Ok(pipeline)
    }
}
