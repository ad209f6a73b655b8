use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::check_matrix;
use crate::container::{Container, ContainerCodec};
use crate::math;
use crate::nn::{self, Activation, Example, Mlp, TrainConfig, TrainReport};
use crate::rng::{self, Stream};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearAeConfig {
    pub latent_dim: usize,
    pub train: TrainConfig,
}

impl Default for LinearAeConfig {
    fn default() -> Self {
        Self { latent_dim: 4, train: TrainConfig { epochs: 200, batch_size: 32, lr: 1e-2, ..TrainConfig::default() } }
    }
}

/// Linear encoder `z = W_e x + b_e`, linear decoder `x' = W_d z + b_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAutoencoder {
    pub net: Mlp,
    pub latent_dim: usize,
}

impl LinearAutoencoder {
    pub fn fit(data: &[Vec<f64>], config: &LinearAeConfig) -> Result<(Self, TrainReport)> {
        let d = check_matrix(data)?;
        let mut r = rng::substream(config.train.seed, Stream::Training, 0x1ae);
        let mut net = Mlp::new(&[d, config.latent_dim, d], Activation::Identity, &mut r);
        let examples: Vec<Example> = data.iter().map(|x| Example::autoencode(x.clone())).collect();
        let report = nn::train(&mut net, &examples, &config.train)?;
        Ok((Self { net, latent_dim: config.latent_dim }, report))
    }

    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        self.net.predict(x)
    }

    /// Reconstruction MSE.
    pub fn loss(&self, x: &[f64]) -> f64 {
        math::mse(&self.reconstruct(x), x)
    }
}

impl ContainerCodec for LinearAutoencoder {
    fn write(&self, prefix: &str, c: &mut Container) {
        self.net.write(prefix, c);
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let net = Mlp::read(prefix, c)?;
        let latent_dim = net.layers.first().map_or(0, |l| l.outputs);
        Ok(Self { net, latent_dim })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gaussian(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, Stream::Training);
        (0..n).map(|_| (0..d).map(|_| rng::normal(&mut r, 1.0)).collect()).collect()
    }

    #[test]
    fn full_width_latent_reconstructs() {
        let data = gaussian(200, 4, 1);
        let cfg = LinearAeConfig { latent_dim: 4, train: TrainConfig { epochs: 300, lr: 1e-2, ..Default::default() } };
        let (m, rep) = LinearAutoencoder::fit(&data, &cfg).unwrap();
        let mean: f64 = data.iter().map(|x| m.loss(x)).sum::<f64>() / data.len() as f64;
        assert!(mean < 1e-3, "{mean}");
        assert!(rep.final_loss().unwrap() < rep.loss_history[0]);
    }

    #[test]
    fn rank_one_data_with_one_latent_unit() {
        // x = s * u for a fixed direction u
        let u = [0.6, -0.8, 0.0, 0.5];
        let mut r = rng::stream(2, Stream::Training);
        let data: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let s = rng::normal(&mut r, 1.0);
                u.iter().map(|v| v * s).collect()
            })
            .collect();
        let cfg = LinearAeConfig { latent_dim: 1, train: TrainConfig { epochs: 300, lr: 1e-2, ..Default::default() } };
        let (m, _) = LinearAutoencoder::fit(&data, &cfg).unwrap();
        let mean: f64 = data.iter().map(|x| m.loss(x)).sum::<f64>() / data.len() as f64;
        assert!(mean < 1e-4, "{mean}");

        // an orthogonal point: the best rank-1 reconstruction leaves its whole norm as residual
        let off = vec![0.8, 0.6, 0.0, 0.0];
        let mut train_losses: Vec<f64> = data.iter().map(|x| m.loss(x)).collect();
        train_losses.sort_by(f64::total_cmp);
        let median = train_losses[train_losses.len() / 2];
        let expected_residual = off.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(m.loss(&off) > 100.0 * median);
        assert!((m.loss(&off) - expected_residual).abs() < 0.05 * expected_residual);
    }

    #[test]
    fn deterministic() {
        let data = gaussian(50, 3, 3);
        let cfg = LinearAeConfig { latent_dim: 2, train: TrainConfig { epochs: 5, ..Default::default() } };
        assert_eq!(LinearAutoencoder::fit(&data, &cfg).unwrap(), LinearAutoencoder::fit(&data, &cfg).unwrap());
    }
}
