use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, Example, Grads, LstmLayer, Parameterized, Trainable};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seq2SeqConfig {
    pub input_dim: usize,
    /// Number of input time steps the encoder consumes.
    pub input_steps: usize,
    pub output_dim: usize,
    /// Number of decoded time steps.
    pub window_len: usize,
    pub latent_dim: usize,
    pub hidden_size: usize,
}

/// LSTM encoder -> latent -> LSTM decoder (latent repeated at every step) -> dense head.
///
/// The latent code is the encoder's final hidden state, so the encoder's hidden
/// size is `latent_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq2SeqAutoencoder {
    pub config: Seq2SeqConfig,
    pub encoder: LstmLayer,
    pub decoder: LstmLayer,
    pub head: DenseLayer,
}

impl Seq2SeqAutoencoder {
    pub fn new<R: rand::Rng + ?Sized>(config: Seq2SeqConfig, rng: &mut R) -> Self {
        Self {
            config,
            encoder: LstmLayer::new(config.input_dim, config.latent_dim, rng),
            decoder: LstmLayer::new(config.latent_dim, config.hidden_size, rng),
            head: DenseLayer::new(config.hidden_size, config.output_dim, Activation::Identity, rng),
        }
    }

    pub fn zeros(config: Seq2SeqConfig) -> Self {
        Self {
            config,
            encoder: LstmLayer::zeros(config.input_dim, config.latent_dim),
            decoder: LstmLayer::zeros(config.latent_dim, config.hidden_size),
            head: DenseLayer::zeros(config.hidden_size, config.output_dim, Activation::Identity),
        }
    }

    fn check_input(&self, seq: &[f64]) -> Result<()> {
        let want = self.config.input_steps * self.config.input_dim;
        if seq.len() != want {
            return Err(Error::Shape(format!(
                "expected {} x {} input, got {} values",
                self.config.input_steps,
                self.config.input_dim,
                seq.len()
            )));
        }
        Ok(())
    }

    /// Encoder's final hidden state.
    pub fn encode(&self, seq: &[f64]) -> Result<Vec<f64>> {
        self.check_input(seq)?;
        let trace = self.encoder.forward(seq.chunks(self.config.input_dim));
        Ok(trace.last_hidden().to_vec())
    }

    /// Decodes a latent code into `window_len x output_dim` values.
    pub fn decode(&self, latent: &[f64]) -> Vec<f64> {
        let trace = self.decoder.forward(core::iter::repeat_n(latent, self.config.window_len));
        trace.hidden.iter().flat_map(|h| self.head.apply(h)).collect()
    }

    /// Returns `(reconstruction, latent)`.
    pub fn forward(&self, seq: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let latent = self.encode(seq)?;
        Ok((self.decode(&latent), latent))
    }

    /// Mean squared reconstruction error against `target`.
    pub fn reconstruction_loss(&self, seq: &[f64], target: &[f64]) -> Result<f64> {
        let (out, _) = self.forward(seq)?;
        if out.len() != target.len() {
            return Err(Error::Shape(format!("target has {} values, model emits {}", target.len(), out.len())));
        }
        Ok(math::mse(&out, target))
    }

    /// Gradients of `MSE(forward(seq), target)`; accumulated into `grads`.
    pub fn backward(&self, seq: &[f64], target: &[f64], grads: &mut Grads) -> Result<f64> {
        self.check_input(seq)?;
        let cfg = &self.config;
        if target.len() != cfg.window_len * cfg.output_dim {
            return Err(Error::Shape(format!("target has {} values", target.len())));
        }
        let enc = self.encoder.forward(seq.chunks(cfg.input_dim));
        let latent = enc.last_hidden().to_vec();
        let dec = self.decoder.forward(core::iter::repeat_n(latent.as_slice(), cfg.window_len));
        let heads: Vec<_> = dec.hidden.iter().map(|h| self.head.forward(h)).collect();

        let n = target.len() as f64;
        let mut loss = 0.0;
        let mut d_dec = Vec::with_capacity(cfg.window_len);
        {
            let (g_head, _) = grads.split_at_mut(6);
            let (gw, gb) = g_head[4..6].split_at_mut(1);
            for (t, hc) in heads.iter().enumerate() {
                let tgt = &target[t * cfg.output_dim..(t + 1) * cfg.output_dim];
                let mut dout = Vec::with_capacity(cfg.output_dim);
                for (y, v) in hc.output.iter().zip(tgt) {
                    let e = y - v;
                    loss += e * e;
                    dout.push(2.0 * e / n);
                }
                d_dec.push(self.head.backward(hc, &dout, &mut gw[0], &mut gb[0]));
            }
        }
        let d_latent_steps = {
            let (gw, gb) = grads[2..4].split_at_mut(1);
            self.decoder.backward(&dec, &d_dec, &mut gw[0], &mut gb[0])
        };
        let mut d_latent = vec![0.0; cfg.latent_dim];
        for d in &d_latent_steps {
            for (a, b) in d_latent.iter_mut().zip(d) {
                *a += b;
            }
        }
        let steps = cfg.input_steps;
        let mut d_enc = vec![vec![0.0; cfg.latent_dim]; steps];
        d_enc[steps - 1] = d_latent;
        let (gw, gb) = grads[0..2].split_at_mut(1);
        self.encoder.backward(&enc, &d_enc, &mut gw[0], &mut gb[0]);
        Ok(loss / n)
    }
}

impl Parameterized for Seq2SeqAutoencoder {
    fn params(&self) -> Vec<&[f64]> {
        vec![
            &self.encoder.weights,
            &self.encoder.bias,
            &self.decoder.weights,
            &self.decoder.bias,
            &self.head.weights,
            &self.head.bias,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.encoder.weights,
            &mut self.encoder.bias,
            &mut self.decoder.weights,
            &mut self.decoder.bias,
            &mut self.head.weights,
            &mut self.head.bias,
        ]
    }
}

impl Trainable for Seq2SeqAutoencoder {
    fn loss(&self, ex: &Example) -> f64 {
        self.reconstruction_loss(&ex.input, &ex.target).unwrap_or(f64::NAN)
    }

    fn loss_and_grad(&self, ex: &Example, grads: &mut Grads) -> f64 {
        self.backward(&ex.input, &ex.target, grads).unwrap_or(f64::NAN)
    }
}
