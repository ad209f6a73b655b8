use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{glorot, matvec_add, matvec_backward};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => math::tanh(x),
            Activation::Sigmoid => math::sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Relu => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Identity,
            1 => Activation::Tanh,
            2 => Activation::Sigmoid,
            3 => Activation::Relu,
            _ => return None,
        })
    }
}

/// Fully connected layer, `y = act(W x + b)` with `W` stored `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    pub output: Vec<f64>,
}

impl DenseLayer {
    pub fn new<R: rand::Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        Self {
            inputs,
            outputs,
            weights: glorot(rng, inputs, outputs, inputs * outputs),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs], activation }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.clone();
        matvec_add(&self.weights, x, &mut y);
        for v in &mut y {
            *v = self.activation.apply(*v);
        }
        y
    }

    pub fn forward(&self, x: &[f64]) -> DenseCache {
        let mut pre = self.bias.clone();
        matvec_add(&self.weights, x, &mut pre);
        let output = pre.iter().map(|&z| self.activation.apply(z)).collect();
        DenseCache { input: x.to_vec(), pre, output }
    }

    /// Accumulates weight/bias gradients and returns d(loss)/d(input).
    pub fn backward(&self, cache: &DenseCache, dout: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
        let dz: Vec<f64> = dout
            .iter()
            .zip(cache.pre.iter().zip(&cache.output))
            .map(|(&g, (&z, &y))| g * self.activation.derivative(z, y))
            .collect();
        for (b, g) in db.iter_mut().zip(&dz) {
            *b += g;
        }
        let mut dx = vec![0.0; self.inputs];
        matvec_backward(&self.weights, &cache.input, &dz, dw, &mut dx);
        dx
    }
}
