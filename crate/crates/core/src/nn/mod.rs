//! Minimal neural-network substrate: dense and LSTM layers, a sequence-to-
//! sequence autoencoder, Adam, MSE training and finite-difference checks.
//!
//! Every model exposes its parameters as a fixed-order list of flat tensors
//! ([`Parameterized`]); gradients use the same layout ([`Grads`]), which is
//! all the optimizer and the gradient checker need to know.

mod adam;
mod dense;
mod gradcheck;
mod lstm;
mod mlp;
mod seq2seq;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dense::{Activation, DenseCache, DenseLayer};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use lstm::{LstmLayer, LstmTrace};
pub use mlp::Mlp;
pub use seq2seq::{Seq2SeqAutoencoder, Seq2SeqConfig};
pub use train::{train, TrainConfig, TrainReport};

use alloc::vec::Vec;

/// Gradient tensors, aligned with [`Parameterized::params`].
pub type Grads = Vec<Vec<f64>>;

pub trait Parameterized {
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn zero_grads(&self) -> Grads {
        self.params().iter().map(|p| alloc::vec![0.0; p.len()]).collect()
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// An input/target pair; both flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Example {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Self {
        Self { input, target }
    }

    /// Reconstruction example: target equals input.
    pub fn autoencode(input: Vec<f64>) -> Self {
        Self { target: input.clone(), input }
    }
}

/// A model trained on mean squared error.
pub trait Trainable: Parameterized {
    fn loss(&self, ex: &Example) -> f64;
    /// Adds d(loss)/d(params) into `grads` and returns the loss.
    fn loss_and_grad(&self, ex: &Example, grads: &mut Grads) -> f64;
}

pub(crate) fn glorot<R: rand::Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let limit = crate::math::sqrt(6.0 / (fan_in + fan_out) as f64);
    (0..n).map(|_| rng.random_range(-limit..=limit)).collect()
}

/// `y += W x` for a row-major `rows x cols` matrix.
#[inline]
pub(crate) fn matvec_add(w: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yr += acc;
    }
}

/// `dx += W^T dy` and `dW += dy x^T`.
#[inline]
pub(crate) fn matvec_backward(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], dx: &mut [f64]) {
    let cols = x.len();
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        let drow = &mut dw[r * cols..(r + 1) * cols];
        for c in 0..cols {
            drow[c] += g * x[c];
            dx[c] += g * row[c];
        }
    }
}
