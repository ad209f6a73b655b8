use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, Example, Grads, Parameterized, Trainable};
use crate::math;

/// Stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    /// `sizes = [in, h1, ..., out]`; hidden layers use `hidden`, the last layer is linear.
    pub fn new<R: rand::Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Self {
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { Activation::Identity } else { hidden };
                DenseLayer::new(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in &self.layers {
            a = l.apply(&a);
        }
        a
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl Trainable for Mlp {
    fn loss(&self, ex: &Example) -> f64 {
        math::mse(&self.predict(&ex.input), &ex.target)
    }

    fn loss_and_grad(&self, ex: &Example, grads: &mut Grads) -> f64 {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut a = ex.input.clone();
        for l in &self.layers {
            let c = l.forward(&a);
            a = c.output.clone();
            caches.push(c);
        }
        let n = a.len() as f64;
        let loss = math::mse(&a, &ex.target);
        let mut d: Vec<f64> = a.iter().zip(&ex.target).map(|(y, t)| 2.0 * (y - t) / n).collect();
        for (li, l) in self.layers.iter().enumerate().rev() {
            let (gw, rest) = grads[2 * li..].split_at_mut(1);
            d = l.backward(&caches[li], &d, &mut gw[0], &mut rest[0]);
        }
        loss
    }
}
