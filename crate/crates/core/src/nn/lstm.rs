use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{glorot, matvec_add, matvec_backward};
use crate::math;

/// Single LSTM layer. Gates are stacked `[input, forget, cell, output]`;
/// `weights` is `4H x (I + H)` acting on the concatenation `[x_t; h_{t-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
struct StepCache {
    xh: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Forward activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<StepCache>,
    /// Hidden state after every step.
    pub hidden: Vec<Vec<f64>>,
}

impl LstmTrace {
    pub fn last_hidden(&self) -> &[f64] {
        self.hidden.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl LstmLayer {
    pub fn new<R: rand::Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let cols = input_size + hidden_size;
        let weights = glorot(rng, cols, hidden_size, 4 * hidden_size * cols);
        let mut bias = vec![0.0; 4 * hidden_size];
        // forget gate starts open
        for b in &mut bias[hidden_size..2 * hidden_size] {
            *b = 1.0;
        }
        Self { input_size, hidden_size, weights, bias }
    }

    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            weights: vec![0.0; 4 * hidden_size * (input_size + hidden_size)],
            bias: vec![0.0; 4 * hidden_size],
        }
    }

    /// Runs the layer over `inputs` from a zero state.
    pub fn forward<'a, I>(&self, inputs: I) -> LstmTrace
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let h_n = self.hidden_size;
        let mut h = vec![0.0; h_n];
        let mut c = vec![0.0; h_n];
        let mut steps = Vec::new();
        let mut hidden = Vec::new();
        for x in inputs {
            debug_assert_eq!(x.len(), self.input_size);
            let mut xh = Vec::with_capacity(self.input_size + h_n);
            xh.extend_from_slice(x);
            xh.extend_from_slice(&h);
            let mut z = self.bias.clone();
            matvec_add(&self.weights, &xh, &mut z);
            let i: Vec<f64> = z[..h_n].iter().map(|&v| math::sigmoid(v)).collect();
            let f: Vec<f64> = z[h_n..2 * h_n].iter().map(|&v| math::sigmoid(v)).collect();
            let g: Vec<f64> = z[2 * h_n..3 * h_n].iter().map(|&v| math::tanh(v)).collect();
            let o: Vec<f64> = z[3 * h_n..].iter().map(|&v| math::sigmoid(v)).collect();
            let c_prev = c.clone();
            for k in 0..h_n {
                c[k] = f[k] * c_prev[k] + i[k] * g[k];
            }
            let tanh_c: Vec<f64> = c.iter().map(|&v| math::tanh(v)).collect();
            for k in 0..h_n {
                h[k] = o[k] * tanh_c[k];
            }
            hidden.push(h.clone());
            steps.push(StepCache { xh, i, f, g, o, c_prev, tanh_c });
        }
        LstmTrace { steps, hidden }
    }

    /// Backpropagation through time. `d_hidden[t]` is the loss gradient flowing
    /// into `h_t` from outside the layer. Accumulates into `dw`/`db` and returns
    /// the gradient with respect to every input step.
    pub fn backward(&self, trace: &LstmTrace, d_hidden: &[Vec<f64>], dw: &mut [f64], db: &mut [f64]) -> Vec<Vec<f64>> {
        let h_n = self.hidden_size;
        let steps = trace.steps.len();
        let mut dh_next = vec![0.0; h_n];
        let mut dc_next = vec![0.0; h_n];
        let mut dxs = vec![Vec::new(); steps];
        let mut dz = vec![0.0; 4 * h_n];
        for t in (0..steps).rev() {
            let s = &trace.steps[t];
            for k in 0..h_n {
                let dh = d_hidden[t][k] + dh_next[k];
                let dc = dc_next[k] + dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let d_o = dh * s.tanh_c[k];
                let d_i = dc * s.g[k];
                let d_g = dc * s.i[k];
                let d_f = dc * s.c_prev[k];
                dc_next[k] = dc * s.f[k];
                dz[k] = d_i * s.i[k] * (1.0 - s.i[k]);
                dz[h_n + k] = d_f * s.f[k] * (1.0 - s.f[k]);
                dz[2 * h_n + k] = d_g * (1.0 - s.g[k] * s.g[k]);
                dz[3 * h_n + k] = d_o * s.o[k] * (1.0 - s.o[k]);
            }
            for (b, g) in db.iter_mut().zip(&dz) {
                *b += g;
            }
            let mut dxh = vec![0.0; self.input_size + h_n];
            matvec_backward(&self.weights, &s.xh, &dz, dw, &mut dxh);
            dh_next.copy_from_slice(&dxh[self.input_size..]);
            dxh.truncate(self.input_size);
            dxs[t] = dxh;
        }
        dxs
    }
}
