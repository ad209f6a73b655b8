use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const RIDGE_LAMBDA: f64 = 1e-6;
const CONDITION_FLOOR: f64 = 1e-12;

/// `y_t = c + A_1 y_{t-1} + ... + A_p y_{t-p} + e_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub order: usize,
    pub dim: usize,
    pub intercept: Vec<f64>,
    /// `order` matrices, each `dim x dim` row-major.
    pub coefficients: Vec<Vec<f64>>,
    pub residual_variance: Vec<f64>,
    /// Whether the regression was singular and fell back to ridge.
    pub ridge: bool,
}

impl VarModel {
    pub fn min_observations(order: usize, dim: usize) -> usize {
        order * dim + order + 1
    }

    /// Ordinary least squares on mean-centred, column-scaled regressors. A
    /// rank-deficient design is solved with a small ridge penalty instead.
    pub fn fit(series: &[Vec<f64>], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("VAR order must be positive".into()));
        }
        let dim = series.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::EmptyData("VAR series"));
        }
        if let Some(bad) = series.iter().find(|r| r.len() != dim) {
            return Err(Error::LengthMismatch { expected: dim, got: bad.len() });
        }
        let needed = Self::min_observations(order, dim);
        if series.len() < needed {
            return Err(Error::InsufficientHistory { needed, have: series.len() });
        }

        let n = series.len() - order;
        let cols = order * dim;
        let mut x = DMatrix::<f64>::zeros(n, cols);
        let mut y = DMatrix::<f64>::zeros(n, dim);
        for r in 0..n {
            let t = r + order;
            for k in 0..dim {
                y[(r, k)] = series[t][k];
            }
            for lag in 1..=order {
                for k in 0..dim {
                    x[(r, (lag - 1) * dim + k)] = series[t - lag][k];
                }
            }
        }
        let x_mean: Vec<f64> = (0..cols).map(|j| x.column(j).mean()).collect();
        let y_mean: Vec<f64> = (0..dim).map(|k| y.column(k).mean()).collect();
        let mut scale = vec![1.0; cols];
        for j in 0..cols {
            let mut col = x.column_mut(j);
            col.add_scalar_mut(-x_mean[j]);
            let s = col.norm() / libm::sqrt(n as f64);
            if s > 0.0 {
                col /= s;
                scale[j] = s;
            }
        }
        for k in 0..dim {
            y.column_mut(k).add_scalar_mut(-y_mean[k]);
        }

        let gram = x.transpose() * &x;
        let eig = SymmetricEigen::new(gram.clone());
        let max_eig = eig.eigenvalues.max();
        let min_eig = eig.eigenvalues.min();
        let singular = !(max_eig > 0.0) || min_eig <= CONDITION_FLOOR * max_eig;
        let mut lhs = gram;
        if singular {
            log::debug!("singular VAR regression ({n} x {cols}); using ridge fallback");
            for j in 0..cols {
                lhs[(j, j)] += RIDGE_LAMBDA;
            }
        }
        let rhs = x.transpose() * &y;
        let beta = lhs
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::Shape(format!("VAR normal equations not positive definite ({n} x {cols})")))?;

        // beta is (order*dim) x dim in scaled units; A_lag[k][m] = beta[(lag*dim + m, k)] / scale
        let mut coefficients = vec![vec![0.0; dim * dim]; order];
        for (lag, a) in coefficients.iter_mut().enumerate() {
            for k in 0..dim {
                for m in 0..dim {
                    let j = lag * dim + m;
                    a[k * dim + m] = beta[(j, k)] / scale[j];
                }
            }
        }
        let intercept: Vec<f64> = (0..dim)
            .map(|k| {
                y_mean[k]
                    - (0..order)
                        .map(|lag| (0..dim).map(|m| coefficients[lag][k * dim + m] * x_mean[lag * dim + m]).sum::<f64>())
                        .sum::<f64>()
            })
            .collect();

        let mut model = VarModel { order, dim, intercept, coefficients, residual_variance: vec![0.0; dim], ridge: singular };
        let mut rss = vec![0.0; dim];
        for t in order..series.len() {
            let pred = model.step(&series[t - order..t]);
            for k in 0..dim {
                let e = series[t][k] - pred[k];
                rss[k] += e * e;
            }
        }
        model.residual_variance = rss.iter().map(|r| r / n as f64).collect();
        Ok(model)
    }

    /// One-step prediction from the last `order` observations (oldest first).
    fn step(&self, recent: &[Vec<f64>]) -> Vec<f64> {
        let d = self.dim;
        let mut out = self.intercept.clone();
        for lag in 1..=self.order {
            let y = &recent[recent.len() - lag];
            let a = &self.coefficients[lag - 1];
            for k in 0..d {
                out[k] += (0..d).map(|m| a[k * d + m] * y[m]).sum::<f64>();
            }
        }
        out
    }

    /// Iterated `horizon`-step forecast; `horizon = 0` returns the last observation.
    pub fn forecast(&self, recent: &[Vec<f64>], horizon: usize) -> Result<Vec<f64>> {
        if recent.len() < self.order || recent.is_empty() {
            return Err(Error::InsufficientHistory { needed: self.order.max(1), have: recent.len() });
        }
        if let Some(bad) = recent.iter().find(|r| r.len() != self.dim) {
            return Err(Error::LengthMismatch { expected: self.dim, got: bad.len() });
        }
        let mut window: Vec<Vec<f64>> = recent[recent.len() - self.order..].to_vec();
        if horizon == 0 {
            return Ok(recent[recent.len() - 1].clone());
        }
        let mut next = Vec::new();
        for _ in 0..horizon {
            next = self.step(&window);
            window.remove(0);
            window.push(next.clone());
        }
        Ok(next)
    }
}
