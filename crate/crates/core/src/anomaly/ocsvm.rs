use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::check_matrix;
use crate::container::{scalars, Container, ContainerCodec};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcsvmConfig {
    pub nu: f64,
    /// RBF bandwidth; `None` means `1 / (n_features * var(data))`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OcsvmConfig {
    fn default() -> Self {
        Self { nu: 0.1, gamma: None, tolerance: 1e-5, max_iterations: 200_000 }
    }
}

/// One-class SVM with an RBF kernel, `decision(x) = sum_i alpha_i K(x_i, x) - rho`.
/// Negative decisions are outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassSvmModel {
    pub gamma: f64,
    pub nu: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub rho: f64,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    math::exp(-gamma * d2)
}

impl OneClassSvmModel {
    /// Solves the nu-parameterised dual
    /// `min 1/2 a'Qa  s.t. 0 <= a_i <= 1, sum a_i = nu * l`
    /// by SMO over maximal violating pairs.
    pub fn fit(data: &[Vec<f64>], config: &OcsvmConfig) -> Result<Self> {
        let d = check_matrix(data)?;
        if !(config.nu > 0.0 && config.nu <= 1.0) {
            return Err(Error::Config("nu must lie in (0, 1]".into()));
        }
        let l = data.len();
        let gamma = match config.gamma {
            Some(g) if g > 0.0 => g,
            Some(_) => return Err(Error::Config("gamma must be positive".into())),
            None => {
                let all: Vec<f64> = data.iter().flatten().copied().collect();
                let sd = math::std_dev(&all);
                let var = sd * sd;
                if var > 0.0 {
                    1.0 / (d as f64 * var)
                } else {
                    1.0 / d as f64
                }
            }
        };

        let mut q = vec![0.0; l * l];
        for i in 0..l {
            q[i * l + i] = 1.0;
            for j in 0..i {
                let k = rbf(gamma, &data[i], &data[j]);
                q[i * l + j] = k;
                q[j * l + i] = k;
            }
        }

        // feasible start: the first floor(nu*l) multipliers at the bound, one fractional
        let total = config.nu * l as f64;
        let mut alpha = vec![0.0; l];
        let n_full = math::floor(total) as usize;
        for a in alpha.iter_mut().take(n_full.min(l)) {
            *a = 1.0;
        }
        if n_full < l {
            alpha[n_full] = total - n_full as f64;
        }
        let mut grad = vec![0.0; l];
        for (j, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                for i in 0..l {
                    grad[i] += a * q[i * l + j];
                }
            }
        }

        for _ in 0..config.max_iterations {
            // i: can increase, most negative gradient; j: can decrease, largest gradient
            let mut i_best = None;
            let mut j_best = None;
            let (mut gi, mut gj) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 0..l {
                if alpha[t] < 1.0 && grad[t] < gi {
                    gi = grad[t];
                    i_best = Some(t);
                }
                if alpha[t] > 0.0 && grad[t] > gj {
                    gj = grad[t];
                    j_best = Some(t);
                }
            }
            let (Some(i), Some(j)) = (i_best, j_best) else { break };
            if gj - gi < config.tolerance {
                break;
            }
            let curv = (q[i * l + i] + q[j * l + j] - 2.0 * q[i * l + j]).max(1e-12);
            let step = ((gj - gi) / curv).min(1.0 - alpha[i]).min(alpha[j]);
            alpha[i] += step;
            alpha[j] -= step;
            for t in 0..l {
                grad[t] += step * (q[t * l + i] - q[t * l + j]);
            }
        }

        let rho = {
            let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut sum_free, mut n_free) = (0.0, 0usize);
            for t in 0..l {
                if alpha[t] >= 1.0 {
                    lb = lb.max(grad[t]);
                } else if alpha[t] <= 0.0 {
                    ub = ub.min(grad[t]);
                } else {
                    sum_free += grad[t];
                    n_free += 1;
                }
            }
            if n_free > 0 {
                sum_free / n_free as f64
            } else {
                (ub + lb) / 2.0
            }
        };

        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for (t, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(data[t].clone());
                coefficients.push(a);
            }
        }
        Ok(Self { gamma, nu: config.nu, support_vectors, coefficients, rho })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.coefficients).map(|(sv, a)| a * rbf(self.gamma, sv, x)).sum::<f64>()
            - self.rho
    }

    pub fn is_outlier(&self, x: &[f64]) -> bool {
        self.decision(x) < 0.0
    }
}

impl ContainerCodec for OneClassSvmModel {
    fn write(&self, prefix: &str, c: &mut Container) {
        let n = self.support_vectors.len();
        let d = self.support_vectors.first().map_or(0, Vec::len);
        c.push(format!("{prefix}.header"), &[5], vec![self.gamma, self.nu, self.rho, n as f64, d as f64]);
        c.push(format!("{prefix}.support"), &[n, d], self.support_vectors.iter().flatten().copied().collect());
        c.push(format!("{prefix}.coef"), &[n], self.coefficients.clone());
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let h = scalars(c, &format!("{prefix}.header"), 5)?;
        let (n, d) = (h[3] as usize, h[4] as usize);
        let flat = scalars(c, &format!("{prefix}.support"), n * d)?;
        Ok(Self {
            gamma: h[0],
            nu: h[1],
            rho: h[2],
            support_vectors: if d == 0 { Vec::new() } else { flat.chunks(d).map(<[f64]>::to_vec).collect() },
            coefficients: scalars(c, &format!("{prefix}.coef"), n)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};

    fn blob(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, Stream::Training);
        (0..n).map(|_| vec![rng::normal(&mut r, 1.0), rng::normal(&mut r, 1.0), rng::normal(&mut r, 0.5)]).collect()
    }

    #[test]
    fn centroid_is_inside_far_point_outside() {
        let data = blob(400, 1);
        let m = OneClassSvmModel::fit(&data, &OcsvmConfig::default()).unwrap();
        assert!(m.decision(&[0.0, 0.0, 0.0]) >= 0.0);
        assert!(m.decision(&[12.0, -9.0, 4.0]) < 0.0);
    }

    #[test]
    fn nu_bounds_the_training_outlier_fraction() {
        let data = blob(500, 2);
        for nu in [0.05, 0.1, 0.3] {
            let m = OneClassSvmModel::fit(&data, &OcsvmConfig { nu, ..Default::default() }).unwrap();
            let frac = data.iter().filter(|x| m.is_outlier(x)).count() as f64 / data.len() as f64;
            assert!(frac <= nu + 0.02, "nu={nu} frac={frac}");
            let total: f64 = m.coefficients.iter().sum();
            assert!((total - nu * 500.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_and_bad_nu_rejected() {
        assert!(OneClassSvmModel::fit(&[], &OcsvmConfig::default()).is_err());
        assert!(OneClassSvmModel::fit(&blob(10, 1), &OcsvmConfig { nu: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn deterministic_and_round_trips() {
        let data = blob(120, 4);
        let a = OneClassSvmModel::fit(&data, &OcsvmConfig::default()).unwrap();
        assert_eq!(a, OneClassSvmModel::fit(&data, &OcsvmConfig::default()).unwrap());
        let b = OneClassSvmModel::from_container(&Container::decode(&a.to_container().encode()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decision_is_continuous() {
        let m = OneClassSvmModel::fit(&blob(200, 3), &OcsvmConfig::default()).unwrap();
        let x = [0.3, -0.2, 0.1];
        let y = [0.3 + 1e-7, -0.2, 0.1];
        assert!((m.decision(&x) - m.decision(&y)).abs() < 1e-5);
    }
}
