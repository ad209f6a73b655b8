//! Classical anomaly detectors: isolation forest (also used by the AD xApp),
//! one-class SVM and a linear autoencoder.

mod iforest;
mod linear_ae;
mod ocsvm;

pub use iforest::{average_path_length, IsolationForestConfig, IsolationForestModel, IsolationTree};
pub use linear_ae::{LinearAeConfig, LinearAutoencoder};
pub use ocsvm::{OcsvmConfig, OneClassSvmModel};

use crate::{Error, Result};
use alloc::vec::Vec;

pub(crate) fn check_matrix(data: &[Vec<f64>]) -> Result<usize> {
    let first = data.first().ok_or(Error::EmptyData("training matrix"))?;
    let d = first.len();
    if d == 0 {
        return Err(Error::EmptyData("feature vector"));
    }
    for row in data {
        if row.len() != d {
            return Err(Error::LengthMismatch { expected: d, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite feature".into()));
        }
    }
    Ok(d)
}
