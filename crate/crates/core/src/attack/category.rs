use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QoeCategory {
    Poor,
    Average,
    Good,
    Excellent,
}

impl QoeCategory {
    pub const ALL: [QoeCategory; 4] = [Self::Poor, Self::Average, Self::Good, Self::Excellent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Self> {
        Self::ALL.get(self.index() + 1).copied()
    }
}

impl fmt::Display for QoeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Poor => "poor",
            Self::Average => "average",
            Self::Good => "good",
            Self::Excellent => "excellent",
        };
        f.write_str(s)
    }
}

/// Three strictly increasing cut points `b1 < b2 < b3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryBoundaries([f64; 3]);

impl CategoryBoundaries {
    pub fn new(b: [f64; 3]) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) || !(b[0] < b[1] && b[1] < b[2]) {
            return Err(Error::Config("category boundaries must be finite and strictly increasing".into()));
        }
        Ok(Self(b))
    }

    /// Quartiles of `values`; coincident quartiles are pushed apart by a relative epsilon.
    pub fn from_quartiles(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData("QoE values for category boundaries"));
        }
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut b = [0.25, 0.5, 0.75].map(|q| math::quantile_sorted(&sorted, q));
        for i in 1..3 {
            let eps = 1e-9 * b[i - 1].abs().max(1.0);
            if b[i] <= b[i - 1] {
                b[i] = b[i - 1] + eps;
            }
        }
        Self::new(b)
    }

    pub fn values(&self) -> [f64; 3] {
        self.0
    }

    /// Half-open bins `(-inf, b1)`, `[b1, b2)`, `[b2, b3)`, `[b3, inf)`.
    pub fn categorize(&self, qoe: f64) -> QoeCategory {
        let idx = self.0.iter().take_while(|&&b| qoe >= b).count();
        QoeCategory::ALL[idx]
    }
}

pub fn categorize(qoe: f64, boundaries: &CategoryBoundaries) -> QoeCategory {
    boundaries.categorize(qoe)
}
