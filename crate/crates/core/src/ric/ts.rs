use serde::{Deserialize, Serialize};

use super::QoeForecast;
use crate::netsim::{HandoverRequest, UeId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct A1Policy {
    pub handover_margin: f64,
    pub min_history: usize,
}

impl Default for A1Policy {
    fn default() -> Self {
        Self { handover_margin: 0.0, min_history: 20 }
    }
}

impl A1Policy {
    pub fn validate(&self) -> Result<()> {
        if !(self.handover_margin >= 0.0) {
            return Err(Error::Config("handover margin must be >= 0".into()));
        }
        Ok(())
    }
}

/// Hand over to the best neighbor iff it beats the serving forecast by more
/// than the margin. Equal neighbor values resolve to the lowest cell id.
pub fn ts_decide(
    ue: UeId,
    serving: &QoeForecast,
    neighbors: &[QoeForecast],
    policy: &A1Policy,
    issued_at: u64,
) -> Option<HandoverRequest> {
    let best = neighbors
        .iter()
        .filter(|n| n.candidate_cell != serving.candidate_cell && n.value.is_finite())
        .fold(None::<&QoeForecast>, |best, n| match best {
            Some(b) if b.value > n.value || (b.value == n.value && b.candidate_cell < n.candidate_cell) => Some(b),
            _ => Some(n),
        })?;
    (best.value > serving.value + policy.handover_margin).then_some(HandoverRequest {
        ue_id: ue,
        target_cell: best.candidate_cell,
        issued_at,
    })
}
