use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::netsim::{HandoverRequest, KpiReportBatch, UeId};
use crate::ric::RicDecision;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageType {
    KpiBatch,
    Handover,
    Ack,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessageBody {
    Batch(KpiReportBatch),
    Handover(HandoverRequest),
    /// Closes a RIC answer; lists the UEs the anomaly detector flagged.
    Ack { anomalous: Vec<UeId> },
    Empty {},
}

/// Envelope exchanged between the RAN and RIC processes. Per iteration the
/// RAN sends one `KPI_BATCH`; the RIC answers with zero or more `HANDOVER`s
/// and a closing `ACK`. `END` terminates the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMessage {
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub iteration: u64,
    pub schema_version: u32,
    pub body: MessageBody,
}

impl WireMessage {
    pub fn batch(batch: KpiReportBatch) -> Self {
        Self { kind: MessageType::KpiBatch, iteration: batch.iteration, schema_version: SCHEMA_VERSION, body: MessageBody::Batch(batch) }
    }

    pub fn handover(req: HandoverRequest) -> Self {
        Self { kind: MessageType::Handover, iteration: req.issued_at, schema_version: SCHEMA_VERSION, body: MessageBody::Handover(req) }
    }

    pub fn ack(iteration: u64, anomalous: Vec<UeId>) -> Self {
        Self { kind: MessageType::Ack, iteration, schema_version: SCHEMA_VERSION, body: MessageBody::Ack { anomalous } }
    }

    pub fn end(iteration: u64) -> Self {
        Self { kind: MessageType::End, iteration, schema_version: SCHEMA_VERSION, body: MessageBody::Empty {} }
    }

    /// Type and body agree.
    pub fn is_well_formed(&self) -> bool {
        matches!(
            (&self.kind, &self.body),
            (MessageType::KpiBatch, MessageBody::Batch(_))
                | (MessageType::Handover, MessageBody::Handover(_))
                | (MessageType::Ack, MessageBody::Ack { .. })
                | (MessageType::End, MessageBody::Empty {})
        )
    }
}

/// All handovers of one RIC answer, followed by its ACK.
pub fn answer(iteration: u64, decision: &RicDecision) -> Vec<WireMessage> {
    let mut out: Vec<WireMessage> = decision.handovers.iter().copied().map(WireMessage::handover).collect();
    out.push(WireMessage::ack(iteration, decision.anomalous.clone()));
    out
}

/// Reassembles the RIC decision from one answer. Fails unless the messages
/// are handovers for `iteration` closed by exactly one ACK.
pub fn decision_from_answer(iteration: u64, messages: &[WireMessage]) -> crate::Result<RicDecision> {
    let protocol = |m: alloc::string::String| crate::Error::Protocol(m);
    let (last, handovers) = messages.split_last().ok_or_else(|| protocol("empty answer".into()))?;
    let MessageBody::Ack { anomalous } = &last.body else {
        return Err(protocol(alloc::format!("answer for {iteration} does not end with an ACK")));
    };
    let mut decision = RicDecision { anomalous: anomalous.clone(), handovers: Vec::new() };
    for m in messages {
        if m.iteration != iteration || !m.is_well_formed() {
            return Err(protocol(alloc::format!("unexpected {:?} for iteration {} while answering {iteration}", m.kind, m.iteration)));
        }
    }
    for m in handovers {
        match &m.body {
            MessageBody::Handover(h) => decision.handovers.push(*h),
            _ => return Err(protocol(alloc::format!("{:?} inside the answer for {iteration}", m.kind))),
        }
    }
    Ok(decision)
}
