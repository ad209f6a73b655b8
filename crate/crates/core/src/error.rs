use alloc::string::String;
use alloc::vec::Vec;

use crate::netsim::{CellId, UeId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown UE {0}")]
    UnknownUe(UeId),

    #[error("unknown cell {0}")]
    UnknownCell(CellId),

    #[error("batch for iteration {got} rejected: store already holds iteration {last}")]
    OutOfOrder { last: u64, got: u64 },

    #[error("malformed batch: {0}")]
    MalformedBatch(String),

    #[error("iteration {0} not present in the KPI store")]
    MissingIteration(u64),

    #[error("insufficient history: need {needed} observations, have {have}")]
    InsufficientHistory { needed: usize, have: usize },

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite gradient in {0}; training aborted")]
    NonFiniteGradient(String),

    #[error("training diverged at epoch {epoch} (loss {loss:e})")]
    Diverged { epoch: usize, loss: f64, history: Vec<f64> },

    #[error("substitute agreement {best:.3} below required {required:.3} after {attempts} attempts")]
    SubstituteAgreement { best: f64, required: f64, attempts: usize },

    #[error("no sample of the target category available to initialise the attack")]
    NoInitSample,

    #[error("single-class labels: threshold calibration by max-F1 needs both classes")]
    SingleClass,

    #[error("feature statistics already fitted; refusing to refit on inference data")]
    StatisticsLeak,

    #[error("no model for cell {0}")]
    Unmodeled(CellId),

    #[error("container: {0}")]
    Container(String),

    #[error("feature schema mismatch: bundle has {found:?}")]
    SchemaMismatch { found: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("mismatched topologies: {0}")]
    TopologyMismatch(String),
}
