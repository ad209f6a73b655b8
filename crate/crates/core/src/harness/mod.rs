//! Scenario orchestration: configuration, the in-process closed loop built
//! from reusable RAN/RIC state machines, wire message types for split mode,
//! run metrics and the benign/SAS/MAS experiment.

mod closed_loop;
mod config;
mod experiment;
mod metrics;
mod wire;

pub use closed_loop::{run_closed_loop, RanEmission, RanSide, RicSide, RunOutput, RunRecorder};
pub use config::{RunMode, ScenarioConfig};
pub use experiment::{
    evaluate_detector, experiment_on, run_experiment, sequence_sweep, train_detector, DetectorEvaluation, DetectorResult,
    EvaluationSplit, ExperimentConfig, ExperimentReport, LabeledScore, PairedRuns, SegmentResult, SequenceResult,
};
pub use metrics::{
    compute_attack_gain, compute_detection_metrics, gain_percent, AttackStats, CellGain, ConfusionCounts,
    CountSummary, DetectionMetrics, RunMetrics,
};
pub use wire::{answer, decision_from_answer, MessageBody, MessageType, WireMessage, SCHEMA_VERSION};

#[cfg(test)]
mod tests;
