//! Two-stage LSTM-autoencoder validation of cell telemetry.
//!
//! Stage one learns each cell's own KPI windows. Stage two reconstructs a
//! cell's window from its stage-one latent code next to the mean code of the
//! rest of the network, so a report that is plausible in isolation but
//! inconsistent with its neighbours still reconstructs poorly.

mod benchmarks;
mod bundle;
mod config;
mod features;
mod model;
mod threshold;

pub use benchmarks::{BenchmarkDetector, BenchmarkKind};
pub use bundle::config_fingerprint;
pub use config::DetectionConfig;
pub use features::{
    extract_features, feature_schema, raw_features, FeatureExtractor, FeatureScaler, FeatureWindow, FEATURE_DIM,
    FEATURE_NAMES,
};
pub use model::{
    ae1_config, ae1_plus_config, ae1_plus_input, ae2_config, aligned_starts, build_x2, build_x2_series, embed,
    fit_extractors, train_ae1, train_ae2, Ae1PlusModel, CellWindows, MarrsPipeline, TrainingSummary, Verdict,
    VerdictLabel, WindowScore,
};
pub use threshold::{
    calibrate_max_f1, calibrate_quantile, calibrate_threshold, classify_loss, classify_sequence, SequenceRule,
    Threshold, ThresholdPolicy,
};
