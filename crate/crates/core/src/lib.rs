//! Temporal motif transition modelling for event-stream forecasting.
//!
//! Events are grouped into small, time-bounded motifs. Training counts how
//! motifs grow one event at a time; forecasting replays that process forward
//! and the same statistics yield per-event posterior features.

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod motif;
pub mod predictor;
pub mod scoring;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{
    evaluate, motif_transition_entropy, node_entropy, precision_at_k, repeated_event_ratio,
    shannon_entropy, sweep, train_model, EvalReport, ModelConfig, SweepRow, SweepTable,
};
pub use features::{build_feature_matrix, export_sparse, ColumnIndexing, FeatureMatrix};
pub use ingest::{
    chronological_split, parse_events, summary_stats, EdgeKey, Event, NodeId, SummaryStats,
    TemporalGraph, Timestamp,
};
pub use motif::{
    canonical_type, enumerate_types, InstanceId, MotifInstance, MotifType, MotifVocabulary,
    OpenMotifPool, TypeIndex,
};
pub use predictor::{
    init_state, sample_exponential, solve_cold, solve_hot, step_predict, Forecast, Forecaster,
    Prediction, PredictorState,
};
pub use scoring::{
    cold_log_posterior, hot_log_posterior, log_waiting_likelihood, EventKind, Score,
};
pub use stats::{build_stats, compute_delta_c, intensity, MtmStats, StatsParams};
