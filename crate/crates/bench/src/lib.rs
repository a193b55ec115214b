//! Shared fixtures for the forecasting benchmarks.

use motifcast::synth::{synthetic_stream, SynthConfig};
use motifcast::{chronological_split, train_model, ModelConfig, MtmStats, TemporalGraph};

/// Training split and statistics of a synthetic stream.
pub fn fixture(events: usize, nodes: u32) -> (TemporalGraph, MtmStats) {
    let g = synthetic_stream(&SynthConfig {
        events,
        nodes,
        ..SynthConfig::messaging()
    })
    .expect("synthetic stream");
    let (train, _) = chronological_split(&g, 0.2).expect("split");
    let stats = train_model(&train, &ModelConfig::default()).expect("stats");
    (train, stats)
}
