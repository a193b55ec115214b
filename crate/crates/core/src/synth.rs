//! Seeded synthetic message streams for benchmarks and smoke runs.
//!
//! The generator mixes replies, repeats of earlier pairs and fresh pairs
//! drawn with preferential attachment, over exponential inter-event gaps.

use rand::Rng;

use crate::error::Result;
use crate::ingest::{NodeId, TemporalGraph, Timestamp};
use crate::predictor::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub nodes: u32,
    pub events: usize,
    /// Mean gap between consecutive events, in seconds.
    pub mean_gap: f64,
    pub reply_prob: f64,
    pub repeat_prob: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Roughly the size and span of a campus messaging network.
    pub fn messaging() -> Self {
        Self {
            nodes: 1_899,
            events: 59_835,
            mean_gap: 280.0,
            reply_prob: 0.3,
            repeat_prob: 0.3,
            seed: 1,
        }
    }
}

pub fn synthetic_stream(config: &SynthConfig) -> Result<TemporalGraph> {
    let mut rng = seeded_rng(config.seed);
    let n = config.nodes.max(2);
    let mut triples: Vec<(NodeId, NodeId, Timestamp)> = Vec::with_capacity(config.events);
    let mut endpoints: Vec<NodeId> = Vec::new();
    let mut t = 0.0f64;
    while triples.len() < config.events {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() * config.mean_gap;
        let x: f64 = rng.random();
        let (src, dst) = if !triples.is_empty() && x < config.reply_prob {
            let back = rng.random_range(0..triples.len().min(20));
            let (a, b, _) = triples[triples.len() - 1 - back];
            (b, a)
        } else if !triples.is_empty() && x < config.reply_prob + config.repeat_prob {
            let (a, b, _) = triples[rng.random_range(0..triples.len())];
            (a, b)
        } else {
            let pick = |rng: &mut _| -> NodeId {
                if !endpoints.is_empty() && rand::Rng::random_bool(rng, 0.6) {
                    endpoints[rand::Rng::random_range(rng, 0..endpoints.len())]
                } else {
                    rand::Rng::random_range(rng, 0..n)
                }
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            (a, b)
        };
        if src == dst {
            continue;
        }
        endpoints.push(src);
        endpoints.push(dst);
        triples.push((src, dst, t.round() as Timestamp));
    }
    TemporalGraph::from_dense_triples(triples)
}
