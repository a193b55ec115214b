//! Generative next-k event forecasting.
//!
//! Each step draws an exponential waiting time at the global rate, prunes
//! the open-motif pool, then draws a cold/hot decision with probability
//! `p_cold`. A cold step emits the observed edge with the best cold score;
//! a hot step emits the best-scoring extension of an open instance. When a
//! hot step finds no feasible extension it falls back to a cold step.
//!
//! Randomness comes from a ChaCha8 stream seeded with `seed_from_u64`, two
//! draws per step in a fixed order: waiting time, then decision.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{EdgeKey, NodeId, TemporalGraph};
use crate::motif::{
    candidate_extensions, extend, extended_type, InstanceId, MotifInstance, OpenMotifPool,
    TypeIndex,
};
use crate::scoring::{cold_log_posterior, hot_log_posterior, EventKind, Score};
use crate::stats::{MtmStats, TransitionTracker};

/// Generator behind every forecast.
pub type ForecastRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ForecastRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform draw in `[0, 1)` from the top 53 bits of one `u64`.
fn unit_closed_open<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_NEG_53
}

/// Inverse-transform exponential sample for a uniform `u` in `(0, 1]`.
pub fn exponential_from_uniform(u: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate {lambda} must be positive"
        )));
    }
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform draw {u} outside (0, 1]"
        )));
    }
    Ok(-u.ln() / lambda)
}

pub fn sample_exponential<R: RngCore>(lambda: f64, rng: &mut R) -> Result<f64> {
    let u = 1.0 - unit_closed_open(rng);
    exponential_from_uniform(u, lambda)
}

/// One forecast event. Node ids are dense ids of the training graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub step: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub time: f64,
    pub kind: EventKind,
    pub source_type: Option<TypeIndex>,
    pub target_type: Option<TypeIndex>,
    pub score: f64,
    /// Set when the decision was hot but no extension was feasible.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastOptions {
    /// Refresh per-edge last-occurrence times with emitted events.
    pub update_last_occurrence: bool,
}

impl Default for ForecastOptions {
    fn default() -> Self {
        Self {
            update_last_occurrence: true,
        }
    }
}

/// Mutable state of one forecasting run.
#[derive(Debug, Clone)]
pub struct PredictorState {
    pub pool: OpenMotifPool,
    pub now: f64,
    /// Last occurrence of each observed edge, aligned with `stats.edges()`.
    edge_last: Vec<f64>,
    /// Last occurrence of forecast pairs that were never observed.
    new_pairs: HashMap<EdgeKey, f64>,
    pub rng: ForecastRng,
}

impl PredictorState {
    pub fn last_occurrence(&self, key: EdgeKey, stats: &MtmStats) -> Option<f64> {
        match stats.edge_position(key) {
            Some(i) => Some(self.edge_last[i]),
            None => self.new_pairs.get(&key).copied(),
        }
    }

    fn record(&mut self, key: EdgeKey, time: f64, stats: &MtmStats) {
        match stats.edge_position(key) {
            Some(i) => self.edge_last[i] = time,
            None => {
                self.new_pairs.insert(key, time);
            }
        }
    }
}

/// Replays the training stream to recover the pool open at its last event.
pub fn init_state(train: &TemporalGraph, stats: &MtmStats, seed: u64) -> PredictorState {
    let mut tracker = TransitionTracker::new(stats.vocab(), stats.delta_c());
    for e in train.events() {
        tracker.observe(e);
    }
    let mut pool = tracker.into_pool();
    let now = stats.t_max() as f64;
    pool.prune(now, stats.delta_c());
    PredictorState {
        pool,
        now,
        edge_last: stats.edges().iter().map(|e| e.last_time as f64).collect(),
        new_pairs: HashMap::new(),
        rng: seeded_rng(seed),
    }
}

const PARALLEL_EDGE_THRESHOLD: usize = 1 << 15;

/// Best cold edge; ties go to the smaller `(src, dst)`.
pub fn solve_cold(state: &PredictorState, stats: &MtmStats) -> Result<(EdgeKey, Score)> {
    let edges = stats.edges();
    if edges.is_empty() {
        return Err(Error::InvalidArgument("no observed edges".into()));
    }
    let score_at = |i: usize| -> Result<(usize, f64)> {
        let waiting = (state.now - state.edge_last[i]).max(0.0);
        let s = cold_log_posterior(edges[i].key, waiting, stats)?;
        Ok((i, s.log_posterior))
    };
    // edges are sorted, so the smaller index wins a tie
    let better = |a: (usize, f64), b: (usize, f64)| match a.1.total_cmp(&b.1) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if a.0 <= b.0 {
                a
            } else {
                b
            }
        }
    };
    let best = if edges.len() >= PARALLEL_EDGE_THRESHOLD {
        (0..edges.len())
            .into_par_iter()
            .map(score_at)
            .try_reduce_with(|a, b| Ok(better(a, b)))
            .expect("non-empty")?
    } else {
        let mut best = score_at(0)?;
        for i in 1..edges.len() {
            best = better(best, score_at(i)?);
        }
        best
    };
    Ok((
        edges[best.0].key,
        Score {
            log_posterior: best.1,
            kind: EventKind::Cold,
        },
    ))
}

/// Winning extension of an open instance.
#[derive(Debug, Clone, PartialEq)]
pub struct HotChoice {
    pub instance: InstanceId,
    pub source_type: TypeIndex,
    pub pair: (NodeId, NodeId),
    pub target_type: TypeIndex,
    pub score: Score,
}

/// Best extension over every open instance and every ordered pair of its
/// nodes. Ties prefer the more recent instance, then the smaller pair, then
/// the older instance handle.
pub fn solve_hot(state: &PredictorState, stats: &MtmStats) -> Result<Option<HotChoice>> {
    let vocab = stats.vocab();
    let max_size = stats.max_size();
    let mut best: Option<(HotChoice, f64)> = None;
    for (id, m) in state.pool.iter() {
        let waiting = (state.now - m.last_time).max(0.0);
        for (a, b) in candidate_extensions(m, max_size) {
            let Some(target) = extended_type(m, a, b, vocab) else {
                continue;
            };
            let score = hot_log_posterior(m.type_id, target, waiting, stats)?;
            if score.is_impossible() {
                continue;
            }
            let wins = match &best {
                None => true,
                Some((cur, cur_time)) => {
                    match score.log_posterior.total_cmp(&cur.score.log_posterior) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => match m.last_time.total_cmp(cur_time) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => (a, b, id) < (cur.pair.0, cur.pair.1, cur.instance),
                        },
                    }
                }
            };
            if wins {
                best = Some((
                    HotChoice {
                        instance: id,
                        source_type: m.type_id,
                        pair: (a, b),
                        target_type: target,
                        score,
                    },
                    m.last_time,
                ));
            }
        }
    }
    Ok(best.map(|(c, _)| c))
}

/// Stepwise forecaster over frozen statistics.
#[derive(Debug, Clone)]
pub struct Forecaster<'s> {
    stats: &'s MtmStats,
    state: PredictorState,
    options: ForecastOptions,
    step: usize,
    fallbacks: usize,
}

impl<'s> Forecaster<'s> {
    pub fn new(train: &TemporalGraph, stats: &'s MtmStats, seed: u64) -> Result<Self> {
        Self::with_options(train, stats, seed, ForecastOptions::default())
    }

    pub fn with_options(
        train: &TemporalGraph,
        stats: &'s MtmStats,
        seed: u64,
        options: ForecastOptions,
    ) -> Result<Self> {
        if stats.edges().is_empty() {
            return Err(Error::InvalidArgument("statistics contain no edges".into()));
        }
        Ok(Self {
            stats,
            state: init_state(train, stats, seed),
            options,
            step: 0,
            fallbacks: 0,
        })
    }

    pub fn state(&self) -> &PredictorState {
        &self.state
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    fn emit_cold(&mut self, fallback: bool) -> Result<Prediction> {
        let (key, score) = solve_cold(&self.state, self.stats)?;
        let now = self.state.now;
        self.state
            .pool
            .insert(MotifInstance::single(key.src, key.dst, now));
        if self.options.update_last_occurrence {
            self.state.record(key, now, self.stats);
        }
        Ok(Prediction {
            step: self.step,
            src: key.src,
            dst: key.dst,
            time: now,
            kind: EventKind::Cold,
            source_type: None,
            target_type: None,
            score: score.log_posterior,
            fallback,
        })
    }

    /// Produces the next event.
    pub fn step(&mut self) -> Result<Prediction> {
        let stats = self.stats;
        let dt = sample_exponential(stats.lambda_global(), &mut self.state.rng)?;
        self.state.now += dt;
        self.state.pool.prune(self.state.now, stats.delta_c());
        let cold = unit_closed_open(&mut self.state.rng) < stats.p_cold();

        let prediction = if cold {
            self.emit_cold(false)?
        } else if let Some(choice) = solve_hot(&self.state, stats)? {
            let now = self.state.now;
            let (a, b) = choice.pair;
            let m = self
                .state
                .pool
                .get(choice.instance)
                .expect("chosen instance is pooled");
            let next = extend(m, a, b, now, stats.vocab())?;
            debug_assert_eq!(next.type_id, choice.target_type);
            self.state.pool.replace(choice.instance, next);
            if self.options.update_last_occurrence {
                self.state.record(EdgeKey::new(a, b), now, stats);
            }
            Prediction {
                step: self.step,
                src: a,
                dst: b,
                time: now,
                kind: EventKind::Hot,
                source_type: Some(choice.source_type),
                target_type: Some(choice.target_type),
                score: choice.score.log_posterior,
                fallback: false,
            }
        } else {
            self.fallbacks += 1;
            self.emit_cold(true)?
        };
        self.step += 1;
        Ok(prediction)
    }
}

/// Result of [`step_predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub predictions: Vec<Prediction>,
    pub fallbacks: usize,
}

/// Forecasts the next `n` events after the training stream.
pub fn step_predict(
    train: &TemporalGraph,
    stats: &MtmStats,
    n: usize,
    seed: u64,
) -> Result<Forecast> {
    step_predict_with(train, stats, n, seed, ForecastOptions::default())
}

pub fn step_predict_with(
    train: &TemporalGraph,
    stats: &MtmStats,
    n: usize,
    seed: u64,
    options: ForecastOptions,
) -> Result<Forecast> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "prediction count must be at least 1".into(),
        ));
    }
    let mut f = Forecaster::with_options(train, stats, seed, options)?;
    let predictions = (0..n).map(|_| f.step()).collect::<Result<Vec<_>>>()?;
    Ok(Forecast {
        predictions,
        fallbacks: f.fallbacks(),
    })
}

/// Writes `step,src,dst,time,kind,score` rows with original node ids.
pub fn write_predictions_csv<W: Write>(
    predictions: &[Prediction],
    g: &TemporalGraph,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "step,src,dst,time,kind,score")?;
    for p in predictions {
        writeln!(
            out,
            "{},{},{},{:.6},{},{:.6}",
            p.step,
            g.original_id(p.src),
            g.original_id(p.dst),
            p.time,
            p.kind.as_str(),
            p.score
        )?;
    }
    Ok(())
}
